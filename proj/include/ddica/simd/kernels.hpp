#pragma once

// Data-parallel inner loops of the estimator. Every kernel exists as a scalar
// reference and as an AVX2+FMA variant; the variant is chosen once at runtime
// from CPUID (override with DDICA_SIMD=scalar|avx2).

#include <cstddef>
#include <string_view>

namespace ddica::simd {

enum class Isa { scalar, avx2 };

struct KernelTable {
    Isa isa;
    // out[m] = exp(scale * (xi - x[m])^2)
    void (*gaussian_row)(const double* x, std::size_t n, double xi, double scale, double* out);
    // out[i] = a[i] * b[i]; out may alias a or b
    void (*hadamard)(const double* a, const double* b, double* out, std::size_t n);
    double (*dot)(const double* a, const double* b, std::size_t n);
    // sum_m g[m] * k[m] * (xi - x[m])
    double (*kernel_grad_row)(const double* g, const double* k, const double* x, double xi,
                              std::size_t n);
    // out[i] = exp(in[i])
    void (*exp)(const double* in, double* out, std::size_t n);
};

bool isa_supported(Isa isa) noexcept;
std::string_view isa_name(Isa isa) noexcept;

// Table for a specific instruction set; throws std::runtime_error if the CPU lacks it.
const KernelTable& kernels(Isa isa);

// Table selected for this process.
const KernelTable& kernels();

}  // namespace ddica::simd
