#include "tables.hpp"

#include <cmath>

namespace ddica::simd::detail {
namespace {

void gaussian_row(const double* x, std::size_t n, double xi, double scale, double* out) {
    for (std::size_t m = 0; m < n; ++m) {
        const double d = xi - x[m];
        out[m] = std::exp(scale * d * d);
    }
}

void hadamard(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

double dot(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

double kernel_grad_row(const double* g, const double* k, const double* x, double xi,
                       std::size_t n) {
    double s = 0.0;
    for (std::size_t m = 0; m < n; ++m) s += g[m] * k[m] * (xi - x[m]);
    return s;
}

void exp_array(const double* in, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(in[i]);
}

}  // namespace

const KernelTable scalar_table{Isa::scalar, gaussian_row, hadamard, dot, kernel_grad_row,
                               exp_array};

}  // namespace ddica::simd::detail
