#include "tables.hpp"

#include <cstdlib>
#include <stdexcept>
#include <string>

namespace ddica::simd {

bool isa_supported(Isa isa) noexcept {
    switch (isa) {
        case Isa::scalar:
            return true;
        case Isa::avx2:
#if defined(DDICA_HAVE_AVX2_TU) && (defined(__GNUC__) || defined(__clang__))
            return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
            return false;
#endif
    }
    return false;
}

std::string_view isa_name(Isa isa) noexcept {
    return isa == Isa::avx2 ? "avx2" : "scalar";
}

const KernelTable& kernels(Isa isa) {
    if (!isa_supported(isa))
        throw std::runtime_error("simd: instruction set not supported on this CPU: " +
                                 std::string(isa_name(isa)));
#ifdef DDICA_HAVE_AVX2_TU
    if (isa == Isa::avx2) return detail::avx2_table;
#endif
    return detail::scalar_table;
}

namespace {

const KernelTable& select() {
    if (const char* env = std::getenv("DDICA_SIMD")) {
        const std::string v(env);
        if (v == "scalar") return kernels(Isa::scalar);
        if (v == "avx2") return kernels(Isa::avx2);
    }
    return isa_supported(Isa::avx2) ? kernels(Isa::avx2) : kernels(Isa::scalar);
}

}  // namespace

const KernelTable& kernels() {
    static const KernelTable& table = select();
    return table;
}

}  // namespace ddica::simd
