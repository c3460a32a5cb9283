#pragma once

#include "ddica/simd/kernels.hpp"

namespace ddica::simd::detail {

extern const KernelTable scalar_table;

#if defined(__x86_64__) || defined(_M_X64)
#define DDICA_HAVE_AVX2_TU 1
extern const KernelTable avx2_table;
#endif

}  // namespace ddica::simd::detail
