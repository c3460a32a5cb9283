// Compiled with -mavx2 -mfma; only reached after a CPUID check.
#include "tables.hpp"

#include <immintrin.h>

#include <cmath>

namespace ddica::simd::detail {
namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

// exp(x) = 2^k * exp(r), |r| <= ln2/2, degree-13 Taylor on r (truncation < 1e-17).
// Inputs below -708.3 flush to 0; std::exp would return a subnormal there.
inline __m256d exp_pd(__m256d x) {
    const __m256d lo_clip = _mm256_set1_pd(-708.3);
    const __m256d hi_clip = _mm256_set1_pd(709.0);
    const __m256d log2e = _mm256_set1_pd(1.4426950408889634074);
    const __m256d ln2_hi = _mm256_set1_pd(6.93147180369123816490e-01);
    const __m256d ln2_lo = _mm256_set1_pd(1.90821492927058770002e-10);

    const __m256d underflow = _mm256_cmp_pd(x, lo_clip, _CMP_LT_OQ);
    __m256d xc = _mm256_min_pd(_mm256_max_pd(x, lo_clip), hi_clip);

    __m256d k = _mm256_round_pd(_mm256_mul_pd(xc, log2e), _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_fnmadd_pd(k, ln2_hi, xc);
    r = _mm256_fnmadd_pd(k, ln2_lo, r);

    static constexpr double c[] = {
        1.0 / 6227020800.0, 1.0 / 479001600.0, 1.0 / 39916800.0, 1.0 / 3628800.0,
        1.0 / 362880.0,     1.0 / 40320.0,     1.0 / 5040.0,     1.0 / 720.0,
        1.0 / 120.0,        1.0 / 24.0,        1.0 / 6.0,        0.5,
        1.0,                1.0};
    __m256d p = _mm256_set1_pd(c[0]);
    for (int i = 1; i < 14; ++i) p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(c[i]));

    const __m128i ki = _mm256_cvtpd_epi32(k);
    __m256i bits = _mm256_cvtepi32_epi64(ki);
    bits = _mm256_slli_epi64(_mm256_add_epi64(bits, _mm256_set1_epi64x(1023)), 52);
    const __m256d result = _mm256_mul_pd(p, _mm256_castsi256_pd(bits));
    return _mm256_andnot_pd(underflow, result);
}

inline double exp_scalar_tail(double x) { return x < -708.3 ? 0.0 : std::exp(x); }

void gaussian_row(const double* x, std::size_t n, double xi, double scale, double* out) {
    const __m256d vxi = _mm256_set1_pd(xi);
    const __m256d vs = _mm256_set1_pd(scale);
    std::size_t m = 0;
    for (; m + 4 <= n; m += 4) {
        const __m256d d = _mm256_sub_pd(vxi, _mm256_loadu_pd(x + m));
        _mm256_storeu_pd(out + m, exp_pd(_mm256_mul_pd(vs, _mm256_mul_pd(d, d))));
    }
    for (; m < n; ++m) {
        const double d = xi - x[m];
        out[m] = exp_scalar_tail(scale * d * d);
    }
}

void hadamard(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

double dot(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4)
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

double kernel_grad_row(const double* g, const double* k, const double* x, double xi,
                       std::size_t n) {
    const __m256d vxi = _mm256_set1_pd(xi);
    __m256d acc = _mm256_setzero_pd();
    std::size_t m = 0;
    for (; m + 4 <= n; m += 4) {
        const __m256d gk = _mm256_mul_pd(_mm256_loadu_pd(g + m), _mm256_loadu_pd(k + m));
        acc = _mm256_fmadd_pd(gk, _mm256_sub_pd(vxi, _mm256_loadu_pd(x + m)), acc);
    }
    double s = hsum(acc);
    for (; m < n; ++m) s += g[m] * k[m] * (xi - x[m]);
    return s;
}

void exp_array(const double* in, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, exp_pd(_mm256_loadu_pd(in + i)));
    for (; i < n; ++i) out[i] = exp_scalar_tail(in[i]);
}

}  // namespace

const KernelTable avx2_table{Isa::avx2, gaussian_row, hadamard, dot, kernel_grad_row, exp_array};

}  // namespace ddica::simd::detail
