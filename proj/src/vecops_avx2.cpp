// AVX2/FMA kernels. This TU is compiled with -mavx2 -mfma; callers reach it
// only through the runtime dispatch in vecops.cpp after a cpuid check.

#include "xmem/vecops.hpp"

#include <immintrin.h>

namespace xmem::vecops::avx2 {

namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d shuf = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

} // namespace

double dot(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = a.size();
    std::size_t i = 0;
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(&a[i]), _mm256_loadu_pd(&b[i]), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(&a[i + 4]), _mm256_loadu_pd(&b[i + 4]), acc1);
    }
    for (; i + 4 <= n; i += 4)
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(&a[i]), _mm256_loadu_pd(&b[i]), acc0);
    double sum = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) sum += a[i] * b[i];
    return sum;
}

double squared_norm(std::span<const double> v) {
    const std::size_t n = v.size();
    std::size_t i = 0;
    __m256d acc = _mm256_setzero_pd();
    for (; i + 4 <= n; i += 4) {
        __m256d x = _mm256_loadu_pd(&v[i]);
        acc = _mm256_fmadd_pd(x, x, acc);
    }
    double sum = hsum(acc);
    for (; i < n; ++i) sum += v[i] * v[i];
    return sum;
}

void add_inplace(std::span<double> acc, std::span<const double> v) {
    const std::size_t n = acc.size();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d sum = _mm256_add_pd(_mm256_loadu_pd(&acc[i]), _mm256_loadu_pd(&v[i]));
        _mm256_storeu_pd(&acc[i], sum);
    }
    for (; i < n; ++i) acc[i] += v[i];
}

void scale_inplace(std::span<double> v, double s) {
    const std::size_t n = v.size();
    const __m256d factor = _mm256_set1_pd(s);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(&v[i], _mm256_mul_pd(_mm256_loadu_pd(&v[i]), factor));
    for (; i < n; ++i) v[i] *= s;
}

} // namespace xmem::vecops::avx2
