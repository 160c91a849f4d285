// AVX2 kernel variants. This translation unit is compiled with -mavx2;
// callers must check avx2::available() before dispatching here.
//
// No FMA: mul followed by add keeps each elementary operation identical
// to the scalar reference, so scalar and AVX2 results are bit-equal.

#include "fruler/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>
#define FRULER_HAVE_AVX2_TU 1
#else
#define FRULER_HAVE_AVX2_TU 0
#endif

namespace fruler::kernels::avx2 {

bool available() {
#if FRULER_HAVE_AVX2_TU
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

#if FRULER_HAVE_AVX2_TU

namespace {

inline double reduce_lanes(__m256d acc) {
    alignas(32) double lane[4];
    _mm256_store_pd(lane, acc);
    return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

}  // namespace

double dot(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d va = _mm256_loadu_pd(a + i);
        const __m256d vb = _mm256_loadu_pd(b + i);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(va, vb));
    }
    double total = reduce_lanes(acc);
    for (; i < n; ++i) total += a[i] * b[i];
    return total;
}

double squared_distance(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d va = _mm256_loadu_pd(a + i);
        const __m256d vb = _mm256_loadu_pd(b + i);
        const __m256d d = _mm256_sub_pd(va, vb);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
    }
    double total = reduce_lanes(acc);
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        total += d * d;
    }
    return total;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vx = _mm256_loadu_pd(x + i);
        const __m256d vy = _mm256_loadu_pd(y + i);
        _mm256_storeu_pd(y + i, _mm256_add_pd(vy, _mm256_mul_pd(va, vx)));
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

#else

double dot(const double* a, const double* b, std::size_t n) {
    return scalar::dot(a, b, n);
}

double squared_distance(const double* a, const double* b, std::size_t n) {
    return scalar::squared_distance(a, b, n);
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    scalar::axpy(alpha, x, y, n);
}

#endif

}  // namespace fruler::kernels::avx2
