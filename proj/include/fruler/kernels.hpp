#pragma once

#include <cstddef>

// Arithmetic inner-loop kernels. Every kernel has a scalar reference
// implementation and, on x86-64 with AVX2, a vectorized variant. Both
// variants use the same 4-lane accumulation order, so results are
// bit-identical and the backend choice never changes program output.

namespace fruler::kernels {

enum class Backend { Scalar, Avx2 };

// Active backend, resolved once: AVX2 when the CPU supports it, unless
// the FRULER_SIMD environment variable ("scalar"/"avx2"/"auto") says
// otherwise.
Backend active_backend();
void set_backend(Backend b);
const char* backend_name(Backend b);

double dot(const double* a, const double* b, std::size_t n);
double squared_distance(const double* a, const double* b, std::size_t n);
// y += alpha * x
void axpy(double alpha, const double* x, double* y, std::size_t n);

namespace scalar {

// Reference semantics: 4 independent accumulators over stride-4 element
// groups, combined as (acc0+acc1)+(acc2+acc3), scalar tail appended last.
// The AVX2 variants reproduce this order lane for lane.
inline double dot(const double* a, const double* b, std::size_t n) {
    double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 += a[i] * b[i];
        acc1 += a[i + 1] * b[i + 1];
        acc2 += a[i + 2] * b[i + 2];
        acc3 += a[i + 3] * b[i + 3];
    }
    double total = (acc0 + acc1) + (acc2 + acc3);
    for (; i < n; ++i) total += a[i] * b[i];
    return total;
}

inline double squared_distance(const double* a, const double* b, std::size_t n) {
    double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const double d0 = a[i] - b[i];
        const double d1 = a[i + 1] - b[i + 1];
        const double d2 = a[i + 2] - b[i + 2];
        const double d3 = a[i + 3] - b[i + 3];
        acc0 += d0 * d0;
        acc1 += d1 * d1;
        acc2 += d2 * d2;
        acc3 += d3 * d3;
    }
    double total = (acc0 + acc1) + (acc2 + acc3);
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        total += d * d;
    }
    return total;
}

inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace scalar

namespace avx2 {

bool available();
double dot(const double* a, const double* b, std::size_t n);
double squared_distance(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);

}  // namespace avx2

}  // namespace fruler::kernels
