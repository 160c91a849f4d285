#include "fruler/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

namespace fruler::kernels {

namespace {

Backend detect() {
    if (const char* env = std::getenv("FRULER_SIMD")) {
        if (std::strcmp(env, "scalar") == 0) return Backend::Scalar;
        if (std::strcmp(env, "avx2") == 0 && avx2::available()) return Backend::Avx2;
        // "auto" or anything unrecognized falls through to detection
    }
    return avx2::available() ? Backend::Avx2 : Backend::Scalar;
}

std::atomic<Backend>& backend_slot() {
    static std::atomic<Backend> slot{detect()};
    return slot;
}

}  // namespace

Backend active_backend() { return backend_slot().load(std::memory_order_relaxed); }

void set_backend(Backend b) {
    if (b == Backend::Avx2 && !avx2::available()) b = Backend::Scalar;
    backend_slot().store(b, std::memory_order_relaxed);
}

const char* backend_name(Backend b) {
    return b == Backend::Avx2 ? "avx2" : "scalar";
}

double dot(const double* a, const double* b, std::size_t n) {
    return active_backend() == Backend::Avx2 ? avx2::dot(a, b, n) : scalar::dot(a, b, n);
}

double squared_distance(const double* a, const double* b, std::size_t n) {
    return active_backend() == Backend::Avx2 ? avx2::squared_distance(a, b, n)
                                             : scalar::squared_distance(a, b, n);
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    if (active_backend() == Backend::Avx2)
        avx2::axpy(alpha, x, y, n);
    else
        scalar::axpy(alpha, x, y, n);
}

}  // namespace fruler::kernels
