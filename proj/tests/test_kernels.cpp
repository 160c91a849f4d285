#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "fruler/kernels.hpp"
#include "fruler/rng.hpp"

using namespace fruler;

namespace {

std::vector<double> random_vec(std::size_t n, Rng& rng, double lo = -10.0, double hi = 10.0) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(lo, hi);
    return v;
}

}  // namespace

TEST_CASE("scalar and avx2 kernels are bit-identical") {
    if (!kernels::avx2::available()) {
        MESSAGE("AVX2 not available on this CPU; skipping equivalence checks");
        return;
    }
    Rng rng = Rng::substream(7, "kernel-equivalence");
    // sizes straddling the vector width, including tails
    for (std::size_t n : {0u, 1u, 2u, 3u, 4u, 5u, 7u, 8u, 15u, 16u, 33u, 100u, 257u}) {
        for (int rep = 0; rep < 20; ++rep) {
            const auto a = random_vec(n, rng);
            const auto b = random_vec(n, rng);
            CHECK(kernels::scalar::dot(a.data(), b.data(), n) ==
                  kernels::avx2::dot(a.data(), b.data(), n));
            CHECK(kernels::scalar::squared_distance(a.data(), b.data(), n) ==
                  kernels::avx2::squared_distance(a.data(), b.data(), n));
            auto y1 = random_vec(n, rng);
            auto y2 = y1;
            const double alpha = rng.uniform(-2.0, 2.0);
            kernels::scalar::axpy(alpha, a.data(), y1.data(), n);
            kernels::avx2::axpy(alpha, a.data(), y2.data(), n);
            CHECK(y1 == y2);
        }
    }
}

TEST_CASE("dispatched kernels match the scalar reference") {
    Rng rng = Rng::substream(11, "kernel-dispatch");
    const auto a = random_vec(37, rng);
    const auto b = random_vec(37, rng);
    CHECK(kernels::dot(a.data(), b.data(), 37) == kernels::scalar::dot(a.data(), b.data(), 37));
    CHECK(kernels::squared_distance(a.data(), b.data(), 37) ==
          kernels::scalar::squared_distance(a.data(), b.data(), 37));
}

TEST_CASE("kernel values agree with naive formulas") {
    const std::vector<double> a = {1.0, 2.0, 3.0, 4.0, 5.0};
    const std::vector<double> b = {2.0, 0.0, 1.0, -1.0, 3.0};
    CHECK(kernels::scalar::dot(a.data(), b.data(), 5) == doctest::Approx(16.0));
    CHECK(kernels::scalar::squared_distance(a.data(), b.data(), 5) ==
          doctest::Approx(1.0 + 4.0 + 4.0 + 25.0 + 4.0));
    std::vector<double> y = {1.0, 1.0, 1.0, 1.0, 1.0};
    kernels::scalar::axpy(2.0, a.data(), y.data(), 5);
    CHECK(y == std::vector<double>{3.0, 5.0, 7.0, 9.0, 11.0});
}

TEST_CASE("backend override falls back when unsupported") {
    const auto original = kernels::active_backend();
    kernels::set_backend(kernels::Backend::Scalar);
    CHECK(kernels::active_backend() == kernels::Backend::Scalar);
    kernels::set_backend(kernels::Backend::Avx2);
    if (kernels::avx2::available())
        CHECK(kernels::active_backend() == kernels::Backend::Avx2);
    else
        CHECK(kernels::active_backend() == kernels::Backend::Scalar);
    kernels::set_backend(original);
}
