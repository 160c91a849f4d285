#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

// All randomness in the pipeline flows from one master seed through named
// substreams, so stages (folds, EA, SGD shuffles, ...) stay reproducible
// independently of each other. Distributions are hand-rolled on top of
// mt19937_64 because the std:: distribution algorithms are
// implementation-defined and would break cross-platform reproducibility.

namespace fruler {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace detail

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    static Rng substream(std::uint64_t master, std::string_view name,
                         std::uint64_t a = 0, std::uint64_t b = 0) {
        std::uint64_t h = detail::splitmix64(master ^ detail::fnv1a(name));
        h = detail::splitmix64(h ^ a);
        h = detail::splitmix64(h ^ b);
        return Rng(h);
    }

    std::uint64_t next() { return engine_(); }

    // uniform in [0, 1)
    double uniform01() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + uniform01() * (hi - lo); }

    // uniform integer in [0, n), rejection-sampled so the mapping is exact
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = ~std::uint64_t{0} - ~std::uint64_t{0} % n;
        std::uint64_t v = next();
        while (v >= limit) v = next();
        return v % n;
    }

    // uniform integer in [lo, hi] inclusive
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo + 1)));
    }

    double normal(double mu = 0.0, double sigma = 1.0) {
        // Box-Muller, no spare caching
        const double u1 = (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53;
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return mu + sigma * r * std::cos(6.283185307179586476925286766559 * u2);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace fruler
