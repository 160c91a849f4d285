#pragma once

// Shared test fixtures: in-memory dataset construction and the Friedman #1
// synthetic benchmark.

#include <cstdint>
#include <string>
#include <vector>

#include "fruler/dataset.hpp"
#include "fruler/rng.hpp"

namespace testutil {

inline fruler::Dataset make_dataset(const std::vector<std::vector<double>>& rows,
                                    const std::vector<double>& ys,
                                    const std::string& name = "test") {
    const std::size_t p = rows.empty() ? 0 : rows[0].size();
    std::vector<fruler::VariableMeta> inputs;
    for (std::size_t j = 0; j < p; ++j) {
        double lo = rows[0][j], hi = rows[0][j];
        for (const auto& r : rows) {
            lo = std::min(lo, r[j]);
            hi = std::max(hi, r[j]);
        }
        inputs.push_back({"X" + std::to_string(j + 1), lo, hi});
    }
    double ylo = ys[0], yhi = ys[0];
    for (double y : ys) {
        ylo = std::min(ylo, y);
        yhi = std::max(yhi, y);
    }
    std::vector<double> xs;
    xs.reserve(rows.size() * p);
    for (const auto& r : rows) xs.insert(xs.end(), r.begin(), r.end());
    return fruler::Dataset(name, std::move(inputs), {"Y", ylo, yhi}, std::move(xs),
                           std::vector<double>(ys));
}

// Friedman #1: y = 10 sin(pi x1 x2) + 20 (x3 - 0.5)^2 + 10 x4 + 5 x5 + noise
inline fruler::Dataset friedman(std::size_t n, std::uint64_t seed, double noise_sigma = 1.0) {
    fruler::Rng rng = fruler::Rng::substream(seed, "friedman");
    std::vector<std::vector<double>> rows;
    std::vector<double> ys;
    rows.reserve(n);
    ys.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> x(5);
        for (double& v : x) v = rng.uniform01();
        const double y = 10.0 * std::sin(3.14159265358979323846 * x[0] * x[1]) +
                         20.0 * (x[2] - 0.5) * (x[2] - 0.5) + 10.0 * x[3] + 5.0 * x[4] +
                         rng.normal(0.0, noise_sigma);
        rows.push_back(std::move(x));
        ys.push_back(y);
    }
    return make_dataset(rows, ys, "friedman");
}

}  // namespace testutil
