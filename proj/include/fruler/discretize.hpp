#pragma once

#include <span>
#include <vector>

#include "fruler/dataset.hpp"

namespace fruler {

// Nested split-point sets C^1..C^chosen_max for one variable, found by
// top-down search minimizing piecewise-linear regression error and scored
// with BIC. Each granularity adds exactly one split to the previous one.
struct GranularityLadder {
    std::size_t variable = 0;
    // entry g-1 holds C^g, sorted, domain endpoints included
    std::vector<std::vector<double>> splits_per_granularity;
    int chosen_max = 1;
    std::vector<double> bic_trace;  // BIC of every generated granularity

    const std::vector<double>& splits(int granularity) const {
        return splits_per_granularity[static_cast<std::size_t>(granularity) - 1];
    }
};

// Every interval produced by a split must keep at least this many examples
// so the per-interval least-squares fits stay meaningful.
inline constexpr std::size_t kMinIntervalSize = 30;

// Simple least squares y = a + b*x; returns the mean squared residual.
// All-identical x falls back to the intercept-only fit (variance of y).
double interval_fit_mse(std::span<const double> xs, std::span<const double> ys);

// Weighted total squared error of fitting each side of c separately:
// SE(left)*|left|/|X| + SE(right)*|right|/|X|.
double linear_error(std::span<const double> xs, std::span<const double> ys, double c);

GranularityLadder discretize_variable(std::span<const double> xs, std::span<const double> ys);

// One ladder per input variable of d.
std::vector<GranularityLadder> discretize_all(const Dataset& d);

}  // namespace fruler
