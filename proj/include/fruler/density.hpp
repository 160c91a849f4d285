#pragma once

#include <span>
#include <stdexcept>
#include <vector>

namespace fruler {

class DegenerateDistributionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Class labels for the output variable, derived from the local minima of
// a Gaussian KDE of the outputs. Labels are monotone in y.
struct DensityLabels {
    std::vector<double> split_values;  // sorted
    std::vector<int> labels;           // labels[i] = #splits strictly below y_i
    int class_count = 0;               // |split_values| + 1
};

// Scott's rule for one dimension: sigma_hat * n^(-1/5), with the unbiased
// sample standard deviation.
double scott_bandwidth(std::span<const double> values);

// Gaussian KDE evaluated at each grid point: (1/(n h)) sum_i phi((g-y_i)/h).
std::vector<double> estimate_density(std::span<const double> values, double bandwidth,
                                     std::span<const double> grid);

// Splits at strict local minima of the KDE over a 512-point grid spanning
// [min-3h, max+3h]; falls back to a single split at the sample median when
// no strict minimum exists, so at least two classes always come out.
DensityLabels find_output_splits(std::span<const double> values);

}  // namespace fruler
