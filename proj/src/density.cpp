#include "fruler/density.hpp"

#include <algorithm>
#include <cmath>

namespace fruler {

namespace {

constexpr std::size_t kGridPoints = 512;
constexpr double kInvSqrt2Pi = 0.3989422804014326779399461;

int label_of(const std::vector<double>& splits, double y) {
    int c = 0;
    for (double s : splits)
        if (s < y) ++c;
    return c;
}

double sample_median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

double scott_bandwidth(std::span<const double> values) {
    const std::size_t n = values.size();
    if (n < 2) throw std::invalid_argument("scott_bandwidth needs at least 2 values");
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double sigma = std::sqrt(ss / static_cast<double>(n - 1));
    if (sigma == 0.0)
        throw DegenerateDistributionError("all output values are equal; KDE bandwidth undefined");
    return sigma * std::pow(static_cast<double>(n), -0.2);
}

std::vector<double> estimate_density(std::span<const double> values, double bandwidth,
                                     std::span<const double> grid) {
    if (grid.empty()) throw std::invalid_argument("estimate_density: empty grid");
    if (bandwidth <= 0.0) throw std::invalid_argument("estimate_density: bandwidth must be > 0");
    std::vector<double> out(grid.size(), 0.0);
    const double inv_h = 1.0 / bandwidth;
    const double norm = kInvSqrt2Pi * inv_h / static_cast<double>(values.size());
    for (std::size_t g = 0; g < grid.size(); ++g) {
        double acc = 0.0;
        for (double y : values) {
            const double u = (grid[g] - y) * inv_h;
            acc += std::exp(-0.5 * u * u);
        }
        out[g] = acc * norm;
    }
    return out;
}

DensityLabels find_output_splits(std::span<const double> values) {
    if (values.size() < 2) throw std::invalid_argument("find_output_splits needs at least 2 values");
    const double h = scott_bandwidth(values);
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it - 3.0 * h;
    const double hi = *hi_it + 3.0 * h;

    std::vector<double> grid(kGridPoints);
    const double step = (hi - lo) / static_cast<double>(kGridPoints - 1);
    for (std::size_t i = 0; i < kGridPoints; ++i) grid[i] = lo + step * static_cast<double>(i);

    const auto density = estimate_density(values, h, grid);

    DensityLabels result;
    for (std::size_t i = 1; i + 1 < kGridPoints; ++i) {
        if (density[i] < density[i - 1] && density[i] < density[i + 1])
            result.split_values.push_back(grid[i]);
    }

    if (result.split_values.empty()) {
        // unimodal output: split at the median so the ccnn relation still
        // gets two classes
        double s = sample_median(std::vector<double>(values.begin(), values.end()));
        bool above = false;
        for (double v : values)
            if (v > s) above = true;
        if (!above) s = 0.5 * (*lo_it + *hi_it);
        result.split_values.push_back(s);
    }

    result.class_count = static_cast<int>(result.split_values.size()) + 1;
    result.labels.reserve(values.size());
    for (double y : values) result.labels.push_back(label_of(result.split_values, y));
    return result;
}

}  // namespace fruler
