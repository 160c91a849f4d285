#include "fruler/fuzzy.hpp"

#include <algorithm>
#include <stdexcept>

namespace fruler {

FuzzyPartition build_partition(std::span<const double> splits, double fuzziness) {
    if (splits.size() < 2) throw std::invalid_argument("build_partition: need at least 2 splits");
    if (fuzziness < 0.0 || fuzziness > 1.0)
        throw std::invalid_argument("build_partition: fuzziness must be in [0, 1]");
    for (std::size_t i = 1; i < splits.size(); ++i)
        if (!(splits[i] > splits[i - 1]) && splits.size() > 2)
            throw std::invalid_argument("build_partition: duplicate split values");

    FuzzyPartition p;
    p.granularity = static_cast<int>(splits.size()) - 1;
    p.splits.assign(splits.begin(), splits.end());
    p.fuzziness = fuzziness;

    // flank half-width at each inner split: F * (narrower adjacent gap) / 2;
    // zero at the domain ends so the outer flanks stay vertical
    const std::size_t g = static_cast<std::size_t>(p.granularity);
    std::vector<double> w(g + 1, 0.0);
    for (std::size_t j = 1; j < g; ++j)
        w[j] = fuzziness * std::min(splits[j] - splits[j - 1], splits[j + 1] - splits[j]) * 0.5;

    p.labels.resize(g);
    for (std::size_t j = 0; j < g; ++j) {
        p.labels[j] = {splits[j] - w[j], splits[j] + w[j], splits[j + 1] - w[j + 1],
                       splits[j + 1] + w[j + 1]};
    }
    return p;
}

double membership(const FuzzyPartition& p, int label, double x) {
    if (label < 0 || label >= p.granularity)
        throw std::invalid_argument("membership: label index out of range");
    x = std::clamp(x, p.domain_lo(), p.domain_hi());
    const Trapezoid& t = p.labels[static_cast<std::size_t>(label)];
    const bool last = label == p.granularity - 1;

    if (x < t.a || x > t.d) return 0.0;
    // crisp right edge: a zero-width flank hands the boundary point to the
    // next label so the partition stays strong
    if (!last && t.c == t.d && x >= t.c) return 0.0;
    if (x < t.b) return (x - t.a) / (t.b - t.a);
    if (x <= t.c) return 1.0;
    if (x < t.d) return (t.d - x) / (t.d - t.c);
    return 0.0;  // x == t.d at the foot of a real flank
}

std::vector<double> apply_displacement(std::span<const double> splits, const Displacement& d) {
    if (d.alphas.size() + 2 != splits.size())
        throw std::invalid_argument("apply_displacement: alpha count must be inner split count");
    std::vector<double> out(splits.begin(), splits.end());
    for (std::size_t j = 1; j + 1 < splits.size(); ++j) {
        const double alpha = d.alphas[j - 1];
        if (alpha <= -0.5 || alpha >= 0.5)
            throw std::invalid_argument("apply_displacement: alpha outside (-0.5, 0.5)");
        out[j] = alpha >= 0.0 ? splits[j] + alpha * (splits[j + 1] - splits[j])
                              : splits[j] + alpha * (splits[j] - splits[j - 1]);
    }
    // |alpha| < 0.5 keeps the order; clamp anyway in case of fp edge cases
    for (std::size_t j = 1; j + 1 < out.size(); ++j) {
        if (out[j] <= out[j - 1] || out[j] >= out[j + 1]) {
            out[j] = std::min(0.5 * (out[j - 1] + out[j + 1]), out[j + 1] - 1e-12);
            if (out[j] <= out[j - 1]) out[j] = out[j - 1] + 1e-12;
        }
    }
    return out;
}

}  // namespace fruler
