#pragma once

#include <span>
#include <vector>

namespace fruler {

// Trapezoid corners: support-left, kernel-left, kernel-right, support-right.
struct Trapezoid {
    double a = 0.0, b = 0.0, c = 0.0, d = 0.0;
};

// Strong fuzzy partition over [splits.front(), splits.back()]: adjacent
// flanks are symmetric about each inner split, so memberships sum to 1 at
// every domain point. Fuzziness 0 gives crisp intervals; fuzziness 1 gives
// the smallest kernels (flank half-width = half the narrower gap).
struct FuzzyPartition {
    int granularity = 1;        // number of labels
    std::vector<double> splits;  // granularity + 1 points, domain ends included
    double fuzziness = 1.0;
    std::vector<Trapezoid> labels;

    double domain_lo() const { return splits.front(); }
    double domain_hi() const { return splits.back(); }
};

struct Displacement {
    std::vector<double> alphas;  // one per inner split, each in (-0.5, 0.5)
};

FuzzyPartition build_partition(std::span<const double> splits, double fuzziness);

// Trapezoid evaluation; x outside the domain is clamped to the ends.
double membership(const FuzzyPartition& p, int label, double x);

// Shift inner splits: positive alpha moves toward the right neighbor by
// alpha * (right gap), negative toward the left by |alpha| * (left gap).
// Neighbors are taken from the original split list.
std::vector<double> apply_displacement(std::span<const double> splits, const Displacement& d);

}  // namespace fruler
