#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fruler/dataset.hpp"
#include "fruler/density.hpp"

namespace fruler {

// Directed 1NN graphs conditioned on class labels. Edge value -1 means no
// valid target exists (e.g. a class with a single member has no
// within-class neighbor).
struct CcnnGraphs {
    std::vector<int> gwc_edge;  // nearest same-class neighbor, by example index
    std::vector<int> gbc_edge;  // nearest other-class neighbor
    std::vector<int> gwc_indegree;
    std::vector<int> gbc_indegree;
    long total_gwc = 0;  // = number of gwc edges
    long total_gbc = 0;
};

struct SelectionResult {
    std::vector<std::size_t> selected;
    double reduction_pct = 0.0;
    double error_increase = 0.0;
    std::size_t k0 = 0;
    int class_count = 0;
};

// Inputs min-max scaled to [0,1] per variable using the dataset's recorded
// bounds, so no variable dominates the Euclidean metric.
class ScaledInputs {
public:
    explicit ScaledInputs(const Dataset& d);
    std::size_t n() const { return n_; }
    std::size_t dim() const { return dim_; }
    const double* row(std::size_t i) const { return data_.data() + i * dim_; }

private:
    std::size_t n_ = 0;
    std::size_t dim_ = 0;
    std::vector<double> data_;
};

// Mean over e in `evaluate_on` of (y_nn - y_e)^2, where nn is e's nearest
// neighbor in `reference` \ {e} (scaled Euclidean, ties to the lowest
// example index).
double loo_1nn_mse(std::span<const std::size_t> reference, std::span<const std::size_t> evaluate_on,
                   const Dataset& d);

CcnnGraphs build_ccnn_graphs(const Dataset& d, const DensityLabels& labels,
                             std::span<const std::size_t> subset);

// K-divergence of the in-degree distributions, with 0*log(0/x) := 0.
double score(std::size_t example, const CcnnGraphs& g);

std::vector<std::size_t> class_conditional_select(const Dataset& d, const DensityLabels& labels);

std::vector<std::size_t> thin_out(const Dataset& d, const DensityLabels& labels,
                                  std::span<const std::size_t> s);

// Full pipeline: output density labeling -> CC selection -> Thin-out.
SelectionResult select_instances(const Dataset& d, std::uint64_t seed);

}  // namespace fruler
