#include "fruler/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "fruler/kernels.hpp"

namespace fruler {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// (distance, index) lexicographic order implements the lowest-index tie rule.
inline bool closer(double d_new, std::size_t i_new, double d_old, std::size_t i_old) {
    return d_new < d_old || (d_new == d_old && i_new < i_old);
}

// Incremental 1NN tracker: per query keeps the two nearest reference points
// (self excluded), so growing the reference set by one point costs O(n)
// distance evaluations instead of a full rebuild.
class NearestTracker {
public:
    NearestTracker(const ScaledInputs& pts, const Dataset& d)
        : pts_(pts),
          d_(d),
          best_(d.n(), {kInf, SIZE_MAX}),
          second_(d.n(), {kInf, SIZE_MAX}) {}

    void add_reference(std::size_t r) {
        const double* pr = pts_.row(r);
        const std::size_t dim = pts_.dim();
        for (std::size_t e = 0; e < d_.n(); ++e) {
            if (e == r) continue;
            const double dist = kernels::squared_distance(pts_.row(e), pr, dim);
            auto& b = best_[e];
            auto& s = second_[e];
            if (closer(dist, r, b.first, b.second)) {
                s = b;
                b = {dist, r};
            } else if (closer(dist, r, s.first, s.second)) {
                s = {dist, r};
            }
        }
    }

    // Mean squared 1NN regression error over all examples of the dataset.
    double mse_over_all() const {
        double acc = 0.0;
        for (std::size_t e = 0; e < d_.n(); ++e) {
            const std::size_t nn = best_[e].second;
            if (nn == SIZE_MAX) return kInf;
            const double err = d_.y(nn) - d_.y(e);
            acc += err * err;
        }
        return acc / static_cast<double>(d_.n());
    }

private:
    const ScaledInputs& pts_;
    const Dataset& d_;
    std::vector<std::pair<double, std::size_t>> best_;
    std::vector<std::pair<double, std::size_t>> second_;
};

double subset_error(const ScaledInputs& pts, const Dataset& d,
                    std::span<const std::size_t> reference) {
    const std::size_t dim = pts.dim();
    double acc = 0.0;
    for (std::size_t e = 0; e < d.n(); ++e) {
        double best_d = kInf;
        std::size_t best_i = SIZE_MAX;
        for (std::size_t r : reference) {
            if (r == e) continue;
            const double dist = kernels::squared_distance(pts.row(e), pts.row(r), dim);
            if (closer(dist, r, best_d, best_i)) {
                best_d = dist;
                best_i = r;
            }
        }
        if (best_i == SIZE_MAX) return kInf;
        const double err = d.y(best_i) - d.y(e);
        acc += err * err;
    }
    return acc / static_cast<double>(d.n());
}

}  // namespace

ScaledInputs::ScaledInputs(const Dataset& d) : n_(d.n()), dim_(d.p()) {
    data_.resize(n_ * dim_);
    std::vector<double> lo(dim_), inv_range(dim_);
    for (std::size_t j = 0; j < dim_; ++j) {
        lo[j] = d.variables()[j].min;
        const double range = d.variables()[j].max - d.variables()[j].min;
        inv_range[j] = range > 0.0 ? 1.0 / range : 0.0;  // constant variable: no contribution
    }
    for (std::size_t i = 0; i < n_; ++i) {
        const auto row = d.x(i);
        for (std::size_t j = 0; j < dim_; ++j)
            data_[i * dim_ + j] = (row[j] - lo[j]) * inv_range[j];
    }
}

double loo_1nn_mse(std::span<const std::size_t> reference, std::span<const std::size_t> evaluate_on,
                   const Dataset& d) {
    const ScaledInputs pts(d);
    const std::size_t dim = pts.dim();
    double acc = 0.0;
    for (std::size_t e : evaluate_on) {
        double best_d = kInf;
        std::size_t best_i = SIZE_MAX;
        for (std::size_t r : reference) {
            if (r == e) continue;
            const double dist = kernels::squared_distance(pts.row(e), pts.row(r), dim);
            if (closer(dist, r, best_d, best_i)) {
                best_d = dist;
                best_i = r;
            }
        }
        if (best_i == SIZE_MAX)
            throw std::invalid_argument("loo_1nn_mse: reference set leaves an example with no neighbor");
        const double err = d.y(best_i) - d.y(e);
        acc += err * err;
    }
    return acc / static_cast<double>(evaluate_on.size());
}

CcnnGraphs build_ccnn_graphs(const Dataset& d, const DensityLabels& labels,
                             std::span<const std::size_t> subset) {
    const ScaledInputs pts(d);
    const std::size_t dim = pts.dim();
    CcnnGraphs g;
    g.gwc_edge.assign(d.n(), -1);
    g.gbc_edge.assign(d.n(), -1);
    g.gwc_indegree.assign(d.n(), 0);
    g.gbc_indegree.assign(d.n(), 0);

    for (std::size_t a : subset) {
        double best_wc = kInf, best_bc = kInf;
        std::size_t wc = SIZE_MAX, bc = SIZE_MAX;
        const int cls = labels.labels[a];
        for (std::size_t b : subset) {
            if (b == a) continue;
            const double dist = kernels::squared_distance(pts.row(a), pts.row(b), dim);
            if (labels.labels[b] == cls) {
                if (closer(dist, b, best_wc, wc)) {
                    best_wc = dist;
                    wc = b;
                }
            } else {
                if (closer(dist, b, best_bc, bc)) {
                    best_bc = dist;
                    bc = b;
                }
            }
        }
        if (wc != SIZE_MAX) {
            g.gwc_edge[a] = static_cast<int>(wc);
            ++g.gwc_indegree[wc];
            ++g.total_gwc;
        }
        if (bc != SIZE_MAX) {
            g.gbc_edge[a] = static_cast<int>(bc);
            ++g.gbc_indegree[bc];
            ++g.total_gbc;
        }
    }
    return g;
}

double score(std::size_t example, const CcnnGraphs& g) {
    const double pw = g.total_gwc > 0
                          ? static_cast<double>(g.gwc_indegree[example]) / static_cast<double>(g.total_gwc)
                          : 0.0;
    const double pb = g.total_gbc > 0
                          ? static_cast<double>(g.gbc_indegree[example]) / static_cast<double>(g.total_gbc)
                          : 0.0;
    const double m = 0.5 * (pw + pb);
    if (m == 0.0) return 0.0;
    const double lhs = pw > 0.0 ? pw * std::log(pw / m) : 0.0;
    const double rhs = pb > 0.0 ? pb * std::log(pb / m) : 0.0;
    return lhs - rhs;
}

std::vector<std::size_t> class_conditional_select(const Dataset& d, const DensityLabels& labels) {
    const std::size_t n = d.n();
    if (n < 2) throw std::invalid_argument("class_conditional_select needs at least 2 examples");
    const ScaledInputs pts(d);

    const CcnnGraphs graphs = build_ccnn_graphs(d, labels, [&] {
        std::vector<std::size_t> all(n);
        for (std::size_t i = 0; i < n; ++i) all[i] = i;
        return all;
    }());

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::vector<double> scores(n);
    for (std::size_t i = 0; i < n; ++i) scores[i] = score(i, graphs);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    // seed size: at least one per class, plus the error-driven term
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    const double eps_full = loo_1nn_mse(all, all, d);
    const auto [ymin_it, ymax_it] = std::minmax_element(d.ys().begin(), d.ys().end());
    const double y_range = *ymax_it - *ymin_it;
    std::size_t k0 = static_cast<std::size_t>(labels.class_count);
    if (y_range > 0.0) {
        const double term = std::ceil(eps_full * static_cast<double>(n) / y_range);
        if (term > static_cast<double>(k0)) k0 = static_cast<std::size_t>(term);
    }
    k0 = std::min(k0, n);

    NearestTracker tracker(pts, d);
    std::vector<std::size_t> s;
    s.reserve(n);
    for (std::size_t i = 0; i < k0; ++i) {
        s.push_back(order[i]);
        tracker.add_reference(order[i]);
    }

    double eps_s = tracker.mse_over_all();
    double eps_best = eps_s;
    std::vector<std::size_t> s_best = s;
    std::size_t it_wi = 0;

    for (std::size_t next = k0; next < n; ++next) {
        s.push_back(order[next]);
        tracker.add_reference(order[next]);
        const double eps_temp = tracker.mse_over_all();
        if (eps_temp < eps_s) {
            it_wi = 0;
        } else {
            ++it_wi;
        }
        if (eps_temp < eps_best) {
            eps_best = eps_temp;
            s_best = s;
        }
        eps_s = eps_temp;
        const double threshold =
            std::sqrt(static_cast<double>(n) / static_cast<double>(s.size()));
        if (static_cast<double>(it_wi) > threshold) break;
    }
    return s_best;
}

std::vector<std::size_t> thin_out(const Dataset& d, const DensityLabels& labels,
                                  std::span<const std::size_t> s) {
    if (s.empty()) throw std::invalid_argument("thin_out: empty selection");
    const ScaledInputs pts(d);

    auto positive_gbc = [&](std::span<const std::size_t> members) {
        const CcnnGraphs g = build_ccnn_graphs(d, labels, members);
        std::vector<char> pos(d.n(), 0);
        for (std::size_t e : members)
            if (g.gbc_indegree[e] > 0) pos[e] = 1;
        return pos;
    };

    const std::vector<std::size_t> s_vec(s.begin(), s.end());
    auto pos_s = positive_gbc(s_vec);

    std::vector<std::size_t> s_f;
    for (std::size_t e : s_vec)
        if (pos_s[e]) s_f.push_back(e);
    if (s_f.empty()) return s_vec;  // degenerate: nothing near a boundary

    std::vector<std::size_t> s_prev = s_vec;
    auto pos_prev = pos_s;
    std::vector<std::size_t> s1;
    auto in = [&](const std::vector<std::size_t>& set, std::size_t e) {
        return std::find(set.begin(), set.end(), e) != set.end();
    };
    for (std::size_t e : s_vec)
        if (!in(s_f, e)) s1.push_back(e);

    double eps_f = subset_error(pts, d, s_f);
    while (true) {
        if (s1.empty()) break;
        const auto pos_s1 = positive_gbc(s1);
        std::vector<std::size_t> s_t;
        for (std::size_t e : s1)
            if (pos_s1[e] && pos_prev[e]) s_t.push_back(e);
        if (s_t.empty()) break;

        std::vector<std::size_t> merged = s_f;
        merged.insert(merged.end(), s_t.begin(), s_t.end());
        const double eps_merged = subset_error(pts, d, merged);
        if (!(eps_merged < eps_f)) break;

        s_f = std::move(merged);
        eps_f = eps_merged;
        s_prev = s1;
        pos_prev = pos_s1;
        std::vector<std::size_t> next_s1;
        for (std::size_t e : s_vec)
            if (!in(s_f, e)) next_s1.push_back(e);
        s1 = std::move(next_s1);
    }
    std::sort(s_f.begin(), s_f.end());
    return s_f;
}

SelectionResult select_instances(const Dataset& d, std::uint64_t /*seed*/) {
    if (d.n() < 2) throw std::invalid_argument("select_instances needs at least 2 examples");
    const DensityLabels labels = find_output_splits(d.ys());
    const auto cc = class_conditional_select(d, labels);
    auto selected = thin_out(d, labels, cc);
    std::sort(selected.begin(), selected.end());

    SelectionResult result;
    result.class_count = labels.class_count;
    std::vector<std::size_t> all(d.n());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    const double eps_tra = loo_1nn_mse(all, all, d);
    const double eps_sel = loo_1nn_mse(selected, all, d);
    result.error_increase = eps_tra > 0.0 ? eps_sel / eps_tra : 1.0;
    result.reduction_pct =
        (1.0 - static_cast<double>(selected.size()) / static_cast<double>(d.n())) * 100.0;

    // recompute the seed size for reporting
    const auto [ymin_it, ymax_it] = std::minmax_element(d.ys().begin(), d.ys().end());
    const double y_range = *ymax_it - *ymin_it;
    std::size_t k0 = static_cast<std::size_t>(labels.class_count);
    if (y_range > 0.0) {
        const double term = std::ceil(eps_tra * static_cast<double>(d.n()) / y_range);
        if (term > static_cast<double>(k0)) k0 = static_cast<std::size_t>(term);
    }
    result.k0 = std::min(k0, d.n());
    result.selected = std::move(selected);
    return result;
}

}  // namespace fruler
