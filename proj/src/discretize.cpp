#include "fruler/discretize.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fruler {

namespace {

constexpr double kMseFloor = 1e-12;  // keeps log() finite on exact fits

struct Moments {
    double n = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, syy = 0.0;

    void add(double x, double y) {
        n += 1.0;
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
    }

    // total squared residual of the least-squares line (intercept-only
    // when x carries no variance)
    double se() const {
        if (n == 0.0) return 0.0;
        const double cxx = sxx - sx * sx / n;
        const double cxy = sxy - sx * sy / n;
        const double cyy = syy - sy * sy / n;
        const double se_val = cxx > 0.0 ? cyy - cxy * cxy / cxx : cyy;
        return se_val > 0.0 ? se_val : 0.0;
    }
};

// Points of one variable sorted by x, with centered copies for stable
// moment accumulation (SE is translation invariant).
struct SortedColumn {
    std::vector<double> x;   // raw, ascending
    std::vector<double> cx;  // centered
    std::vector<double> cy;
    // prefix sums over centered values: index i holds the sum of [0, i)
    std::vector<double> px, py, pxx, pxy, pyy;

    explicit SortedColumn(std::span<const double> xs, std::span<const double> ys) {
        const std::size_t n = xs.size();
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
        const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(n);
        const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(n);
        x.resize(n);
        cx.resize(n);
        cy.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = xs[order[i]];
            cx[i] = xs[order[i]] - mx;
            cy[i] = ys[order[i]] - my;
        }
        px.assign(n + 1, 0.0);
        py.assign(n + 1, 0.0);
        pxx.assign(n + 1, 0.0);
        pxy.assign(n + 1, 0.0);
        pyy.assign(n + 1, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            px[i + 1] = px[i] + cx[i];
            py[i + 1] = py[i] + cy[i];
            pxx[i + 1] = pxx[i] + cx[i] * cx[i];
            pxy[i + 1] = pxy[i] + cx[i] * cy[i];
            pyy[i + 1] = pyy[i] + cy[i] * cy[i];
        }
    }

    Moments range(std::size_t lo, std::size_t hi) const {  // [lo, hi)
        Moments m;
        m.n = static_cast<double>(hi - lo);
        m.sx = px[hi] - px[lo];
        m.sy = py[hi] - py[lo];
        m.sxx = pxx[hi] - pxx[lo];
        m.sxy = pxy[hi] - pxy[lo];
        m.syy = pyy[hi] - pyy[lo];
        return m;
    }

    // first index with x >= value
    std::size_t lower(double value) const {
        return static_cast<std::size_t>(
            std::lower_bound(x.begin(), x.end(), value) - x.begin());
    }
};

}  // namespace

double interval_fit_mse(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw std::invalid_argument("interval_fit_mse: size mismatch");
    if (xs.empty()) return 0.0;
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double cxx = 0.0, cxy = 0.0, cyy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx;
        const double dy = ys[i] - my;
        cxx += dx * dx;
        cxy += dx * dy;
        cyy += dy * dy;
    }
    const double se = cxx > 0.0 ? cyy - cxy * cxy / cxx : cyy;
    return std::max(se, 0.0) / n;
}

double linear_error(std::span<const double> xs, std::span<const double> ys, double c) {
    if (xs.size() != ys.size()) throw std::invalid_argument("linear_error: size mismatch");
    Moments left, right;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (xs[i] < c)
            left.add(xs[i], ys[i]);
        else if (xs[i] > c)
            right.add(xs[i], ys[i]);
    }
    const double total = static_cast<double>(xs.size());
    if (total == 0.0) return 0.0;
    return left.se() * (left.n / total) + right.se() * (right.n / total);
}

GranularityLadder discretize_variable(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size() || xs.empty())
        throw std::invalid_argument("discretize_variable: bad input sizes");
    const std::size_t n = xs.size();
    const SortedColumn col(xs, ys);
    const double log_n = std::log(static_cast<double>(n));

    GranularityLadder ladder;
    std::vector<double> c1 = {col.x.front(), col.x.back()};
    ladder.splits_per_granularity.push_back(c1);
    ladder.bic_trace.push_back(static_cast<double>(n) *
                                   std::log(std::max(interval_fit_mse(xs, ys), kMseFloor)) +
                               2.0 * log_n);

    int min_g = 1;
    double bic_min = ladder.bic_trace[0];
    std::size_t it_wi = 0;
    std::vector<double> splits = c1;

    while (true) {
        // interval boundaries as sorted-array index ranges: [c_i, c_{i+1}),
        // last interval closed
        const std::size_t g = splits.size() - 1;
        std::vector<std::size_t> bounds;
        bounds.push_back(0);
        for (std::size_t i = 1; i < g; ++i) bounds.push_back(col.lower(splits[i]));
        bounds.push_back(n);

        double best_err = 0.0;
        double best_split = 0.0;
        bool found = false;
        for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
            const std::size_t lo = bounds[i];
            const std::size_t hi = bounds[i + 1];
            if (hi - lo < 2 * kMinIntervalSize) continue;
            const double inv_total = 1.0 / static_cast<double>(hi - lo);
            for (std::size_t k = lo + kMinIntervalSize; k + kMinIntervalSize <= hi; ++k) {
                // candidate between positions k-1 and k; only distinct
                // neighbors give a strictly separating midpoint
                if (!(col.x[k - 1] < col.x[k])) continue;
                const double c = 0.5 * (col.x[k - 1] + col.x[k]);
                if (!(c > col.x[k - 1] && c < col.x[k])) continue;
                const Moments left = col.range(lo, k);
                const Moments right = col.range(k, hi);
                const double err =
                    left.se() * (left.n * inv_total) + right.se() * (right.n * inv_total);
                if (!found || err < best_err) {
                    found = true;
                    best_err = err;
                    best_split = c;
                }
            }
        }
        if (!found) break;  // no admissible candidate anywhere

        splits.insert(std::upper_bound(splits.begin(), splits.end(), best_split), best_split);
        ladder.splits_per_granularity.push_back(splits);

        const std::size_t new_g = splits.size() - 1;
        std::vector<std::size_t> new_bounds;
        new_bounds.push_back(0);
        for (std::size_t i = 1; i < new_g; ++i) new_bounds.push_back(col.lower(splits[i]));
        new_bounds.push_back(n);
        // pooled residual: per-interval squared errors normalized by the
        // full sample size, so refinement is judged on the overall fit
        double mse_sum = 0.0;
        for (std::size_t i = 0; i + 1 < new_bounds.size(); ++i) {
            const Moments m = col.range(new_bounds[i], new_bounds[i + 1]);
            mse_sum += m.se() / static_cast<double>(n);
        }
        const double bic = static_cast<double>(n) * std::log(std::max(mse_sum, kMseFloor)) +
                           (static_cast<double>(splits.size()) - 2.0) * 2.0 * log_n;
        ladder.bic_trace.push_back(bic);

        if (bic < bic_min) {
            bic_min = bic;
            min_g = static_cast<int>(new_g);
            it_wi = 0;
        } else {
            ++it_wi;
        }
        const double threshold = std::sqrt(static_cast<double>(n) /
                                           static_cast<double>(kMinIntervalSize) /
                                           static_cast<double>(min_g));
        if (static_cast<double>(it_wi) > threshold) break;
    }

    ladder.chosen_max = min_g;
    ladder.splits_per_granularity.resize(static_cast<std::size_t>(min_g));
    return ladder;
}

std::vector<GranularityLadder> discretize_all(const Dataset& d) {
    std::vector<GranularityLadder> ladders;
    ladders.reserve(d.p());
    std::vector<double> column(d.n());
    for (std::size_t j = 0; j < d.p(); ++j) {
        for (std::size_t i = 0; i < d.n(); ++i) column[i] = d.x(i)[j];
        GranularityLadder ladder = discretize_variable(column, d.ys());
        ladder.variable = j;
        ladders.push_back(std::move(ladder));
    }
    return ladders;
}

}  // namespace fruler
