#include "fruler/tsk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fruler/kernels.hpp"
#include "fruler/rng.hpp"

namespace fruler {

DataBase DataBase::from_partitions(std::vector<FuzzyPartition> parts) {
    DataBase db;
    db.partitions = std::move(parts);
    for (std::size_t j = 0; j < db.partitions.size(); ++j)
        if (db.partitions[j].granularity >= 2) db.antecedent_vars.push_back(j);
    return db;
}

double matching_degree(const TskRule& rule, const DataBase& db, std::span<const double> x) {
    double h = 1.0;
    for (std::size_t k = 0; k < db.antecedent_vars.size(); ++k) {
        const std::size_t var = db.antecedent_vars[k];
        const double mu = membership(db.partitions[var], rule.labels[k], x[var]);
        h = std::min(h, mu);
    }
    return h;
}

Prediction predict_detail(const TskRuleBase& rb, std::span<const double> x) {
    double num = 0.0, den = 0.0;
    for (const TskRule& rule : rb.rules) {
        const double h = matching_degree(rule, rb.database, x);
        if (h <= 0.0) continue;
        double out = rule.beta[0];
        out += kernels::dot(rule.beta.data() + 1, x.data(), x.size());
        num += h * out;
        den += h;
    }
    if (den <= 0.0) return {rb.fallback_output, false};
    return {num / den, true};
}

double predict(const TskRuleBase& rb, std::span<const double> x) {
    return predict_detail(rb, x).value;
}

std::vector<std::vector<int>> wang_mendel_antecedents(const DataBase& db,
                                                      const Dataset& examples) {
    if (examples.n() == 0) throw std::invalid_argument("wang_mendel_antecedents: no examples");
    std::vector<std::vector<int>> antecedents;
    for (std::size_t i = 0; i < examples.n(); ++i) {
        const auto x = examples.x(i);
        std::vector<int> tuple;
        tuple.reserve(db.antecedent_vars.size());
        for (std::size_t var : db.antecedent_vars) {
            const FuzzyPartition& part = db.partitions[var];
            int best_label = 0;
            double best_mu = membership(part, 0, x[var]);
            for (int l = 1; l < part.granularity; ++l) {
                const double mu = membership(part, l, x[var]);
                if (mu > best_mu) {
                    best_mu = mu;
                    best_label = l;
                }
            }
            tuple.push_back(best_label);
        }
        if (std::find(antecedents.begin(), antecedents.end(), tuple) == antecedents.end())
            antecedents.push_back(std::move(tuple));
    }
    return antecedents;
}

DesignMatrix build_design_matrix(const std::vector<std::vector<int>>& antecedents,
                                 const DataBase& db, const Dataset& examples) {
    const std::size_t m = antecedents.size();
    const std::size_t p = examples.p();
    const std::size_t block = p + 1;

    DesignMatrix design;
    design.cols = m * block;
    std::vector<TskRule> rules(m);
    for (std::size_t k = 0; k < m; ++k) rules[k].labels = antecedents[k];

    std::vector<double> h(m);
    for (std::size_t i = 0; i < examples.n(); ++i) {
        const auto x = examples.x(i);
        double total = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            h[k] = matching_degree(rules[k], db, x);
            total += h[k];
        }
        if (total <= 0.0) {
            ++design.dropped;
            continue;
        }
        for (std::size_t k = 0; k < m; ++k) {
            const double z = h[k] / total;
            design.a.push_back(z);
            for (std::size_t j = 0; j < p; ++j) design.a.push_back(x[j] * z);
        }
        design.y.push_back(examples.y(i));
        ++design.rows;
    }
    if (design.rows == 0)
        throw EmptyDesignError("no example is covered by any rule antecedent");
    return design;
}

namespace {

double proxy_of(const DesignMatrix& design, std::span<const double> beta,
                std::span<const std::size_t> rows) {
    double acc = 0.0;
    for (std::size_t i : rows) {
        const double err = kernels::dot(design.row(i), beta.data(), design.cols) - design.y[i];
        acc += err * err;
    }
    return 1.0 - acc / static_cast<double>(rows.size());
}

// SGD restricted to a row subset (the tuner fits on a slice).
std::vector<double> sgd_on_rows(const DesignMatrix& design, std::span<const std::size_t> rows,
                                const SgdConfig& cfg) {
    if (design.rows == 0 || rows.empty()) throw EmptyDesignError("sgd: empty design matrix");
    if (cfg.lambda < 0.0 || cfg.alpha < 0.0 || cfg.alpha > 1.0 || cfg.eta0 <= 0.0)
        throw std::invalid_argument("sgd: bad configuration");

    const std::size_t cols = design.cols;
    const double n = static_cast<double>(rows.size());
    std::vector<double> w(cols, 0.0), q(cols, 0.0);
    std::vector<double> best_beta(cols, 0.0);
    double best_proxy = -std::numeric_limits<double>::infinity();

    double s = 1.0;
    double u = 0.0;
    long t = 0;
    long it = 0;
    std::size_t it_wi = 0;
    std::vector<std::size_t> order(rows.begin(), rows.end());
    Rng rng = Rng::substream(cfg.seed, "sgd-shuffle");

    while (true) {
        rng.shuffle(order);
        for (std::size_t i : order) {
            ++t;
            const double eta = cfg.lambda > 0.0
                                   ? cfg.eta0 / (cfg.lambda * static_cast<double>(t))
                                   : cfg.eta0 / static_cast<double>(t);
            const double* xi = design.row(i);
            const double yhat = kernels::dot(xi, w.data(), cols) * s;
            if (!std::isfinite(yhat))
                throw DivergenceError("sgd diverged (eta0 = " + std::to_string(cfg.eta0) + ")");
            s *= 1.0 - cfg.alpha * eta * cfg.lambda;
            u += (1.0 - cfg.alpha) * eta * cfg.lambda;
            if (!(s > 0.0) || !std::isfinite(s))
                throw DivergenceError("sgd shrink factor collapsed (eta0 = " +
                                      std::to_string(cfg.eta0) + ")");
            if (s < 1e-150) {  // fold the shrink into the weights before it underflows
                for (std::size_t j = 0; j < cols; ++j) w[j] *= s;
                s = 1.0;
            }

            kernels::axpy(-eta * (yhat - design.y[i]) / s, xi, w.data(), cols);
            // cumulative l1 clipping
            for (std::size_t j = 0; j < cols; ++j) {
                const double w_half = w[j];
                const double sw = s * w_half;
                double w_next = w_half;
                if (sw > 0.0)
                    w_next = std::max(0.0, w_half - (u + q[j]) / s);
                else if (sw < 0.0)
                    w_next = std::min(0.0, w_half + (u - q[j]) / s);
                q[j] += s * (w_next - w_half);
                w[j] = w_next;
            }
        }
        ++it;
        double acc = 0.0;
        for (std::size_t i : rows) {
            const double err = kernels::dot(design.row(i), w.data(), cols) * s - design.y[i];
            acc += err * err;
        }
        const double proxy = 1.0 - acc / n;
        if (!std::isfinite(proxy))
            throw DivergenceError("sgd diverged (eta0 = " + std::to_string(cfg.eta0) + ")");
        if (proxy > best_proxy) {
            best_proxy = proxy;
            for (std::size_t j = 0; j < cols; ++j) best_beta[j] = w[j] * s;
            it_wi = 0;
        } else {
            ++it_wi;
        }
        if (static_cast<double>(it_wi) > std::sqrt(n / static_cast<double>(it))) break;
        if (it >= cfg.max_epochs) break;
    }
    return best_beta;
}

}  // namespace

std::vector<double> sgd_elastic_net(const DesignMatrix& design, const SgdConfig& cfg) {
    std::vector<std::size_t> all(design.rows);
    std::iota(all.begin(), all.end(), 0);
    return sgd_on_rows(design, all, cfg);
}

TunedParams tune_hyperparams(const DesignMatrix& design, double alpha, std::uint64_t seed) {
    if (design.rows == 0) throw EmptyDesignError("tune_hyperparams: empty design matrix");

    std::vector<std::size_t> idx(design.rows);
    std::iota(idx.begin(), idx.end(), 0);
    Rng shuffle_rng = Rng::substream(seed, "tune-subset");
    shuffle_rng.shuffle(idx);
    const std::size_t fit_n = std::min<std::size_t>(1000, design.rows);
    const std::vector<std::size_t> fit_rows(idx.begin(), idx.begin() + fit_n);
    // score on held-out rows when we have them, else on the fit rows
    const std::vector<std::size_t> eval_rows =
        fit_n < design.rows ? std::vector<std::size_t>(idx.begin() + fit_n, idx.end()) : fit_rows;

    constexpr int kGridSize = 11;
    constexpr int kMaxHalvings = 60;

    TunedParams best;
    double best_proxy = -std::numeric_limits<double>::infinity();
    for (int gi = 0; gi < kGridSize; ++gi) {
        const double lambda = std::pow(10.0, -gi);
        double eta = 0.1;
        double best_eta = eta;
        double best_eta_proxy = -std::numeric_limits<double>::infinity();
        double prev_proxy = -std::numeric_limits<double>::infinity();
        for (int k = 0; k < kMaxHalvings; ++k, eta *= 0.5) {
            double proxy;
            try {
                SgdConfig cfg{lambda, alpha, eta,
                              Rng::substream(seed, "tune-fit", static_cast<std::uint64_t>(gi),
                                             static_cast<std::uint64_t>(k))
                                  .next(),
                              200};  // selection needs relative quality, not full convergence
                const auto beta = sgd_on_rows(design, fit_rows, cfg);
                proxy = proxy_of(design, beta, eval_rows);
            } catch (const DivergenceError&) {
                proxy = -std::numeric_limits<double>::infinity();
            }
            if (proxy > best_eta_proxy) {
                best_eta_proxy = proxy;
                best_eta = eta;
            }
            if (k > 0 && proxy < prev_proxy) break;  // halving made it worse
            prev_proxy = proxy;
        }
        if (best_eta_proxy > best_proxy) {
            best_proxy = best_eta_proxy;
            best = {lambda, best_eta};
        }
    }
    return best;
}

TskRuleBase build_rulebase(const DataBase& db, const Dataset& examples, const SgdConfig& cfg) {
    const auto antecedents = wang_mendel_antecedents(db, examples);
    const DesignMatrix design = build_design_matrix(antecedents, db, examples);
    const auto beta = sgd_elastic_net(design, cfg);

    TskRuleBase rb;
    rb.database = db;
    const std::size_t block = examples.p() + 1;
    rb.rules.resize(antecedents.size());
    for (std::size_t k = 0; k < antecedents.size(); ++k) {
        rb.rules[k].labels = antecedents[k];
        rb.rules[k].beta.assign(beta.begin() + static_cast<std::ptrdiff_t>(k * block),
                                beta.begin() + static_cast<std::ptrdiff_t>((k + 1) * block));
    }
    rb.fallback_output =
        std::accumulate(examples.ys().begin(), examples.ys().end(), 0.0) /
        static_cast<double>(examples.n());
    return rb;
}

}  // namespace fruler
