#include "fruler/evolution.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <set>
#include <unordered_map>

namespace fruler {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string chromosome_key(const Chromosome& ch) {
    // C1 plus C2 quantized at 1e-9, so float jitter cannot split cache keys
    std::string key;
    key.reserve(ch.granularity.size() * 12);
    auto push = [&key](long long v) {
        char buf[sizeof v];
        std::memcpy(buf, &v, sizeof v);
        key.append(buf, sizeof v);
    };
    for (int g : ch.granularity) push(g);
    for (const auto& block : ch.alphas)
        for (double a : block) push(std::llround(a * 1e9));
    return key;
}

double half_mse(const TskRuleBase& rb, const Dataset& data, std::size_t* uncovered = nullptr) {
    double acc = 0.0;
    std::size_t misses = 0;
    for (std::size_t i = 0; i < data.n(); ++i) {
        const Prediction pred = predict_detail(rb, data.x(i));
        if (!pred.covered) ++misses;
        const double err = pred.value - data.y(i);
        acc += err * err;
    }
    if (uncovered) *uncovered = misses;
    return acc / (2.0 * static_cast<double>(data.n()));
}

// Fitness evaluation with memoization and budget accounting. SGD seeds
// derive from the chromosome key, so results do not depend on evaluation
// order.
class Evaluator {
public:
    Evaluator(const std::vector<GranularityLadder>& ladders, const Dataset& e_s,
              const Dataset& e_tra, double lambda, double alpha, double eta0, double fuzziness,
              std::uint64_t master, long budget)
        : ladders_(ladders),
          e_s_(e_s),
          e_tra_(e_tra),
          lambda_(lambda),
          alpha_(alpha),
          eta0_(eta0),
          fuzziness_(fuzziness),
          master_(master),
          budget_(budget) {}

    double evaluate(const Chromosome& ch) {
        const std::string key = chromosome_key(ch);
        if (const auto it = cache_.find(key); it != cache_.end()) return it->second;
        ++evaluations_;
        double f = kInf;
        try {
            const TskRuleBase rb = build(ch, key);
            f = half_mse(rb, e_tra_);
        } catch (const EmptyDesignError&) {
            f = kInf;  // never selected as best
        }
        cache_.emplace(std::move(key), f);
        return f;
    }

    TskRuleBase build(const Chromosome& ch) const { return build(ch, chromosome_key(ch)); }

    long evaluations() const { return evaluations_; }
    bool out_of_budget() const { return evaluations_ >= budget_; }

private:
    TskRuleBase build(const Chromosome& ch, const std::string& key) const {
        const DataBase db = decode(ch, ladders_, fuzziness_);
        const SgdConfig cfg{lambda_, alpha_, eta0_,
                            Rng::substream(master_, "sgd", detail::fnv1a(key)).next()};
        return build_rulebase(db, e_s_, cfg);
    }

    const std::vector<GranularityLadder>& ladders_;
    const Dataset& e_s_;
    const Dataset& e_tra_;
    double lambda_, alpha_, eta0_, fuzziness_;
    std::uint64_t master_;
    long budget_;
    long evaluations_ = 0;
    std::unordered_map<std::string, double> cache_;
};

double displacement_distance(const Chromosome& a, const Chromosome& b) {
    double acc = 0.0;
    for (std::size_t v = 0; v < a.alphas.size(); ++v)
        for (std::size_t j = 0; j < a.alphas[v].size(); ++j) {
            const double d = a.alphas[v][j] - b.alphas[v][j];
            acc += d * d;
        }
    return std::sqrt(acc);
}

std::vector<double> displaced_splits(const std::vector<double>& raw,
                                     const std::vector<double>& alphas) {
    return apply_displacement(raw, Displacement{alphas});
}

double draw_alpha(Rng& rng) {
    return std::clamp(rng.uniform(-0.5, 0.5), -kAlphaBound, kAlphaBound);
}

}  // namespace

std::vector<Chromosome> initialize_population(const std::vector<GranularityLadder>& ladders,
                                              std::size_t n, Rng& rng) {
    if (n < 2) throw std::invalid_argument("initialize_population: need at least 2 individuals");
    const std::size_t p = ladders.size();
    int max_g = 1;
    for (const auto& l : ladders) max_g = std::max(max_g, l.chosen_max);

    std::vector<Chromosome> pop;
    pop.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Chromosome ch;
        ch.granularity.resize(p);
        if (i < n / 2) {
            const int shared = static_cast<int>(rng.uniform_int(1, max_g));
            for (std::size_t v = 0; v < p; ++v)
                ch.granularity[v] = std::min(shared, ladders[v].chosen_max);
        } else {
            for (std::size_t v = 0; v < p; ++v)
                ch.granularity[v] = static_cast<int>(rng.uniform_int(1, ladders[v].chosen_max));
        }
        // cap the potential rule count: product of granularities stays
        // within p * max_g by knocking random variables out of the antecedent
        const double cap = static_cast<double>(p) * static_cast<double>(max_g);
        auto product = [&ch] {
            double prod = 1.0;
            for (int g : ch.granularity) prod *= static_cast<double>(g);
            return prod;
        };
        while (product() > cap) {
            const std::size_t v = static_cast<std::size_t>(rng.below(p));
            ch.granularity[v] = 1;
        }
        ch.alphas.resize(p);
        for (std::size_t v = 0; v < p; ++v)
            ch.alphas[v].assign(static_cast<std::size_t>(ch.granularity[v] - 1), 0.0);
        pop.push_back(std::move(ch));
    }
    return pop;
}

DataBase decode(const Chromosome& ch, const std::vector<GranularityLadder>& ladders,
                double fuzziness) {
    std::vector<FuzzyPartition> parts;
    parts.reserve(ladders.size());
    for (std::size_t v = 0; v < ladders.size(); ++v) {
        const int g = ch.granularity[v];
        if (g < 1 || g > ladders[v].chosen_max)
            throw std::invalid_argument("decode: granularity outside the ladder");
        const auto& raw = ladders[v].splits(g);
        if (g == 1) {
            parts.push_back(build_partition(raw, fuzziness));
        } else {
            parts.push_back(build_partition(displaced_splits(raw, ch.alphas[v]), fuzziness));
        }
    }
    return DataBase::from_partitions(std::move(parts));
}

double fitness(const Chromosome& ch, const std::vector<GranularityLadder>& ladders,
               const Dataset& e_s, const Dataset& e_tra, const SgdConfig& cfg, double fuzziness) {
    try {
        const DataBase db = decode(ch, ladders, fuzziness);
        const TskRuleBase rb = build_rulebase(db, e_s, cfg);
        return half_mse(rb, e_tra);
    } catch (const EmptyDesignError&) {
        return kInf;
    }
}

std::size_t tournament_select(const std::vector<double>& fitness_values, Rng& rng) {
    const std::size_t n = fitness_values.size();
    if (n < 2) throw std::invalid_argument("tournament_select: need at least 2 individuals");
    const std::size_t first = static_cast<std::size_t>(rng.below(n));
    std::size_t second = static_cast<std::size_t>(rng.below(n - 1));
    if (second >= first) ++second;
    return fitness_values[second] < fitness_values[first] ? second : first;
}

std::optional<std::pair<Chromosome, Chromosome>> crossover(const Chromosome& a,
                                                           const Chromosome& b,
                                                           double incest_threshold, Rng& rng) {
    const std::size_t p = a.granularity.size();
    if (a.granularity != b.granularity) {
        // one-point exchange of the C1 tail, each C2 block follows its gene
        Chromosome c1 = a, c2 = b;
        if (p >= 2) {
            const std::size_t cut = static_cast<std::size_t>(rng.uniform_int(1, static_cast<std::int64_t>(p) - 1));
            for (std::size_t v = cut; v < p; ++v) {
                std::swap(c1.granularity[v], c2.granularity[v]);
                std::swap(c1.alphas[v], c2.alphas[v]);
            }
        }
        return std::make_pair(std::move(c1), std::move(c2));
    }
    if (displacement_distance(a, b) < incest_threshold) return std::nullopt;
    // PCBLX over the displacement genes
    Chromosome c1 = a, c2 = b;
    for (std::size_t v = 0; v < p; ++v) {
        for (std::size_t j = 0; j < a.alphas[v].size(); ++j) {
            const double ga = a.alphas[v][j];
            const double gb = b.alphas[v][j];
            const double d = std::abs(ga - gb);
            c1.alphas[v][j] = std::clamp(rng.uniform(ga - d, ga + d), -kAlphaBound, kAlphaBound);
            c2.alphas[v][j] = std::clamp(rng.uniform(gb - d, gb + d), -kAlphaBound, kAlphaBound);
        }
    }
    return std::make_pair(std::move(c1), std::move(c2));
}

Chromosome mutate(const Chromosome& ch, const std::vector<GranularityLadder>& ladders,
                  double p_mut, Rng& rng) {
    if (rng.uniform01() >= p_mut) return ch;
    Chromosome out = ch;
    const std::size_t v = static_cast<std::size_t>(rng.below(ladders.size()));
    const int g = ch.granularity[v];
    const int g_max = ladders[v].chosen_max;

    bool decrease = rng.below(2) == 0;
    if (decrease && g <= 1) decrease = false;    // nothing below 1: redraw as increase
    if (!decrease && g >= g_max) decrease = true;  // nothing above the ladder max
    int new_g;
    if (decrease && g > 1) {
        new_g = g - 1;
    } else if (!decrease && g < g_max) {
        new_g = static_cast<int>(rng.uniform_int(g + 1, g_max));
    } else {
        return out;  // granularity pinned at both ends
    }

    // carry the displacements over: each new split interpolates the alphas
    // of the two old displaced splits that bracket it (endpoints count as 0)
    const auto& old_raw = ladders[v].splits(g);
    const auto old_pos = displaced_splits(old_raw, ch.alphas[v]);
    std::vector<double> old_alpha(old_pos.size(), 0.0);
    for (std::size_t j = 1; j + 1 < old_pos.size(); ++j) old_alpha[j] = ch.alphas[v][j - 1];

    const auto& new_raw = ladders[v].splits(new_g);
    std::vector<double> new_alpha;
    new_alpha.reserve(static_cast<std::size_t>(new_g - 1));
    for (std::size_t j = 1; j + 1 < new_raw.size(); ++j) {
        const double c = new_raw[j];
        const auto right = std::lower_bound(old_pos.begin(), old_pos.end(), c);
        double value;
        if (right == old_pos.begin()) {
            value = old_alpha.front();
        } else if (right == old_pos.end()) {
            value = old_alpha.back();
        } else {
            const std::size_t ri = static_cast<std::size_t>(right - old_pos.begin());
            const std::size_t li = ri - (*right == c ? 0 : 1);
            if (li == ri || old_pos[ri] == old_pos[li]) {
                value = old_alpha[ri];
            } else {
                const double t = (c - old_pos[li]) / (old_pos[ri] - old_pos[li]);
                value = old_alpha[li] * (1.0 - t) + old_alpha[ri] * t;
            }
        }
        new_alpha.push_back(std::clamp(value, -kAlphaBound, kAlphaBound));
    }
    out.granularity[v] = new_g;
    out.alphas[v] = std::move(new_alpha);
    return out;
}

Chromosome restrict_randomly(const Chromosome& ch, Rng& rng) {
    Chromosome out;
    out.granularity.resize(ch.granularity.size());
    out.alphas.resize(ch.granularity.size());
    for (std::size_t v = 0; v < ch.granularity.size(); ++v) {
        out.granularity[v] = static_cast<int>(rng.uniform_int(1, ch.granularity[v]));
        out.alphas[v].resize(static_cast<std::size_t>(out.granularity[v] - 1));
        for (double& a : out.alphas[v]) a = draw_alpha(rng);
    }
    return out;
}

Chromosome local_search(const Chromosome& ch, double& fitness_value, int n_ls,
                        const std::function<double(const Chromosome&)>& evaluate, Rng& rng) {
    Chromosome current = ch;
    for (int c = 0; c < n_ls; ++c) {
        Chromosome cand = restrict_randomly(current, rng);
        const double f = evaluate(cand);
        if (f < fitness_value) {
            current = std::move(cand);
            fitness_value = f;
        }
    }
    return current;
}

RunResult run(const Dataset& train, const EvolutionConfig& cfg) {
    const auto t_start = std::chrono::steady_clock::now();
    RunReport report;

    // stage 1: instance selection
    std::vector<std::size_t> selected(train.n());
    std::iota(selected.begin(), selected.end(), 0);
    if (!cfg.skip_selection && train.n() >= 2) {
        SelectionResult sel = select_instances(train, cfg.seed);
        report.reduction_pct = sel.reduction_pct;
        report.error_increase = sel.error_increase;
        report.k0 = sel.k0;
        report.class_count = sel.class_count;
        selected = std::move(sel.selected);
    }
    const Dataset e_s = train.subset(selected);

    // stage 2: multi-granularity discretization
    const auto ladders = discretize_all(cfg.discretize_on_selected ? e_s : train);
    int max_g = 1;
    for (const auto& l : ladders) max_g = std::max(max_g, l.chosen_max);

    // hyperparameters tuned once, on the plain global-linear design
    Chromosome flat;
    flat.granularity.assign(train.p(), 1);
    flat.alphas.resize(train.p());
    const DataBase flat_db = decode(flat, ladders, cfg.fuzziness);
    const DesignMatrix flat_design =
        build_design_matrix(wang_mendel_antecedents(flat_db, e_s), flat_db, e_s);
    const TunedParams tuned =
        tune_hyperparams(flat_design, cfg.alpha, Rng::substream(cfg.seed, "tune").next());
    report.lambda = tuned.lambda;
    report.eta0 = tuned.eta0;

    Evaluator evaluator(ladders, e_s, train, tuned.lambda, cfg.alpha, tuned.eta0, cfg.fuzziness,
                        cfg.seed, cfg.budget);
    Rng rng = Rng::substream(cfg.seed, "ea");

    struct Individual {
        Chromosome ch;
        double fit = kInf;
    };

    std::vector<Individual> pop;
    std::set<std::vector<int>> seen_c1;
    {
        auto chromosomes = initialize_population(ladders, cfg.population, rng);
        for (auto& ch : chromosomes) {
            Individual ind{std::move(ch), 0.0};
            ind.fit = evaluator.evaluate(ind.ch);
            seen_c1.insert(ind.ch.granularity);
            pop.push_back(std::move(ind));
        }
    }

    auto best_of = [](const std::vector<Individual>& v) {
        std::size_t bi = 0;
        for (std::size_t i = 1; i < v.size(); ++i)
            if (v[i].fit < v[bi].fit) bi = i;
        return bi;
    };
    Individual best = pop[best_of(pop)];

    const double l_init =
        static_cast<double>(train.p()) * static_cast<double>(max_g) / 4.0;
    double l_threshold = l_init;
    int restarts = 0;

    const auto budgeted_eval = [&](const Chromosome& cand) {
        if (evaluator.out_of_budget()) return kInf;  // never charged, never wins
        const double f = evaluator.evaluate(cand);
        seen_c1.insert(cand.granularity);
        return f;
    };
    auto improve = [&](Individual& ind) {
        if (evaluator.out_of_budget()) return;
        ind.ch = local_search(ind.ch, ind.fit, cfg.n_ls, budgeted_eval, rng);
    };

    while (!evaluator.out_of_budget()) {
        const double best_before = best.fit;

        // breed: paired tournament winners, crossover, mutation
        std::vector<double> fits(pop.size());
        for (std::size_t i = 0; i < pop.size(); ++i) fits[i] = pop[i].fit;
        const std::size_t pairs = (cfg.population + 1) / 2;
        std::vector<Chromosome> children;
        for (std::size_t pr = 0; pr < pairs; ++pr) {
            const Individual& pa = pop[tournament_select(fits, rng)];
            const Individual& pb = pop[tournament_select(fits, rng)];
            Chromosome ca = pa.ch, cb = pb.ch;
            if (rng.uniform01() < cfg.p_cross) {
                if (auto crossed = crossover(pa.ch, pb.ch, l_threshold, rng)) {
                    ca = std::move(crossed->first);
                    cb = std::move(crossed->second);
                }
            }
            children.push_back(mutate(ca, ladders, cfg.p_mut, rng));
            children.push_back(mutate(cb, ladders, cfg.p_mut, rng));
        }
        if (children.size() > cfg.population) children.resize(cfg.population);

        std::set<std::string> parent_keys;
        for (const auto& ind : pop) parent_keys.insert(chromosome_key(ind.ch));

        struct Child {
            Individual ind;
            bool fresh_c1 = false;  // C1 pattern unseen when created
            bool novel = false;     // differs from every parent
        };
        std::vector<Child> evaluated;
        for (auto& ch : children) {
            if (evaluator.out_of_budget()) break;
            Child c;
            c.fresh_c1 = seen_c1.find(ch.granularity) == seen_c1.end();
            c.novel = parent_keys.find(chromosome_key(ch)) == parent_keys.end();
            c.ind.ch = std::move(ch);
            c.ind.fit = evaluator.evaluate(c.ind.ch);
            seen_c1.insert(c.ind.ch.granularity);
            evaluated.push_back(std::move(c));
        }

        // replacement: best N of parents + children (stable, parents first)
        std::vector<Individual> merged = pop;
        std::vector<char> from_child(pop.size(), 0);
        std::vector<char> fresh_flag(pop.size(), 0);
        for (const auto& c : evaluated) {
            merged.push_back(c.ind);
            from_child.push_back(c.novel ? 1 : 0);
            fresh_flag.push_back(c.fresh_c1 ? 1 : 0);
        }
        std::vector<std::size_t> rank(merged.size());
        std::iota(rank.begin(), rank.end(), 0);
        std::stable_sort(rank.begin(), rank.end(), [&](std::size_t x, std::size_t y) {
            return merged[x].fit < merged[y].fit;
        });

        std::vector<Individual> next_pop;
        std::size_t accepted_new = 0;
        std::vector<std::size_t> ls_targets;
        for (std::size_t r = 0; r < cfg.population && r < rank.size(); ++r) {
            const std::size_t src = rank[r];
            if (from_child[src]) ++accepted_new;
            if (fresh_flag[src]) ls_targets.push_back(next_pop.size());
            next_pop.push_back(merged[src]);
        }
        pop = std::move(next_pop);

        for (std::size_t ti : ls_targets) {
            if (evaluator.out_of_budget()) break;
            improve(pop[ti]);
        }

        const std::size_t bi = best_of(pop);
        if (pop[bi].fit < best.fit) best = pop[bi];

        l_threshold -= 0.4;
        if (accepted_new == 0) l_threshold -= 0.2;
        if (!(best.fit < best_before)) l_threshold -= 0.2;

        if (l_threshold <= 0.0) {
            if (restarts >= 1) break;  // second trigger ends the search
            ++restarts;
            std::vector<Individual> refilled{best};
            while (refilled.size() < cfg.population && !evaluator.out_of_budget()) {
                Individual ind;
                ind.ch = restrict_randomly(best.ch, rng);
                ind.fit = evaluator.evaluate(ind.ch);
                seen_c1.insert(ind.ch.granularity);
                refilled.push_back(std::move(ind));
            }
            pop = std::move(refilled);
            l_threshold = l_init;
        }
    }

    // final consequent refit on the full training set
    TskRuleBase model = evaluator.build(best.ch);
    try {
        const DesignMatrix full = build_design_matrix(
            [&] {
                std::vector<std::vector<int>> ants;
                for (const auto& r : model.rules) ants.push_back(r.labels);
                return ants;
            }(),
            model.database, train);
        const SgdConfig refit_cfg{tuned.lambda, cfg.alpha, tuned.eta0,
                                  Rng::substream(cfg.seed, "final-refit").next()};
        const auto beta = sgd_elastic_net(full, refit_cfg);
        const std::size_t block = train.p() + 1;
        for (std::size_t k = 0; k < model.rules.size(); ++k)
            model.rules[k].beta.assign(beta.begin() + static_cast<std::ptrdiff_t>(k * block),
                                       beta.begin() + static_cast<std::ptrdiff_t>((k + 1) * block));
        model.fallback_output =
            std::accumulate(train.ys().begin(), train.ys().end(), 0.0) /
            static_cast<double>(train.n());
    } catch (const EmptyDesignError&) {
        // keep the representative-set consequents when nothing is covered
    }

    report.train_mse = half_mse(model, train, &report.uncovered_train);
    report.train_mse_plain = 2.0 * report.train_mse;
    report.n_rules = model.rules.size();
    report.granularities = best.ch.granularity;
    report.evaluations = evaluator.evaluations();
    report.restarts = restarts;
    report.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();

    RunResult result;
    result.model = std::move(model);
    result.best = best.ch;
    result.best_raw_splits.reserve(ladders.size());
    for (std::size_t v = 0; v < ladders.size(); ++v)
        result.best_raw_splits.push_back(ladders[v].splits(best.ch.granularity[v]));
    result.report = std::move(report);
    return result;
}

}  // namespace fruler
