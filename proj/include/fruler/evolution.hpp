#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "fruler/dataset.hpp"
#include "fruler/discretize.hpp"
#include "fruler/rng.hpp"
#include "fruler/selection.hpp"
#include "fruler/tsk.hpp"

namespace fruler {

// Double coding scheme: per-variable granularity plus lateral displacements
// of the inner split points (one list per variable, g_j - 1 entries).
struct Chromosome {
    std::vector<int> granularity;
    std::vector<std::vector<double>> alphas;

    bool operator==(const Chromosome&) const = default;
};

inline constexpr double kAlphaBound = 0.499999;

struct EvolutionConfig {
    std::size_t population = 61;
    long budget = 100000;
    double p_cross = 1.0;
    double p_mut = 0.2;
    int n_ls = 5;
    double alpha = 0.95;     // elastic-net l2/l1 trade-off
    double fuzziness = 1.0;
    bool skip_selection = false;
    // split-point search runs on the full training set; the representative
    // subset is usually too small for the 30-per-interval rule
    bool discretize_on_selected = false;
    std::uint64_t seed = 0;
};

struct RunReport {
    double train_mse = 0.0;        // (1/(2n)) sum of squared errors
    double train_mse_plain = 0.0;  // plain mean squared error
    std::size_t n_rules = 0;
    std::vector<int> granularities;
    double reduction_pct = 0.0;
    double error_increase = 0.0;
    std::size_t k0 = 0;
    int class_count = 0;
    long evaluations = 0;
    int restarts = 0;
    double lambda = 0.0;
    double eta0 = 0.0;
    std::size_t uncovered_train = 0;  // training examples with zero rule activation
    double wall_time_s = 0.0;
};

struct RunResult {
    TskRuleBase model;
    Chromosome best;
    // raw ladder splits of the chosen granularity, per variable (the model
    // file stores these plus the displacements, not the displaced values)
    std::vector<std::vector<double>> best_raw_splits;
    RunReport report;
};

std::vector<Chromosome> initialize_population(const std::vector<GranularityLadder>& ladders,
                                              std::size_t n, Rng& rng);

DataBase decode(const Chromosome& ch, const std::vector<GranularityLadder>& ladders,
                double fuzziness);

double fitness(const Chromosome& ch, const std::vector<GranularityLadder>& ladders,
               const Dataset& e_s, const Dataset& e_tra, const SgdConfig& cfg, double fuzziness);

// Binary tournament: two distinct draws, lower fitness wins, first drawn
// wins ties.
std::size_t tournament_select(const std::vector<double>& fitness_values, Rng& rng);

// One-point crossover when C1 differs (C2 blocks travel with their genes);
// PCBLX on C2 when C1 matches, unless the displacement distance is below
// the incest threshold, in which case no children are produced.
std::optional<std::pair<Chromosome, Chromosome>> crossover(const Chromosome& a,
                                                           const Chromosome& b,
                                                           double incest_threshold, Rng& rng);

Chromosome mutate(const Chromosome& ch, const std::vector<GranularityLadder>& ladders,
                  double p_mut, Rng& rng);

// Random restriction of ch: per variable a granularity up to the current
// one, displacements uniform. Used by local search and restart refills.
Chromosome restrict_randomly(const Chromosome& ch, Rng& rng);

// Evaluate n_ls random restrictions of ch; return the best of them when it
// strictly improves on fitness_value (updating it), else ch unchanged.
Chromosome local_search(const Chromosome& ch, double& fitness_value, int n_ls,
                        const std::function<double(const Chromosome&)>& evaluate, Rng& rng);

// Full evolutionary run on one training set.
RunResult run(const Dataset& train, const EvolutionConfig& cfg);

}  // namespace fruler
