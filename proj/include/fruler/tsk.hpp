#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "fruler/dataset.hpp"
#include "fruler/fuzzy.hpp"

namespace fruler {

class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class EmptyDesignError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// One displaced fuzzy partition per input variable. Variables with a
// single label are excluded from antecedents but still appear in every
// rule consequent.
struct DataBase {
    std::vector<FuzzyPartition> partitions;
    std::vector<std::size_t> antecedent_vars;  // indices with granularity >= 2

    static DataBase from_partitions(std::vector<FuzzyPartition> parts);
};

struct TskRule {
    std::vector<int> labels;  // one per antecedent variable, in DataBase order
    std::vector<double> beta;  // p + 1 coefficients, intercept first
};

struct TskRuleBase {
    DataBase database;
    std::vector<TskRule> rules;
    double fallback_output = 0.0;  // used when no rule covers the input
};

struct SgdConfig {
    double lambda = 1e-3;
    double alpha = 0.95;  // l2 weight; 1 - alpha goes to l1
    double eta0 = 0.1;
    std::uint64_t seed = 0;
    long max_epochs = 2000;  // safety cap over the improvement-driven stop
};

// min over antecedent variables of the label membership; 1 for an empty
// antecedent.
double matching_degree(const TskRule& rule, const DataBase& db, std::span<const double> x);

struct Prediction {
    double value = 0.0;
    bool covered = true;
};

Prediction predict_detail(const TskRuleBase& rb, std::span<const double> x);
double predict(const TskRuleBase& rb, std::span<const double> x);

// Wang & Mendel: per example the argmax-membership label tuple (ties to
// the lower label), deduplicated in first-appearance order.
std::vector<std::vector<int>> wang_mendel_antecedents(const DataBase& db, const Dataset& examples);

// Row-major design matrix for the joint consequent fit: per covered
// example, per rule k, the block (z_k, x_1*z_k, ..., x_p*z_k) with
// z_k = h_k / sum_u h_u.
struct DesignMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> a;  // rows * cols
    std::vector<double> y;
    std::size_t dropped = 0;  // examples with zero activation

    const double* row(std::size_t i) const { return a.data() + i * cols; }
};

DesignMatrix build_design_matrix(const std::vector<std::vector<int>>& antecedents,
                                 const DataBase& db, const Dataset& examples);

// Elastic-net linear regression via per-example gradient steps with a
// multiplicative l2 shrink factor and cumulative l1 clipping thresholds.
// Returns the coefficient vector at the best 1 - MSE proxy seen.
std::vector<double> sgd_elastic_net(const DesignMatrix& design, const SgdConfig& cfg);

struct TunedParams {
    double lambda = 1.0;
    double eta0 = 0.1;
};

// lambda from the grid {1, 1e-1, ..., 1e-10}; eta0 by halving from 0.1
// until the proxy worsens. Fits run on at most 1000 rows; when more rows
// exist the proxy is scored on the held-out remainder.
TunedParams tune_hyperparams(const DesignMatrix& design, double alpha, std::uint64_t seed);

TskRuleBase build_rulebase(const DataBase& db, const Dataset& examples, const SgdConfig& cfg);

}  // namespace fruler
