#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fruler/evolution.hpp"
#include "fruler/tsk.hpp"

namespace fruler {

class ModelSchemaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// On-disk model: raw splits plus displacements per variable (partitions are
// rebuilt on load), rules with per-variable labels (null when the variable
// is not in the antecedent), and the fitting metadata.
struct ModelFile {
    struct Variable {
        std::string name;
        int granularity = 1;
        std::vector<double> splits;
        std::vector<double> alphas;
        double fuzziness = 1.0;
    };
    struct Rule {
        std::vector<int> labels;  // -1 encodes "not used" (JSON null)
        std::vector<double> beta;
    };
    std::vector<Variable> variables;
    std::vector<Rule> rules;
    std::uint64_t seed = 0;
    double lambda = 0.0;
    double alpha = 0.0;
    double eta0 = 0.0;
    double train_mse = 0.0;
    double train_y_mean = 0.0;
};

ModelFile make_model_file(const Dataset& train, const RunResult& result,
                          const EvolutionConfig& cfg);

TskRuleBase assemble_rulebase(const ModelFile& file);

std::string model_to_json(const ModelFile& file);
ModelFile model_from_json(const std::string& text);

void save_model(const ModelFile& file, const std::string& path);
ModelFile load_model(const std::string& path);

// Rule-per-rule text dump; with normalize the weights are shown as
// absolute values scaled so the largest equals 1.
std::string inspect_text(const ModelFile& file, bool normalize);

}  // namespace fruler
