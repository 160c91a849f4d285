#include "fruler/model_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace fruler {

using nlohmann::json;

ModelFile make_model_file(const Dataset& train, const RunResult& result,
                          const EvolutionConfig& cfg) {
    ModelFile file;
    const std::size_t p = train.p();
    file.variables.resize(p);
    for (std::size_t v = 0; v < p; ++v) {
        auto& var = file.variables[v];
        var.name = train.variables()[v].name;
        var.granularity = result.best.granularity[v];
        var.splits = result.best_raw_splits[v];
        var.alphas = result.best.alphas[v];
        var.fuzziness = cfg.fuzziness;
    }
    // expand antecedents to one slot per variable, -1 where unused
    const auto& ant_vars = result.model.database.antecedent_vars;
    for (const TskRule& rule : result.model.rules) {
        ModelFile::Rule out;
        out.labels.assign(p, -1);
        for (std::size_t k = 0; k < ant_vars.size(); ++k) out.labels[ant_vars[k]] = rule.labels[k];
        out.beta = rule.beta;
        file.rules.push_back(std::move(out));
    }
    file.seed = cfg.seed;
    file.lambda = result.report.lambda;
    file.alpha = cfg.alpha;
    file.eta0 = result.report.eta0;
    file.train_mse = result.report.train_mse;
    file.train_y_mean = result.model.fallback_output;
    return file;
}

TskRuleBase assemble_rulebase(const ModelFile& file) {
    std::vector<FuzzyPartition> parts;
    parts.reserve(file.variables.size());
    for (const auto& var : file.variables) {
        if (var.granularity >= 2) {
            const auto displaced = apply_displacement(var.splits, Displacement{var.alphas});
            parts.push_back(build_partition(displaced, var.fuzziness));
        } else {
            parts.push_back(build_partition(var.splits, var.fuzziness));
        }
    }
    TskRuleBase rb;
    rb.database = DataBase::from_partitions(std::move(parts));
    for (const auto& rule : file.rules) {
        TskRule r;
        for (std::size_t v : rb.database.antecedent_vars) {
            if (rule.labels[v] < 0)
                throw ModelSchemaError("rule lacks a label for antecedent variable " +
                                       std::to_string(v));
            r.labels.push_back(rule.labels[v]);
        }
        r.beta = rule.beta;
        rb.rules.push_back(std::move(r));
    }
    rb.fallback_output = file.train_y_mean;
    return rb;
}

std::string model_to_json(const ModelFile& file) {
    json root;
    root["variables"] = json::array();
    for (const auto& var : file.variables) {
        root["variables"].push_back({{"name", var.name},
                                     {"granularity", var.granularity},
                                     {"splits", var.splits},
                                     {"alphas", var.alphas},
                                     {"fuzziness", var.fuzziness}});
    }
    root["rules"] = json::array();
    for (const auto& rule : file.rules) {
        json labels = json::array();
        for (int l : rule.labels) {
            if (l < 0)
                labels.push_back(nullptr);
            else
                labels.push_back(l);
        }
        root["rules"].push_back({{"antecedent", labels}, {"beta", rule.beta}});
    }
    root["metadata"] = {{"seed", file.seed},       {"lambda", file.lambda},
                        {"alpha", file.alpha},     {"eta0", file.eta0},
                        {"train_mse", file.train_mse}, {"train_y_mean", file.train_y_mean}};
    return root.dump(2) + "\n";
}

ModelFile model_from_json(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& e) {
        throw ModelSchemaError(std::string("model is not valid JSON: ") + e.what());
    }
    try {
        ModelFile file;
        for (const auto& v : root.at("variables")) {
            ModelFile::Variable var;
            var.name = v.at("name").get<std::string>();
            var.granularity = v.at("granularity").get<int>();
            var.splits = v.at("splits").get<std::vector<double>>();
            var.alphas = v.at("alphas").get<std::vector<double>>();
            var.fuzziness = v.at("fuzziness").get<double>();
            file.variables.push_back(std::move(var));
        }
        for (const auto& r : root.at("rules")) {
            ModelFile::Rule rule;
            for (const auto& l : r.at("antecedent"))
                rule.labels.push_back(l.is_null() ? -1 : l.get<int>());
            rule.beta = r.at("beta").get<std::vector<double>>();
            if (rule.labels.size() != file.variables.size())
                throw ModelSchemaError("antecedent width does not match variable count");
            if (rule.beta.size() != file.variables.size() + 1)
                throw ModelSchemaError("beta length must be p + 1");
            file.rules.push_back(std::move(rule));
        }
        const auto& meta = root.at("metadata");
        file.seed = meta.at("seed").get<std::uint64_t>();
        file.lambda = meta.at("lambda").get<double>();
        file.alpha = meta.at("alpha").get<double>();
        file.eta0 = meta.at("eta0").get<double>();
        file.train_mse = meta.at("train_mse").get<double>();
        file.train_y_mean = meta.at("train_y_mean").get<double>();
        if (file.rules.empty()) throw ModelSchemaError("model has no rules");
        return file;
    } catch (const json::exception& e) {
        throw ModelSchemaError(std::string("model schema mismatch: ") + e.what());
    }
}

void save_model(const ModelFile& file, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << model_to_json(file);
}

ModelFile load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return model_from_json(ss.str());
}

std::string inspect_text(const ModelFile& file, bool normalize) {
    double scale = 1.0;
    if (normalize) {
        double max_abs = 0.0;
        for (const auto& rule : file.rules)
            for (double b : rule.beta) max_abs = std::max(max_abs, std::abs(b));
        if (max_abs > 0.0) scale = 1.0 / max_abs;
    }
    std::ostringstream out;
    char buf[32];
    auto fmt = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.6g", normalize ? std::abs(v) * scale : v);
        return std::string(buf);
    };
    for (std::size_t k = 0; k < file.rules.size(); ++k) {
        const auto& rule = file.rules[k];
        out << "RULE " << (k + 1) << ": IF ";
        bool first = true;
        bool any = false;
        for (std::size_t v = 0; v < file.variables.size(); ++v) {
            if (rule.labels[v] < 0) continue;
            if (!first) out << " AND ";
            out << file.variables[v].name << " IS L" << (rule.labels[v] + 1) << "/"
                << file.variables[v].granularity;
            first = false;
            any = true;
        }
        if (!any) out << "(always)";
        out << " THEN y = " << fmt(rule.beta[0]);
        for (std::size_t v = 0; v < file.variables.size(); ++v)
            out << " + " << fmt(rule.beta[v + 1]) << "*" << file.variables[v].name;
        out << "\n";
    }
    return out.str();
}

}  // namespace fruler
