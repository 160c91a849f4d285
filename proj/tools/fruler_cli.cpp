// fruler: batch front end for the pipeline
//   select -> discretize -> train -> predict / crossval / inspect

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <future>
#include <iostream>
#include <numeric>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fruler/dataset.hpp"
#include "fruler/discretize.hpp"
#include "fruler/evolution.hpp"
#include "fruler/kernels.hpp"
#include "fruler/model_io.hpp"
#include "fruler/selection.hpp"

using nlohmann::json;
using namespace fruler;

namespace {

struct CommonOpts {
    std::string dataset_path;
    std::string format = "auto";
    std::uint64_t seed = 0;
};

Format resolve_format(const CommonOpts& opts) {
    if (opts.format == "keel") return Format::Keel;
    if (opts.format == "csv") return Format::Csv;
    const auto dot = opts.dataset_path.find_last_of('.');
    const std::string ext = dot == std::string::npos ? "" : opts.dataset_path.substr(dot + 1);
    return ext == "dat" || ext == "keel" ? Format::Keel : Format::Csv;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << text;
}

json config_echo(const EvolutionConfig& cfg, const CommonOpts& opts, std::size_t folds,
                 std::size_t trials, std::size_t jobs) {
    return {{"dataset", opts.dataset_path}, {"seed", cfg.seed},
            {"folds", folds},               {"trials", trials},
            {"budget", cfg.budget},         {"population", cfg.population},
            {"pcross", cfg.p_cross},        {"pmut", cfg.p_mut},
            {"nls", cfg.n_ls},              {"alpha", cfg.alpha},
            {"fuzziness", cfg.fuzziness},   {"skip_selection", cfg.skip_selection},
            {"jobs", jobs},                 {"simd", kernels::backend_name(kernels::active_backend())}};
}

json report_json(const RunReport& r) {
    return {{"train_mse", r.train_mse},
            {"train_mse_plain", r.train_mse_plain},
            {"n_rules", r.n_rules},
            {"granularities", r.granularities},
            {"reduction_pct", r.reduction_pct},
            {"error_increase", r.error_increase},
            {"evaluations", r.evaluations},
            {"restarts", r.restarts},
            {"lambda", r.lambda},
            {"eta0", r.eta0},
            {"uncovered_train", r.uncovered_train},
            {"wall_time_s", r.wall_time_s}};
}

struct FoldOutcome {
    RunResult result;
    double test_mse = 0.0;        // half-factor form
    double test_mse_plain = 0.0;
};

FoldOutcome run_fold(const Dataset& full, const std::vector<std::size_t>& train_idx,
                     const std::vector<std::size_t>& test_idx, EvolutionConfig cfg) {
    const Dataset train = full.subset(train_idx);
    FoldOutcome outcome;
    outcome.result = run(train, cfg);
    if (!test_idx.empty()) {
        const Dataset test = full.subset(test_idx);
        double acc = 0.0;
        for (std::size_t i = 0; i < test.n(); ++i) {
            const double err = predict(outcome.result.model, test.x(i)) - test.y(i);
            acc += err * err;
        }
        outcome.test_mse_plain = acc / static_cast<double>(test.n());
        outcome.test_mse = 0.5 * outcome.test_mse_plain;
    }
    return outcome;
}

std::size_t effective_jobs(std::size_t flag_jobs) {
    if (const char* env = std::getenv("FRULER_JOBS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<std::size_t>(v);
    }
    return flag_jobs >= 1 ? flag_jobs : 1;
}

int cmd_select(const CommonOpts& opts, const std::string& output) {
    const Dataset d = load_dataset(opts.dataset_path, resolve_format(opts));
    const SelectionResult sel = select_instances(d, opts.seed);
    json out{{"selected", sel.selected},
             {"reduction_pct", sel.reduction_pct},
             {"error_increase", sel.error_increase},
             {"k0", sel.k0},
             {"c", sel.class_count}};
    const std::string text = out.dump(2) + "\n";
    if (output.empty())
        std::cout << text;
    else
        write_text(output, text);
    return 0;
}

int cmd_discretize(const CommonOpts& opts, bool skip_selection, const std::string& output) {
    const Dataset d = load_dataset(opts.dataset_path, resolve_format(opts));
    std::vector<std::size_t> rows(d.n());
    std::iota(rows.begin(), rows.end(), 0);
    if (!skip_selection) rows = select_instances(d, opts.seed).selected;
    const Dataset base = d.subset(rows);
    const auto ladders = discretize_all(base);

    json vars = json::array();
    for (std::size_t v = 0; v < ladders.size(); ++v) {
        vars.push_back({{"name", d.variables()[v].name},
                        {"chosen_max", ladders[v].chosen_max},
                        {"splits_per_granularity", ladders[v].splits_per_granularity},
                        {"bic_trace", ladders[v].bic_trace}});
    }
    json out{{"variables", vars}, {"examples_used", base.n()}};
    const std::string text = out.dump(2) + "\n";
    if (output.empty())
        std::cout << text;
    else
        write_text(output, text);
    return 0;
}

int cmd_train(const CommonOpts& opts, EvolutionConfig cfg, std::size_t folds,
              const std::string& model_path, const std::string& report_path) {
    const Dataset d = load_dataset(opts.dataset_path, resolve_format(opts));
    cfg.seed = opts.seed;

    std::vector<std::size_t> train_idx(d.n());
    std::iota(train_idx.begin(), train_idx.end(), 0);
    std::vector<std::size_t> test_idx;
    if (folds >= 2) {
        FoldSplit split;
        try {
            split = kfold_split(d, folds, opts.seed);
        } catch (const std::invalid_argument& e) {
            std::cerr << "fold construction failed: " << e.what() << "\n";
            return 2;
        }
        test_idx = split.fold_indices(0);
        train_idx = split.complement_indices(0);
    }

    const FoldOutcome outcome = run_fold(d, train_idx, test_idx, cfg);
    const Dataset train = d.subset(train_idx);
    const ModelFile file = make_model_file(train, outcome.result, cfg);
    if (!model_path.empty()) save_model(file, model_path);

    json rep{{"config", config_echo(cfg, opts, folds, 1, 1)},
             {"report", report_json(outcome.result.report)}};
    if (!test_idx.empty()) {
        rep["report"]["test_mse"] = outcome.test_mse;
        rep["report"]["test_mse_plain"] = outcome.test_mse_plain;
    }
    const std::string text = rep.dump(2) + "\n";
    if (report_path.empty())
        std::cout << text;
    else
        write_text(report_path, text);
    return 0;
}

int cmd_crossval(const CommonOpts& opts, EvolutionConfig cfg, std::size_t folds,
                 std::size_t trials, std::size_t jobs, const std::string& model_prefix,
                 const std::string& report_path) {
    const Dataset d = load_dataset(opts.dataset_path, resolve_format(opts));

    struct Task {
        std::size_t trial, fold;
        std::vector<std::size_t> train_idx, test_idx;
        EvolutionConfig cfg;
    };
    std::vector<Task> tasks;
    for (std::size_t t = 0; t < trials; ++t) {
        FoldSplit split;
        try {
            split = kfold_split(d, folds, Rng::substream(opts.seed, "trial", t).next());
        } catch (const std::invalid_argument& e) {
            std::cerr << "fold construction failed: " << e.what() << "\n";
            return 2;
        }
        for (std::size_t f = 0; f < folds; ++f) {
            Task task{t, f, split.complement_indices(f), split.fold_indices(f), cfg};
            task.cfg.seed = Rng::substream(opts.seed, "run", t, f).next();
            tasks.push_back(std::move(task));
        }
    }

    const std::size_t workers = std::min(effective_jobs(jobs), tasks.size());
    std::vector<FoldOutcome> outcomes(tasks.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) break;
            outcomes[i] = run_fold(d, tasks[i].train_idx, tasks[i].test_idx, tasks[i].cfg);
        }
    };
    std::vector<std::future<void>> futures;
    for (std::size_t w = 0; w + 1 < workers; ++w)
        futures.push_back(std::async(std::launch::async, worker));
    worker();
    for (auto& f : futures) f.get();

    json fold_reports = json::array();
    double mean_test = 0.0, mean_test_plain = 0.0, mean_rules = 0.0, mean_red = 0.0;
    double mean_gran = 0.0;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        const auto& rep = outcomes[i].result.report;
        json jr = report_json(rep);
        jr["trial"] = tasks[i].trial;
        jr["fold"] = tasks[i].fold;
        jr["test_mse"] = outcomes[i].test_mse;
        jr["test_mse_plain"] = outcomes[i].test_mse_plain;
        fold_reports.push_back(jr);
        mean_test += outcomes[i].test_mse;
        mean_test_plain += outcomes[i].test_mse_plain;
        mean_rules += static_cast<double>(rep.n_rules);
        mean_red += rep.reduction_pct;
        double g = 0.0;
        for (int gg : rep.granularities) g += gg;
        mean_gran += g / static_cast<double>(rep.granularities.size());

        if (!model_prefix.empty()) {
            const Dataset train = d.subset(tasks[i].train_idx);
            const ModelFile file = make_model_file(train, outcomes[i].result, tasks[i].cfg);
            save_model(file, model_prefix + "_t" + std::to_string(tasks[i].trial) + "_f" +
                                 std::to_string(tasks[i].fold) + ".json");
        }
    }
    const double count = static_cast<double>(tasks.size());
    json rep{{"config", config_echo(cfg, opts, folds, trials, workers)},
             {"folds", fold_reports},
             {"mean",
              {{"test_mse", mean_test / count},
               {"test_mse_plain", mean_test_plain / count},
               {"n_rules", mean_rules / count},
               {"reduction_pct", mean_red / count},
               {"granularity_mean", mean_gran / count}}}};
    const std::string text = rep.dump(2) + "\n";
    if (report_path.empty())
        std::cout << text;
    else
        write_text(report_path, text);
    return 0;
}

int cmd_predict(const std::string& model_path, const std::string& input_path,
                const std::string& output_path) {
    const ModelFile file = load_model(model_path);
    const TskRuleBase rb = assemble_rulebase(file);
    const std::size_t p = file.variables.size();

    std::ifstream in(input_path);
    if (!in) throw std::runtime_error("cannot open '" + input_path + "'");
    std::ofstream out(output_path);
    if (!out) throw std::runtime_error("cannot write '" + output_path + "'");

    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty input file");
    out << "prediction\n";
    char buf[32];
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<double> x;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= line.size(); ++i) {
            if (i == line.size() || line[i] == ',') {
                const std::string cell = line.substr(start, i - start);
                try {
                    x.push_back(std::stod(cell));
                } catch (...) {
                    throw ParseError("line " + std::to_string(line_no) + ": non-numeric cell '" +
                                     cell + "'");
                }
                start = i + 1;
            }
        }
        if (x.size() != p && x.size() != p + 1)
            throw ParseError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(p) + " input columns, got " + std::to_string(x.size()));
        x.resize(p);  // a trailing output column is ignored
        std::snprintf(buf, sizeof buf, "%.17g", predict(rb, x));
        out << buf << "\n";
    }
    return 0;
}

int cmd_inspect(const std::string& model_path, bool normalize) {
    ModelFile file;
    try {
        file = load_model(model_path);
    } catch (const ModelSchemaError& e) {
        std::cerr << "model schema mismatch: " << e.what() << "\n";
        return 3;
    }
    std::cout << inspect_text(file, normalize);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"FRULER: linguistic TSK fuzzy rule learning for regression"};
    app.require_subcommand(1);

    CommonOpts opts;
    EvolutionConfig cfg;
    std::size_t folds = 1, trials = 1, jobs = 1;
    std::string output, model_path = "model.json", report_path, model_prefix, input_path;
    bool skip_sel = false, normalize = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("dataset", opts.dataset_path, "dataset file")->required();
        sub->add_option("--format", opts.format, "keel|csv|auto (default: by extension)");
        sub->add_option("--seed", opts.seed, "master random seed");
    };
    auto add_evolution = [&](CLI::App* sub) {
        sub->add_option("--budget", cfg.budget, "evaluation budget (default 100000)");
        sub->add_option("--population", cfg.population, "population size (default 61)");
        sub->add_option("--pmut", cfg.p_mut, "mutation probability (default 0.2)");
        sub->add_option("--nls", cfg.n_ls, "local search candidates (default 5)");
        sub->add_option("--alpha", cfg.alpha, "elastic-net l2/l1 trade-off (default 0.95)");
        sub->add_option("--fuzziness", cfg.fuzziness, "partition fuzziness (default 1.0)");
        sub->add_flag("--skip-selection", cfg.skip_selection, "train on all examples");
    };

    auto* select = app.add_subcommand("select", "instance selection report");
    add_common(select);
    select->add_option("--output", output, "write the JSON report here (default stdout)");

    auto* disc = app.add_subcommand("discretize", "multi-granularity discretization report");
    add_common(disc);
    disc->add_flag("--skip-selection", skip_sel, "discretize the full training set");
    disc->add_option("--output", output, "write the JSON report here (default stdout)");

    auto* train = app.add_subcommand("train", "train one model");
    add_common(train);
    add_evolution(train);
    train->add_option("--folds", folds, "when >= 2, hold out fold 0 as test");
    train->add_option("--output", model_path, "model file (default model.json)");
    train->add_option("--report", report_path, "report file (default stdout)");

    auto* crossval = app.add_subcommand("crossval", "k-fold x t-trial cross validation");
    add_common(crossval);
    add_evolution(crossval);
    crossval->add_option("--folds", folds, "fold count (default 5)")->default_val(5);
    crossval->add_option("--trials", trials, "trial count (default 1)");
    crossval->add_option("--jobs", jobs, "concurrent fold runs (FRULER_JOBS overrides)");
    crossval->add_option("--models", model_prefix, "write per-fold models with this prefix");
    crossval->add_option("--report", report_path, "report file (default stdout)");

    auto* predict_cmd = app.add_subcommand("predict", "predict a CSV of inputs");
    predict_cmd->add_option("model", model_path, "model file")->required();
    predict_cmd->add_option("input", input_path, "input CSV (header + p columns)")->required();
    predict_cmd->add_option("output", output, "output CSV")->required();

    auto* inspect = app.add_subcommand("inspect", "dump the rules as text");
    inspect->add_option("model", model_path, "model file")->required();
    inspect->add_flag("--normalize", normalize, "scale |beta| so the maximum is 1");

    CLI11_PARSE(app, argc, argv);

    try {
        if (select->parsed()) return cmd_select(opts, output);
        if (disc->parsed()) return cmd_discretize(opts, skip_sel, output);
        if (train->parsed()) {
            cfg.seed = opts.seed;
            return cmd_train(opts, cfg, folds, model_path, report_path);
        }
        if (crossval->parsed()) {
            cfg.seed = opts.seed;
            return cmd_crossval(opts, cfg, folds, trials, jobs, model_prefix, report_path);
        }
        if (predict_cmd->parsed()) return cmd_predict(model_path, input_path, output);
        if (inspect->parsed()) return cmd_inspect(model_path, normalize);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
