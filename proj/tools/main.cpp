#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "floodml/csv.hpp"
#include "floodml/pipeline.hpp"
#include "floodml/presets.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace floodml;

namespace {

struct RunConfig {
    fs::path config_dir;
    json raw;

    fs::path resolve(const std::string& key) const {
        const std::string p = raw.at(key).get<std::string>();
        fs::path path(p);
        return path.is_absolute() ? path : config_dir / path;
    }
    bool has(const std::string& key) const { return raw.contains(key); }
};

RunConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config " + path.string());
    RunConfig cfg;
    cfg.config_dir = path.parent_path();
    try {
        in >> cfg.raw;
    } catch (const json::exception& e) {
        throw Error("bad config " + path.string() + ": " + e.what());
    }
    return cfg;
}

StormConfig storm_from_config(const json& j) {
    StormConfig c;
    c.n_events = j.value("n_events", c.n_events);
    c.min_hours = j.value("min_hours", c.min_hours);
    c.max_hours = j.value("max_hours", c.max_hours);
    c.min_centers = j.value("min_centers", c.min_centers);
    c.max_centers = j.value("max_centers", c.max_centers);
    c.min_radius = j.value("min_radius", c.min_radius);
    c.max_radius = j.value("max_radius", c.max_radius);
    c.min_intensity = j.value("min_intensity", c.min_intensity);
    c.max_intensity = j.value("max_intensity", c.max_intensity);
    if (!j.contains("seed")) throw Error("config: storm.seed must be set explicitly");
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

OracleParams oracle_from_config(const json& j) {
    OracleParams p;
    p.runoff_channel = j.value("runoff_channel", p.runoff_channel);
    p.runoff_non_channel = j.value("runoff_non_channel", p.runoff_non_channel);
    p.infiltration_in = j.value("infiltration_in", p.infiltration_in);
    p.routing_weight = j.value("routing_weight", p.routing_weight);
    p.depth_cap_ft = j.value("depth_cap_ft", p.depth_cap_ft);
    return p;
}

Hyperparams hp_from_config(const json& j) {
    Hyperparams hp;
    hp.learning_rate = j.value("learning_rate", hp.learning_rate);
    hp.n_trees = j.value("n_trees", hp.n_trees);
    hp.max_depth = j.value("max_depth", hp.max_depth);
    hp.l1_alpha = j.value("l1_alpha", hp.l1_alpha);
    hp.l2_lambda = j.value("l2_lambda", hp.l2_lambda);
    hp.colsample_bytree = j.value("colsample_bytree", hp.colsample_bytree);
    hp.min_split_gain = j.value("min_split_gain", hp.min_split_gain);
    hp.seed = j.value("seed", hp.seed);
    return hp;
}

SplitSpec split_from_config(const json& j) {
    SplitSpec s;
    s.train_fraction = j.value("train_fraction", s.train_fraction);
    s.valid_fraction = j.value("valid_fraction", s.valid_fraction);
    s.test_fraction = j.value("test_fraction", s.test_fraction);
    if (!j.contains("seed")) throw Error("config: split.seed must be set explicitly");
    s.seed = j.at("seed").get<std::uint64_t>();
    return s;
}

Grid load_grid_from_config(const RunConfig& cfg) {
    const fs::path grid_path = cfg.resolve("grid");
    std::optional<fs::path> ws_path;
    if (cfg.has("watersheds")) ws_path = cfg.resolve("watersheds");

    if (!fs::exists(grid_path) && cfg.has("grid_preset")) {
        const std::string preset = cfg.raw.at("grid_preset").get<std::string>();
        Grid grid;
        if (preset == "desk400")
            grid = presets::desk_grid();
        else if (preset == "upstream_demo")
            grid = presets::upstream_demo_grid();
        else
            throw Error("unknown grid_preset '" + preset + "'");
        fs::create_directories(grid_path.parent_path().empty() ? "." : grid_path.parent_path());
        save_grid(grid, grid_path, ws_path);
        std::cerr << "wrote " << preset << " grid to " << grid_path.string() << "\n";
        return grid;
    }
    return load_grid(grid_path, ws_path);
}

Hyperparams hp_for_experiment(const RunConfig& cfg, Experiment exp) {
    if (cfg.has("hyperparams")) {
        const json& h = cfg.raw.at("hyperparams");
        if (h.contains(experiment_name(exp))) return hp_from_config(h.at(experiment_name(exp)));
    }
    return Hyperparams{};
}

std::string fmt_opt(const std::optional<double>& v) {
    if (!v) return "n/a";
    char buf[32];
    snprintf(buf, sizeof(buf), "%.4f", *v);
    return buf;
}

void print_summary(const TrainSummary& s) {
    std::cout << "experiment " << experiment_name(s.experiment) << ": trained " << s.n_trained
              << ", skipped " << s.n_skipped << ", failed " << s.n_failed << "\n";
    std::cout << "test R2   channel=" << fmt_opt(s.test_r2_aggregate.channel)
              << " non-channel=" << fmt_opt(s.test_r2_aggregate.non_channel)
              << " overall=" << fmt_opt(s.test_r2_aggregate.overall) << "\n";
    std::cout << "test RMSE channel=" << fmt_opt(s.test_rmse_aggregate.channel)
              << " non-channel=" << fmt_opt(s.test_rmse_aggregate.non_channel)
              << " overall=" << fmt_opt(s.test_rmse_aggregate.overall) << " (ft)\n";
}

int cmd_generate(const RunConfig& cfg, bool force) {
    const Grid grid = load_grid_from_config(cfg);
    const fs::path corpus_dir = cfg.resolve("corpus");
    if (fs::exists(corpus_dir / "corpus.json") && !force)
        throw Error("corpus already exists at " + corpus_dir.string() + " (use --force)");
    if (force) fs::remove_all(corpus_dir);

    Corpus corpus;
    corpus.storm = storm_from_config(cfg.raw.at("storm"));
    corpus.oracle = cfg.has("oracle") ? oracle_from_config(cfg.raw.at("oracle")) : OracleParams{};
    if (corpus.storm.max_intensity == 0.0)
        std::cerr << "warning: zero-intensity storm config produces null events\n";

    corpus.fields = generate_events(grid, corpus.storm);
    corpus.depths.reserve(corpus.fields.size());
    for (const RainfallField& f : corpus.fields)
        corpus.depths.push_back(simulate_peak_depth(grid, f, corpus.oracle));
    save_corpus(corpus, corpus_dir);
    std::cout << "corpus: " << corpus.n_events() << " events, " << grid.n_cells() << " cells\n";
    std::cout << "corpus_hash: " << corpus_hash(corpus_dir) << "\n";
    return 0;
}

int cmd_train(const RunConfig& cfg, const std::string& experiment, int workers, bool force) {
    const Grid grid = load_grid_from_config(cfg);
    const Experiment exp = parse_experiment(experiment);
    const fs::path corpus_dir = cfg.resolve("corpus");
    const Corpus corpus = load_corpus(corpus_dir);
    const SplitSpec split = split_from_config(cfg.raw.at("split"));
    const Hyperparams hp = hp_for_experiment(cfg, exp);

    TrainOptions options;
    options.workers = workers > 0 ? workers : cfg.raw.value("workers", 1);
    options.force = force;
    options.quiet = false;
    const TrainSummary summary =
        train_all(grid, corpus, corpus_dir, exp, hp, split, cfg.resolve("store"), options);
    print_summary(summary);
    return summary.n_failed == 0 ? 0 : 1;
}

int cmd_predict(const RunConfig& cfg, const std::string& rainfall, const std::string& out,
                bool combined, const std::string& experiment, int workers) {
    const Grid grid = load_grid_from_config(cfg);
    const fs::path store = cfg.resolve("store");
    const int n_workers = workers > 0 ? workers : cfg.raw.value("workers", 1);

    const auto t0 = std::chrono::steady_clock::now();
    CombinedPredictor predictor =
        combined ? build_combined(store, store, grid, n_workers)
                 : load_predictor(store, parse_experiment(experiment), grid, n_workers);
    const double load_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const RainfallField field = read_field(fs::path(rainfall));
    const PredictionResult result = predict_event(predictor, grid, field);

    fs::path out_path(out);
    if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
    write_depth_map(result.depth_ft, out_path);
    std::cout << "wrote " << out_path.string() << " (" << grid.n_cells() << " cells)\n";
    std::cout << "timing: model load " << load_s << " s, prediction " << result.seconds << " s\n";
    return 0;
}

std::vector<double> parse_bins(const std::string& bins) {
    std::vector<double> edges;
    std::stringstream ss(bins);
    std::string tok;
    while (std::getline(ss, tok, ',')) edges.push_back(std::stod(tok));
    return edges;
}

int cmd_evaluate(const RunConfig& cfg, const std::string& bins, int workers) {
    const Grid grid = load_grid_from_config(cfg);
    const fs::path store = cfg.resolve("store");
    const fs::path corpus_dir = cfg.resolve("corpus");
    const Corpus corpus = load_corpus(corpus_dir);
    const fs::path out_dir = cfg.has("output") ? cfg.resolve("output") : store / "reports";
    fs::create_directories(out_dir);
    const int n_workers = workers > 0 ? workers : cfg.raw.value("workers", 1);

    std::vector<double> edges =
        !bins.empty() ? parse_bins(bins)
                      : (cfg.has("bins_ft") ? cfg.raw.at("bins_ft").get<std::vector<double>>()
                                            : std::vector<double>{15.0, 25.0});

    const std::string hash = corpus_hash(corpus_dir);
    std::optional<EvaluationReport> rep1, rep2;
    for (Experiment exp : {Experiment::Exp1, Experiment::Exp2}) {
        const fs::path model_dir = store / experiment_name(exp);
        if (!fs::exists(model_dir)) continue;
        const StoreInfo info = read_store_info(store, exp);
        if (info.corpus_hash != hash)
            throw Error("store was trained on corpus " + info.corpus_hash + ", current corpus is " +
                        hash);
        const EventSplit split = split_events(corpus.n_events(), info.split);
        const CombinedPredictor predictor = load_predictor(store, exp, grid, n_workers);
        EvaluationReport rep =
            evaluate_predictor(predictor, grid, corpus, split.test, edges, experiment_name(exp));
        rep.write_json(out_dir / ("report_" + experiment_name(exp) + ".json"));
        rep.write_cell_csv(out_dir / ("report_" + experiment_name(exp) + "_cells.csv"));
        std::cout << experiment_name(exp) << ": R2 channel=" << fmt_opt(rep.r2_aggregate.channel)
                  << " non-channel=" << fmt_opt(rep.r2_aggregate.non_channel)
                  << " overall=" << fmt_opt(rep.r2_aggregate.overall) << "\n";
        (exp == Experiment::Exp1 ? rep1 : rep2) = std::move(rep);
    }
    if (!rep1 && !rep2) throw Error("store " + store.string() + " has no trained experiments");

    if (rep1 && rep2) {
        const StoreInfo info = read_store_info(store, Experiment::Exp1);
        const EventSplit split = split_events(corpus.n_events(), info.split);
        const CombinedPredictor predictor = build_combined(store, store, grid, n_workers);
        EvaluationReport combined =
            evaluate_predictor(predictor, grid, corpus, split.test, edges, "combined");
        combined.write_json(out_dir / "report_combined.json");
        combined.write_cell_csv(out_dir / "report_combined_cells.csv");
        std::cout << "combined: R2 channel=" << fmt_opt(combined.r2_aggregate.channel)
                  << " non-channel=" << fmt_opt(combined.r2_aggregate.non_channel)
                  << " overall=" << fmt_opt(combined.r2_aggregate.overall) << "\n";

        const auto diffs = diff_report(*rep1, *rep2);
        write_diff_csv(diffs, out_dir / "diff_exp1_exp2.csv");
    }
    std::cout << "reports written to " << out_dir.string() << "\n";
    return 0;
}

int cmd_importance(const RunConfig& cfg, const std::string& experiment, double threshold,
                   const std::string& cells_arg, const std::string& out) {
    const Grid grid = load_grid_from_config(cfg);
    const fs::path store = cfg.resolve("store");
    const Experiment exp = parse_experiment(experiment);

    std::vector<int> cells;
    if (cells_arg.empty()) {
        cells.resize(grid.n_cells());
        for (int c = 0; c < grid.n_cells(); ++c) cells[c] = c;
    } else {
        std::stringstream ss(cells_arg);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            const int c = std::stoi(tok);
            if (c < 0 || c >= grid.n_cells())
                throw Error("unknown cell id " + tok + " (grid has " +
                            std::to_string(grid.n_cells()) + " cells)");
            cells.push_back(c);
        }
    }

    fs::path out_path = out.empty() ? (cfg.has("output") ? cfg.resolve("output") : store) /
                                          ("importance_" + experiment_name(exp) + ".csv")
                                    : fs::path(out);
    if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
    csv::Writer w(out_path);
    w.header("cell_id,feature,fraction");
    for (int c : cells) {
        const fs::path mp = store / experiment_name(exp) / ("cell_" + std::to_string(c) + ".model.json");
        const GbdtModel model = load_model(mp);
        const ImportanceResult imp = feature_importance(model);
        std::vector<std::pair<double, int>> ranked;
        for (std::size_t f = 0; f < imp.fractions.size(); ++f)
            if (imp.fractions[f] >= threshold && imp.fractions[f] > 0.0)
                ranked.emplace_back(-imp.fractions[f], static_cast<int>(f));
        std::sort(ranked.begin(), ranked.end());
        for (const auto& [neg, f] : ranked) w.row(c, model.feature_names[f], -neg);
    }
    std::cout << "wrote " << out_path.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"per-cell gradient-boosted surrogate for peak flood depth prediction"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "run configuration (JSON)")->required();

    int workers = 0;
    app.add_option("--workers", workers, "worker threads (overrides config)");
    bool force = false;
    app.add_flag("--force", force, "overwrite existing corpus / retrain existing models");
    std::optional<std::uint64_t> seed_override;
    app.add_option("--seed", seed_override, "override storm seed from config");

    auto* generate = app.add_subcommand("generate", "generate a synthetic storm corpus");

    auto* train = app.add_subcommand("train", "train per-cell models for one experiment");
    std::string experiment;
    train->add_option("--experiment", experiment, "exp1 or exp2")->required();

    auto* predict = app.add_subcommand("predict", "predict a depth map for one rainfall field");
    std::string rainfall, predict_out = "depth_map.csv", predict_exp = "exp1";
    bool combined = false;
    predict->add_option("--rainfall", rainfall, "rainfall field CSV")->required();
    predict->add_option("--out", predict_out, "output depth map CSV");
    predict->add_flag("--combined", combined, "exp2 on channel cells, exp1 elsewhere");
    predict->add_option("--experiment", predict_exp, "experiment when not --combined");

    auto* evaluate = app.add_subcommand("evaluate", "evaluate stores on the held-out test events");
    std::string bins;
    evaluate->add_option("--bins", bins, "depth bin edges in feet, e.g. 15,25");

    auto* importance = app.add_subcommand("importance", "per-cell gain importance report");
    std::string imp_exp = "exp2", imp_cells, imp_out;
    double threshold = 0.10;
    importance->add_option("--experiment", imp_exp, "exp1 or exp2");
    importance->add_option("--threshold", threshold, "minimum importance fraction");
    importance->add_option("--cells", imp_cells, "comma-separated cell ids (default: all)");
    importance->add_option("--out", imp_out, "output CSV path");

    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig cfg = load_config(config_path);
        if (seed_override && cfg.raw.contains("storm")) cfg.raw["storm"]["seed"] = *seed_override;
        if (generate->parsed()) return cmd_generate(cfg, force);
        if (train->parsed()) return cmd_train(cfg, experiment, workers, force);
        if (predict->parsed())
            return cmd_predict(cfg, rainfall, predict_out, combined, predict_exp, workers);
        if (evaluate->parsed()) return cmd_evaluate(cfg, bins, workers);
        if (importance->parsed()) return cmd_importance(cfg, imp_exp, threshold, imp_cells, imp_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
