#include "floodml/pipeline.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

#include "floodml/csv.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace floodml {

void SplitSpec::validate() const {
    if (train_fraction < 0.0 || valid_fraction < 0.0 || test_fraction < 0.0)
        throw Error("split spec: negative fraction");
    if (std::abs(train_fraction + valid_fraction + test_fraction - 1.0) > 1e-9)
        throw Error("split spec: fractions must sum to 1");
}

EventSplit split_events(int n_events, const SplitSpec& spec) {
    spec.validate();
    if (n_events < 5) throw Error("split_events: need at least 5 events");
    const int n_valid = static_cast<int>(std::llround(spec.valid_fraction * n_events));
    const int n_test = static_cast<int>(std::llround(spec.test_fraction * n_events));
    const int n_train = n_events - n_valid - n_test;
    if (n_train < 1 || n_valid < 1 || n_test < 1)
        throw Error("split_events: " + std::to_string(n_events) +
                    " events is too small for non-empty partitions");

    std::vector<int> ids(n_events);
    for (int i = 0; i < n_events; ++i) ids[i] = i;
    Rng rng(spec.seed);
    for (int i = n_events - 1; i > 0; --i) {
        const int j = static_cast<int>(rng.uniform_int(0, i));
        std::swap(ids[i], ids[j]);
    }

    EventSplit split;
    split.train.assign(ids.begin(), ids.begin() + n_train);
    split.valid.assign(ids.begin() + n_train, ids.begin() + n_train + n_valid);
    split.test.assign(ids.begin() + n_train + n_valid, ids.end());
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.valid.begin(), split.valid.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

// ---------------------------------------------------------------------------
// corpus I/O

namespace {

json storm_to_json(const StormConfig& c) {
    return {{"n_events", c.n_events},       {"min_hours", c.min_hours},
            {"max_hours", c.max_hours},     {"min_centers", c.min_centers},
            {"max_centers", c.max_centers}, {"min_radius", c.min_radius},
            {"max_radius", c.max_radius},   {"min_intensity", c.min_intensity},
            {"max_intensity", c.max_intensity}, {"seed", c.seed}};
}

StormConfig storm_from_json(const json& j) {
    StormConfig c;
    c.n_events = j.at("n_events").get<int>();
    c.min_hours = j.at("min_hours").get<int>();
    c.max_hours = j.at("max_hours").get<int>();
    c.min_centers = j.at("min_centers").get<int>();
    c.max_centers = j.at("max_centers").get<int>();
    c.min_radius = j.at("min_radius").get<double>();
    c.max_radius = j.at("max_radius").get<double>();
    c.min_intensity = j.at("min_intensity").get<double>();
    c.max_intensity = j.at("max_intensity").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

json oracle_to_json(const OracleParams& p) {
    return {{"runoff_channel", p.runoff_channel},
            {"runoff_non_channel", p.runoff_non_channel},
            {"infiltration_in", p.infiltration_in},
            {"routing_weight", p.routing_weight},
            {"depth_cap_ft", p.depth_cap_ft}};
}

OracleParams oracle_from_json(const json& j) {
    OracleParams p;
    p.runoff_channel = j.at("runoff_channel").get<double>();
    p.runoff_non_channel = j.at("runoff_non_channel").get<double>();
    p.infiltration_in = j.at("infiltration_in").get<double>();
    p.routing_weight = j.at("routing_weight").get<double>();
    p.depth_cap_ft = j.at("depth_cap_ft").get<double>();
    return p;
}

json split_to_json(const SplitSpec& s) {
    return {{"train_fraction", s.train_fraction},
            {"valid_fraction", s.valid_fraction},
            {"test_fraction", s.test_fraction},
            {"seed", s.seed}};
}

SplitSpec split_from_json(const json& j) {
    SplitSpec s;
    s.train_fraction = j.at("train_fraction").get<double>();
    s.valid_fraction = j.at("valid_fraction").get<double>();
    s.test_fraction = j.at("test_fraction").get<double>();
    s.seed = j.at("seed").get<std::uint64_t>();
    return s;
}

json hp_to_json(const Hyperparams& hp) {
    return {{"learning_rate", hp.learning_rate},
            {"n_trees", hp.n_trees},
            {"max_depth", hp.max_depth},
            {"l1_alpha", hp.l1_alpha},
            {"l2_lambda", hp.l2_lambda},
            {"colsample_bytree", hp.colsample_bytree},
            {"min_split_gain", hp.min_split_gain},
            {"seed", hp.seed}};
}

Hyperparams hp_from_json(const json& j) {
    Hyperparams hp;
    hp.learning_rate = j.at("learning_rate").get<double>();
    hp.n_trees = j.at("n_trees").get<int>();
    hp.max_depth = j.at("max_depth").get<int>();
    hp.l1_alpha = j.at("l1_alpha").get<double>();
    hp.l2_lambda = j.at("l2_lambda").get<double>();
    hp.colsample_bytree = j.at("colsample_bytree").get<double>();
    hp.min_split_gain = j.at("min_split_gain").get<double>();
    hp.seed = j.at("seed").get<std::uint64_t>();
    return hp;
}

void write_json_atomic(const json& j, const fs::path& path, int indent = -1) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw Error("cannot write " + tmp.string());
        out << j.dump(indent) << '\n';
    }
    fs::rename(tmp, path);
}

json read_json(const fs::path& path, const char* what) {
    std::ifstream in(path);
    if (!in) throw Error(std::string("cannot open ") + what + " " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error("corrupt " + std::string(what) + " " + path.string() + ": " + e.what());
    }
    return j;
}

fs::path event_dir(const fs::path& root, int event) {
    return root / "events" / std::to_string(event);
}

void write_depth_csv(std::span<const double> depth, const fs::path& path) {
    csv::Writer w(path);
    w.header("cell_id,peak_depth_ft");
    for (std::size_t c = 0; c < depth.size(); ++c) w.row(c, depth[c]);
}

std::vector<double> read_depth_csv(const fs::path& path) {
    std::vector<std::pair<int, double>> rows;
    csv::read_file(path, "cell_id,peak_depth_ft",
                   [&](const std::vector<std::string>& f, std::size_t ln) {
                       if (f.size() != 2) throw ParseError("expected 2 fields", ln);
                       rows.emplace_back(static_cast<int>(csv::parse_int(f[0], ln, "cell_id")),
                                         csv::parse_double(f[1], ln, "peak_depth_ft"));
                   });
    std::vector<double> out(rows.size(), 0.0);
    for (const auto& [c, v] : rows) {
        if (c < 0 || c >= static_cast<int>(out.size()))
            throw Error("depth file " + path.string() + ": non-dense cell ids");
        out[c] = v;
    }
    return out;
}

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

void fnv1a_file(const fs::path& path, std::uint64_t& h) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        const std::streamsize n = in.gcount();
        for (std::streamsize i = 0; i < n; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= kFnvPrime;
        }
    }
}

std::string to_hex(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4) s[i] = digits[v & 0xf];
    return s;
}

}  // namespace

void save_corpus(const Corpus& corpus, const fs::path& dir) {
    if (corpus.fields.size() != corpus.depths.size())
        throw Error("save_corpus: rainfall/depth event counts differ");
    fs::create_directories(dir / "events");
    for (int e = 0; e < corpus.n_events(); ++e) {
        const fs::path ed = event_dir(dir, e);
        fs::create_directories(ed);
        write_field(corpus.fields[e], ed / "rainfall.csv");
        write_depth_csv(corpus.depths[e], ed / "depth.csv");
    }
    json manifest;
    manifest["format"] = "floodml.corpus";
    manifest["version"] = 1;
    manifest["n_events"] = corpus.n_events();
    manifest["n_cells"] = corpus.n_cells();
    manifest["storm"] = storm_to_json(corpus.storm);
    manifest["oracle"] = oracle_to_json(corpus.oracle);
    manifest["corpus_hash"] = corpus_hash(dir);
    write_json_atomic(manifest, dir / "corpus.json", 2);
}

Corpus load_corpus(const fs::path& dir) {
    const json manifest = read_json(dir / "corpus.json", "corpus manifest");
    try {
        if (manifest.at("format").get<std::string>() != "floodml.corpus")
            throw Error("not a corpus directory: " + dir.string());
        Corpus corpus;
        corpus.storm = storm_from_json(manifest.at("storm"));
        corpus.oracle = oracle_from_json(manifest.at("oracle"));
        const int n_events = manifest.at("n_events").get<int>();
        corpus.fields.reserve(n_events);
        corpus.depths.reserve(n_events);
        for (int e = 0; e < n_events; ++e) {
            const fs::path ed = event_dir(dir, e);
            corpus.fields.push_back(read_field(ed / "rainfall.csv"));
            corpus.depths.push_back(read_depth_csv(ed / "depth.csv"));
            if (static_cast<int>(corpus.depths.back().size()) != corpus.fields.back().n_cells)
                throw Error("event " + std::to_string(e) + ": depth/rainfall cell counts differ");
        }
        return corpus;
    } catch (const json::exception& e) {
        throw Error("corrupt corpus manifest in " + dir.string() + ": " + e.what());
    }
}

std::string corpus_hash(const fs::path& dir) {
    const json manifest = read_json(dir / "corpus.json", "corpus manifest");
    int n_events = 0;
    try {
        n_events = manifest.at("n_events").get<int>();
    } catch (const json::exception& e) {
        throw Error("corrupt corpus manifest in " + dir.string() + ": " + e.what());
    }
    std::uint64_t h = kFnvOffset;
    for (int e = 0; e < n_events; ++e) {
        fnv1a_file(event_dir(dir, e) / "rainfall.csv", h);
        fnv1a_file(event_dir(dir, e) / "depth.csv", h);
    }
    return "fnv1a64:" + to_hex(h);
}

// ---------------------------------------------------------------------------
// model store

namespace {

fs::path model_path(const fs::path& store, Experiment exp, int cell) {
    return store / experiment_name(exp) / ("cell_" + std::to_string(cell) + ".model.json");
}
fs::path scaler_path(const fs::path& store, Experiment exp, int cell) {
    return store / experiment_name(exp) / ("cell_" + std::to_string(cell) + ".scaler.json");
}

/// Store-wide lockfile; created exclusively, removed on destruction.
class StoreLock {
public:
    explicit StoreLock(const fs::path& store) : path_(store / ".lock") {
        fs::create_directories(store);
        const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
        if (fd < 0)
            throw Error("store " + store.string() +
                        " is locked by another writer (remove " + path_.string() + " if stale)");
        ::close(fd);
    }
    ~StoreLock() {
        std::error_code ec;
        fs::remove(path_, ec);
    }

private:
    fs::path path_;
};

json entry_to_json(const CellTrainEntry& e) {
    json j;
    j["cell_id"] = e.cell_id;
    j["status"] = e.status;
    if (!e.error.empty()) j["error"] = e.error;
    if (e.status == "ok") {
        j["valid_rmse"] = e.valid_rmse;
        j["best_iteration"] = e.best_iteration;
        j["test_r2"] = e.test_r2 ? json(*e.test_r2) : json(nullptr);
        j["test_rmse"] = e.test_rmse;
    }
    return j;
}

CellTrainEntry entry_from_json(const json& j) {
    CellTrainEntry e;
    e.cell_id = j.at("cell_id").get<int>();
    e.status = j.at("status").get<std::string>();
    if (j.contains("error")) e.error = j.at("error").get<std::string>();
    if (e.status == "ok") {
        e.valid_rmse = j.at("valid_rmse").get<double>();
        e.best_iteration = j.at("best_iteration").get<int>();
        if (!j.at("test_r2").is_null()) e.test_r2 = j.at("test_r2").get<double>();
        e.test_rmse = j.at("test_rmse").get<double>();
    }
    return e;
}

}  // namespace

StoreInfo read_store_info(const fs::path& store_dir, Experiment experiment) {
    const json manifest = read_json(store_dir / "manifest.json", "store manifest");
    try {
        const json& section = manifest.at("experiments").at(experiment_name(experiment));
        StoreInfo info;
        info.corpus_hash = manifest.at("corpus_hash").get<std::string>();
        info.split = split_from_json(manifest.at("split"));
        info.hyperparams = hp_from_json(section.at("hyperparams"));
        info.n_cells = manifest.at("n_cells").get<int>();
        return info;
    } catch (const json::exception& e) {
        throw Error("store manifest " + store_dir.string() + " lacks experiment " +
                    experiment_name(experiment) + ": " + e.what());
    }
}

TrainSummary train_all(const Grid& grid, const Corpus& corpus, const fs::path& corpus_dir,
                       Experiment experiment, const Hyperparams& hp, const SplitSpec& split,
                       const fs::path& store_dir, const TrainOptions& options) {
    hp.validate();
    if (corpus.n_events() == 0) throw Error("train_all: empty corpus");
    if (corpus.n_cells() != grid.n_cells())
        throw Error("train_all: corpus has " + std::to_string(corpus.n_cells()) +
                    " cells, grid has " + std::to_string(grid.n_cells()));
    for (int e = 0; e < corpus.n_events(); ++e)
        if (static_cast<int>(corpus.depths[e].size()) != grid.n_cells())
            throw Error("train_all: corpus depths incomplete at event " + std::to_string(e));

    StoreLock lock(store_dir);
    const std::string hash = corpus_hash(corpus_dir);
    const std::string exp_name = experiment_name(experiment);

    // merge with an existing manifest; a mismatched config requires --force
    json manifest;
    const fs::path manifest_path = store_dir / "manifest.json";
    std::vector<CellTrainEntry> previous;
    if (fs::exists(manifest_path)) {
        manifest = read_json(manifest_path, "store manifest");
        const std::string old_hash = manifest.value("corpus_hash", "");
        if (old_hash != hash) {
            if (!options.force)
                throw Error("store " + store_dir.string() + " was trained on corpus " + old_hash +
                            ", current corpus is " + hash + " (use force to retrain)");
            manifest = json::object();
            fs::remove_all(store_dir / "exp1");
            fs::remove_all(store_dir / "exp2");
        } else if (manifest.contains("experiments") &&
                   manifest["experiments"].contains(exp_name) && !options.force) {
            const json& section = manifest["experiments"][exp_name];
            const Hyperparams old_hp = hp_from_json(section.at("hyperparams"));
            const SplitSpec old_split = split_from_json(manifest.at("split"));
            if (hp_to_json(old_hp) != hp_to_json(hp) ||
                split_to_json(old_split) != split_to_json(split))
                throw Error("store " + store_dir.string() + " has experiment " + exp_name +
                            " with different hyperparams/split (use force to retrain)");
            for (const json& je : section.at("cells")) previous.push_back(entry_from_json(je));
        }
    }
    if (options.force) {
        fs::remove_all(store_dir / exp_name);
        previous.clear();
    }
    fs::create_directories(store_dir / exp_name);

    const EventSplit events = split_events(corpus.n_events(), split);
    const FeatureBundle bundle = build_matrix(grid, corpus.fields, experiment);

    std::vector<CellTrainEntry> prev_by_cell(grid.n_cells());
    std::vector<bool> has_prev(grid.n_cells(), false);
    for (const CellTrainEntry& e : previous)
        if (e.cell_id >= 0 && e.cell_id < grid.n_cells() && e.status == "ok") {
            prev_by_cell[e.cell_id] = e;
            has_prev[e.cell_id] = true;
        }

    TrainSummary summary;
    summary.store_dir = store_dir;
    summary.experiment = experiment;
    summary.cells.resize(grid.n_cells());

    std::atomic<int> next_cell{0};
    std::atomic<int> n_trained{0}, n_skipped{0}, n_failed{0};
    std::mutex io_mutex;

    auto worker = [&]() {
        for (;;) {
            const int cell = next_cell.fetch_add(1);
            if (cell >= grid.n_cells()) return;

            if (has_prev[cell] && fs::exists(model_path(store_dir, experiment, cell)) &&
                fs::exists(scaler_path(store_dir, experiment, cell))) {
                summary.cells[cell] = prev_by_cell[cell];
                n_skipped.fetch_add(1);
                continue;
            }

            CellTrainEntry entry;
            entry.cell_id = cell;
            try {
                const FeatureMatrix matrix = bundle.cell_matrix(cell);
                const MinMaxScaler scaler = fit_scaler(matrix, events.train);

                auto make_split = [&](const std::vector<int>& ids, DataMatrix& x,
                                      std::vector<double>& y) {
                    x = DataMatrix(static_cast<int>(ids.size()), matrix.n_features);
                    y.resize(ids.size());
                    std::vector<double> scaled(matrix.n_features);
                    for (std::size_t i = 0; i < ids.size(); ++i) {
                        scaler.apply(std::span<const double>(
                                         matrix.values.data() +
                                             static_cast<std::size_t>(ids[i]) * matrix.n_features,
                                         static_cast<std::size_t>(matrix.n_features)),
                                     scaled);
                        for (int f = 0; f < matrix.n_features; ++f) x.at(static_cast<int>(i), f) = scaled[f];
                        y[i] = corpus.depths[ids[i]][cell];
                    }
                };

                DataMatrix x_train, x_valid, x_test;
                std::vector<double> y_train, y_valid, y_test;
                make_split(events.train, x_train, y_train);
                make_split(events.valid, x_valid, y_valid);
                make_split(events.test, x_test, y_test);

                Hyperparams cell_hp = hp;
                cell_hp.seed = mix_seed(hp.seed, static_cast<std::uint64_t>(cell));
                const GbdtModel model =
                    train(x_train, y_train, x_valid, y_valid, cell_hp, matrix.feature_names);

                std::vector<double> test_pred(y_test.size());
                for (std::size_t i = 0; i < y_test.size(); ++i)
                    test_pred[i] = model.predict(x_test.row(static_cast<int>(i)));

                entry.status = "ok";
                entry.best_iteration = model.best_iteration;
                {
                    std::vector<double> valid_pred(y_valid.size());
                    for (std::size_t i = 0; i < y_valid.size(); ++i)
                        valid_pred[i] = model.predict(x_valid.row(static_cast<int>(i)));
                    entry.valid_rmse = y_valid.empty() ? 0.0 : rmse(y_valid, valid_pred);
                }
                entry.test_rmse = rmse(y_test, test_pred);
                try {
                    entry.test_r2 = r_squared(y_test, test_pred);
                } catch (const UndefinedMetric&) {
                    entry.test_r2 = std::nullopt;
                }

                const fs::path mp = model_path(store_dir, experiment, cell);
                const fs::path sp = scaler_path(store_dir, experiment, cell);
                save_model(model, fs::path(mp.string() + ".tmp"));
                scaler.save(fs::path(sp.string() + ".tmp"));
                fs::rename(fs::path(mp.string() + ".tmp"), mp);
                fs::rename(fs::path(sp.string() + ".tmp"), sp);
                n_trained.fetch_add(1);
            } catch (const std::exception& ex) {
                entry.status = "failed";
                entry.error = ex.what();
                n_failed.fetch_add(1);
            }
            summary.cells[cell] = entry;
            if (!options.quiet) {
                std::lock_guard<std::mutex> g(io_mutex);
                std::cerr << exp_name << " cell " << cell << ": " << entry.status << "\n";
            }
        }
    };

    const int n_workers = std::max(1, options.workers);
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(n_workers);
        for (int i = 0; i < n_workers; ++i) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }

    summary.n_trained = n_trained.load();
    summary.n_skipped = n_skipped.load();
    summary.n_failed = n_failed.load();

    std::vector<std::optional<double>> r2s(grid.n_cells()), rmses(grid.n_cells());
    for (const CellTrainEntry& e : summary.cells)
        if (e.status == "ok") {
            r2s[e.cell_id] = e.test_r2;
            rmses[e.cell_id] = e.test_rmse;
        }
    summary.test_r2_aggregate = kind_aggregate(grid, r2s);
    summary.test_rmse_aggregate = kind_aggregate(grid, rmses);

    manifest["format"] = "floodml.store";
    manifest["version"] = 1;
    manifest["corpus_hash"] = hash;
    manifest["n_cells"] = grid.n_cells();
    manifest["split"] = split_to_json(split);
    json cells_j = json::array();
    for (const CellTrainEntry& e : summary.cells) cells_j.push_back(entry_to_json(e));
    manifest["experiments"][exp_name] = {{"hyperparams", hp_to_json(hp)},
                                         {"feature_names", bundle.feature_names},
                                         {"cells", std::move(cells_j)}};
    write_json_atomic(manifest, manifest_path);
    return summary;
}

// ---------------------------------------------------------------------------
// prediction

namespace {

void load_cells(const fs::path& store, Experiment exp, const std::vector<int>& cells,
                CombinedPredictor& out, int workers) {
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::mutex error_mutex;
    std::string first_error;

    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cells.size() || failed.load()) return;
            const int cell = cells[i];
            try {
                const fs::path mp = model_path(store, exp, cell);
                if (!fs::exists(mp))
                    throw Error("store " + store.string() + " is missing a model for cell " +
                                std::to_string(cell) + " (" + experiment_name(exp) + ")");
                out.models[cell] = load_model(mp);
                out.scalers[cell] = MinMaxScaler::load(scaler_path(store, exp, cell));
                out.experiment_of[cell] = exp;
            } catch (const std::exception& ex) {
                std::lock_guard<std::mutex> g(error_mutex);
                if (first_error.empty()) first_error = ex.what();
                failed.store(true);
            }
        }
    };
    const int n_workers = std::max(1, workers);
    if (n_workers == 1 || cells.size() < 2) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (int i = 0; i < n_workers; ++i) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }
    if (failed.load()) throw Error(first_error);
}

}  // namespace

CombinedPredictor build_combined(const fs::path& store_exp1, const fs::path& store_exp2,
                                 const Grid& grid, int workers) {
    CombinedPredictor p;
    p.experiment_of.resize(grid.n_cells());
    p.models.resize(grid.n_cells());
    p.scalers.resize(grid.n_cells());
    std::vector<int> exp1_cells, exp2_cells;
    for (const Cell& c : grid.cells)
        (c.kind == CellKind::Channel ? exp2_cells : exp1_cells).push_back(c.id);
    load_cells(store_exp1, Experiment::Exp1, exp1_cells, p, workers);
    load_cells(store_exp2, Experiment::Exp2, exp2_cells, p, workers);
    return p;
}

CombinedPredictor load_predictor(const fs::path& store_dir, Experiment experiment, const Grid& grid,
                                 int workers) {
    CombinedPredictor p;
    p.experiment_of.resize(grid.n_cells());
    p.models.resize(grid.n_cells());
    p.scalers.resize(grid.n_cells());
    std::vector<int> cells(grid.n_cells());
    for (int c = 0; c < grid.n_cells(); ++c) cells[c] = c;
    load_cells(store_dir, experiment, cells, p, workers);
    return p;
}

PredictionResult predict_event(const CombinedPredictor& predictor, const Grid& grid,
                               const RainfallField& field) {
    if (field.n_cells != grid.n_cells())
        throw Error("predict_event: field has " + std::to_string(field.n_cells) +
                    " cells, grid has " + std::to_string(grid.n_cells()));
    if (static_cast<int>(predictor.models.size()) != grid.n_cells())
        throw Error("predict_event: predictor does not cover the grid");

    const auto t0 = std::chrono::steady_clock::now();

    bool needs_exp2 = false;
    for (Experiment e : predictor.experiment_of)
        if (e == Experiment::Exp2) needs_exp2 = true;

    // Exp1 columns are a prefix of Exp2 columns, so one bundle serves both.
    const std::vector<RainfallField> one_field{field};
    const FeatureBundle bundle =
        build_matrix(grid, one_field, needs_exp2 ? Experiment::Exp2 : Experiment::Exp1);

    PredictionResult result;
    result.depth_ft.resize(grid.n_cells());
    std::vector<double> full_row(bundle.n_features), scaled(bundle.n_features);
    for (int c = 0; c < grid.n_cells(); ++c) {
        bundle.row(0, c, full_row);
        const int n_feat = static_cast<int>(predictor.models[c].feature_names.size());
        predictor.scalers[c].apply(std::span<const double>(full_row.data(), n_feat),
                                   std::span<double>(scaled.data(), n_feat));
        result.depth_ft[c] =
            predictor.models[c].predict({scaled.data(), static_cast<std::size_t>(n_feat)});
    }
    result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

EvaluationReport evaluate_predictor(const CombinedPredictor& predictor, const Grid& grid,
                                    const Corpus& corpus, const std::vector<int>& test_events,
                                    const std::vector<double>& bin_edges, const std::string& label) {
    if (test_events.empty()) throw Error("evaluate_predictor: no test events");

    bool needs_exp2 = false;
    for (Experiment e : predictor.experiment_of)
        if (e == Experiment::Exp2) needs_exp2 = true;
    const FeatureBundle bundle =
        build_matrix(grid, corpus.fields, needs_exp2 ? Experiment::Exp2 : Experiment::Exp1);

    EvaluationReport report;
    report.label = label;
    report.per_cell.resize(grid.n_cells());

    std::vector<double> pooled_true, pooled_pred;
    pooled_true.reserve(test_events.size() * grid.n_cells());
    pooled_pred.reserve(test_events.size() * grid.n_cells());

    std::vector<std::optional<double>> r2s(grid.n_cells()), rmses(grid.n_cells());
    std::vector<double> full_row(bundle.n_features), scaled(bundle.n_features);
    std::vector<double> y_true(test_events.size()), y_pred(test_events.size());
    for (const Cell& cell : grid.cells) {
        const int c = cell.id;
        const int n_feat = static_cast<int>(predictor.models[c].feature_names.size());
        for (std::size_t i = 0; i < test_events.size(); ++i) {
            const int e = test_events[i];
            bundle.row(e, c, full_row);
            predictor.scalers[c].apply(std::span<const double>(full_row.data(), n_feat),
                                       std::span<double>(scaled.data(), n_feat));
            y_pred[i] = predictor.models[c].predict({scaled.data(), static_cast<std::size_t>(n_feat)});
            y_true[i] = corpus.depths[e][c];
            pooled_true.push_back(y_true[i]);
            pooled_pred.push_back(y_pred[i]);
        }
        CellMetrics m;
        m.cell_id = c;
        m.kind = cell.kind;
        m.rmse = rmse(y_true, y_pred);
        try {
            m.r2 = r_squared(y_true, y_pred);
        } catch (const UndefinedMetric&) {
            m.r2 = std::nullopt;
        }
        report.per_cell[c] = m;
        r2s[c] = m.r2;
        rmses[c] = m.rmse;
    }
    report.r2_aggregate = kind_aggregate(grid, r2s);
    report.rmse_aggregate = kind_aggregate(grid, rmses);
    report.bins = binned_report(pooled_true, pooled_pred, bin_edges);
    return report;
}

void write_depth_map(std::span<const double> depth_ft, const fs::path& path) {
    csv::Writer w(path);
    w.header("cell_id,pred_depth_ft");
    for (std::size_t c = 0; c < depth_ft.size(); ++c) w.row(c, depth_ft[c]);
}

}  // namespace floodml
