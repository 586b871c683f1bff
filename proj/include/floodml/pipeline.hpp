#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "floodml/features.hpp"
#include "floodml/gbdt.hpp"
#include "floodml/grid.hpp"
#include "floodml/metrics.hpp"
#include "floodml/oracle.hpp"
#include "floodml/rainfall.hpp"

namespace floodml {

struct SplitSpec {
    double train_fraction = 0.60;
    double valid_fraction = 0.20;
    double test_fraction = 0.20;
    std::uint64_t seed = 0;

    void validate() const;
};

struct EventSplit {
    std::vector<int> train;
    std::vector<int> valid;
    std::vector<int> test;
};

/// Seeded shuffle, then contiguous partition with valid = round(vf * n),
/// test = round(tf * n), train = n - valid - test. Partitions are returned
/// sorted ascending; membership is what matters downstream.
EventSplit split_events(int n_events, const SplitSpec& spec);

/// A complete event corpus: rainfall fields plus oracle peak depths.
struct Corpus {
    std::vector<RainfallField> fields;
    std::vector<std::vector<double>> depths;  // [event][cell]
    StormConfig storm;
    OracleParams oracle;

    int n_events() const { return static_cast<int>(fields.size()); }
    int n_cells() const { return fields.empty() ? 0 : fields.front().n_cells; }
};

/// Layout: events/<id>/rainfall.csv, events/<id>/depth.csv, corpus.json.
void save_corpus(const Corpus& corpus, const std::filesystem::path& dir);
Corpus load_corpus(const std::filesystem::path& dir);

/// FNV-1a 64 over the event files in id order; stable fingerprint used to tie
/// model stores to the corpus they were trained on.
std::string corpus_hash(const std::filesystem::path& dir);

struct TrainOptions {
    int workers = 1;
    bool force = false;       // retrain cells with existing model files
    bool quiet = true;        // suppress per-cell progress on stderr
};

struct CellTrainEntry {
    int cell_id = 0;
    std::string status;  // "ok" or "failed"
    std::string error;
    double valid_rmse = 0.0;
    int best_iteration = 0;
    std::optional<double> test_r2;
    double test_rmse = 0.0;
};

struct TrainSummary {
    std::filesystem::path store_dir;
    Experiment experiment = Experiment::Exp1;
    std::vector<CellTrainEntry> cells;
    int n_trained = 0;
    int n_skipped = 0;  // resumed from existing files
    int n_failed = 0;
    KindAggregate test_r2_aggregate;
    KindAggregate test_rmse_aggregate;
};

/// Trains one model per cell with per-cell min-max scaling and validation
/// checkpointing, persisting into `store_dir/<experiment>/`. Per-cell seeds
/// derive from (hp.seed, cell_id), so results do not depend on the worker
/// count or scheduling order. Cells with existing model files are skipped
/// unless options.force. Per-cell failures are recorded, not fatal.
TrainSummary train_all(const Grid& grid, const Corpus& corpus,
                       const std::filesystem::path& corpus_dir, Experiment experiment,
                       const Hyperparams& hp, const SplitSpec& split,
                       const std::filesystem::path& store_dir, const TrainOptions& options = {});

/// Per-cell models and scalers ready for prediction.
struct CombinedPredictor {
    std::vector<Experiment> experiment_of;  // per cell
    std::vector<GbdtModel> models;          // per cell
    std::vector<MinMaxScaler> scalers;      // per cell
};

/// Channel cells take the Exp2 model, non-channel cells the Exp1 model.
/// Throws naming the first cell that lacks a model.
CombinedPredictor build_combined(const std::filesystem::path& store_exp1,
                                 const std::filesystem::path& store_exp2, const Grid& grid,
                                 int workers = 1);

/// Single-experiment predictor over every cell of the grid.
CombinedPredictor load_predictor(const std::filesystem::path& store_dir, Experiment experiment,
                                 const Grid& grid, int workers = 1);

struct PredictionResult {
    std::vector<double> depth_ft;  // per cell
    double seconds = 0.0;          // feature + model evaluation time
};

PredictionResult predict_event(const CombinedPredictor& predictor, const Grid& grid,
                               const RainfallField& field);

/// Split spec and hyperparams recorded in a store manifest.
struct StoreInfo {
    std::string corpus_hash;
    SplitSpec split;
    Hyperparams hyperparams;
    int n_cells = 0;
};
StoreInfo read_store_info(const std::filesystem::path& store_dir, Experiment experiment);

/// Evaluates a predictor on the corpus' held-out test events.
EvaluationReport evaluate_predictor(const CombinedPredictor& predictor, const Grid& grid,
                                    const Corpus& corpus, const std::vector<int>& test_events,
                                    const std::vector<double>& bin_edges, const std::string& label);

void write_depth_map(std::span<const double> depth_ft, const std::filesystem::path& path);

}  // namespace floodml
