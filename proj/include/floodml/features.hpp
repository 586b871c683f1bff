#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "floodml/grid.hpp"
#include "floodml/rainfall.hpp"

namespace floodml {

struct CellFeatures {
    double cumulative_in = 0.0;
    double peak_in_hr = 0.0;
    double duration_hr = 0.0;  // first-to-last wet hour span, 0 if dry
};

enum class Experiment { Exp1, Exp2 };

std::string experiment_name(Experiment e);
Experiment parse_experiment(const std::string& name);

/// Feature matrix for one cell: rows are events, columns follow feature_names.
struct FeatureMatrix {
    Experiment experiment = Experiment::Exp1;
    int n_events = 0;
    int n_features = 0;
    std::vector<double> values;  // row-major [event][feature]
    std::vector<std::string> feature_names;

    double at(int event, int feature) const {
        return values[static_cast<std::size_t>(event) * n_features + feature];
    }
};

/// Shared per-event features for every cell of a grid. Exp2 ratio columns are
/// computed once per event and replicated across cells.
struct FeatureBundle {
    Experiment experiment = Experiment::Exp1;
    int n_cells = 0;
    int n_events = 0;
    int n_features = 0;
    std::vector<std::string> feature_names;
    std::vector<std::vector<CellFeatures>> cell_features;  // [event][cell]
    std::vector<std::vector<double>> event_ratios;         // [event][2 * n_watersheds], Exp2 only

    /// Writes one cell's feature row for one event into `out` (size n_features).
    void row(int event, int cell, std::span<double> out) const;
    FeatureMatrix cell_matrix(int cell) const;
};

CellFeatures cell_features(std::span<const double> hourly_depths);

constexpr double kHeavyThresholdIn = 2.0;

/// 1 where value > threshold (strict), else 0.
std::vector<std::uint8_t> heavy_mask(std::span<const double> per_cell_values,
                                     double threshold = kHeavyThresholdIn);

/// Area fraction of watershed `w` flagged heavy: sum of member areas with
/// mask 1 divided by the watershed area. Cells are scanned in ascending id
/// order so results are reproducible bit-for-bit.
double heavy_ratio(const Grid& grid, std::span<const std::uint8_t> mask, int watershed);

/// Exp1 columns: [cumulative, peak]. Exp2 columns: [cumulative, peak,
/// duration, heavy_cum_ratio_0..W-1, heavy_peak_ratio_0..W-1].
FeatureBundle build_matrix(const Grid& grid, const std::vector<RainfallField>& fields,
                           Experiment experiment);

std::vector<std::string> feature_names_for(Experiment experiment, int n_watersheds);

struct MinMaxScaler {
    std::vector<std::string> feature_names;
    std::vector<double> min;
    std::vector<double> max;

    int n_features() const { return static_cast<int>(min.size()); }
    bool degenerate(int feature) const { return max[feature] <= min[feature]; }

    /// (x - min) / (max - min); degenerate features map to 0. No clamping:
    /// values outside the fitted range scale outside [0, 1].
    void apply(std::span<const double> row, std::span<double> out) const;
    std::vector<double> apply(std::span<const double> row) const;

    void save(const std::filesystem::path& path) const;
    static MinMaxScaler load(const std::filesystem::path& path);
};

/// Per-column extrema over the given training rows only.
MinMaxScaler fit_scaler(const FeatureMatrix& matrix, std::span<const int> training_rows);

void write_feature_matrix(const FeatureBundle& bundle, const std::filesystem::path& path);

}  // namespace floodml
