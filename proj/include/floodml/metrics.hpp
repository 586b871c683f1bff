#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "floodml/common.hpp"
#include "floodml/grid.hpp"

namespace floodml {

/// Thrown when a metric has no defined value (zero-variance truth, or every
/// point excluded). Callers report these per cell and exclude them from means.
class UndefinedMetric : public Error {
public:
    using Error::Error;
};

/// 1 - SS_res / SS_tot. Throws UndefinedMetric when var(y_true) == 0.
double r_squared(std::span<const double> y_true, std::span<const double> y_pred);

double rmse(std::span<const double> y_true, std::span<const double> y_pred);

struct MapeResult {
    std::optional<double> percent;  // empty when every point was excluded
    int excluded = 0;               // points with y_true == 0
};

/// 100 * mean(|y - yhat| / |y|) over points with nonzero truth.
MapeResult mape(std::span<const double> y_true, std::span<const double> y_pred);

struct BinStats {
    double lower = 0.0;  // -inf for the first bin
    double upper = 0.0;  // +inf for the last bin
    int n = 0;
    std::optional<double> rmse;
    std::optional<double> mape_percent;
    int mape_excluded = 0;
};

/// Bins on TRUE depth: [-inf, e1), [e1, e2), ..., [ek, +inf); boundaries are
/// closed on the left. Edges must be strictly increasing.
std::vector<BinStats> binned_report(std::span<const double> y_true, std::span<const double> y_pred,
                                    std::span<const double> edges);

struct KindAggregate {
    std::optional<double> channel;
    std::optional<double> non_channel;
    std::optional<double> overall;
    int n_channel = 0;      // evaluable channel cells
    int n_non_channel = 0;  // evaluable non-channel cells
    int n_excluded = 0;     // cells with no defined metric value
};

/// Unweighted means over each cell set; `per_cell` entries without a value
/// (e.g. undefined R^2) are excluded and counted.
KindAggregate kind_aggregate(const Grid& grid, std::span<const std::optional<double>> per_cell);

struct CellMetrics {
    int cell_id = 0;
    CellKind kind = CellKind::NonChannel;
    std::optional<double> r2;
    double rmse = 0.0;
};

struct EvaluationReport {
    std::string label;
    std::vector<CellMetrics> per_cell;
    KindAggregate r2_aggregate;
    KindAggregate rmse_aggregate;
    std::vector<BinStats> bins;

    void write_json(const std::filesystem::path& path) const;
    void write_cell_csv(const std::filesystem::path& path) const;
};

struct CellDiff {
    int cell_id = 0;
    std::optional<double> delta_r2;  // b - a; positive = improvement
    double delta_rmse = 0.0;         // a - b; positive = improvement
};

/// Per-cell differences oriented so positive means report_b improved on
/// report_a in both columns.
std::vector<CellDiff> diff_report(const EvaluationReport& report_a, const EvaluationReport& report_b);

void write_diff_csv(std::span<const CellDiff> diffs, const std::filesystem::path& path);

}  // namespace floodml
