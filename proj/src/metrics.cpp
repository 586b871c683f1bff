#include "floodml/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "floodml/csv.hpp"

namespace floodml {

namespace {
void check_lengths(std::span<const double> a, std::span<const double> b, const char* what) {
    if (a.size() != b.size() || a.empty())
        throw Error(std::string(what) + ": vectors must have equal nonzero length");
}
}  // namespace

double r_squared(std::span<const double> y_true, std::span<const double> y_pred) {
    check_lengths(y_true, y_pred, "r_squared");
    double mean = 0.0;
    for (double v : y_true) mean += v;
    mean /= static_cast<double>(y_true.size());
    double ss_tot = 0.0, ss_res = 0.0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        ss_tot += (y_true[i] - mean) * (y_true[i] - mean);
        ss_res += (y_true[i] - y_pred[i]) * (y_true[i] - y_pred[i]);
    }
    if (ss_tot == 0.0) throw UndefinedMetric("undefined R2: zero-variance truth");
    return 1.0 - ss_res / ss_tot;
}

double rmse(std::span<const double> y_true, std::span<const double> y_pred) {
    check_lengths(y_true, y_pred, "rmse");
    double sum = 0.0;
    for (std::size_t i = 0; i < y_true.size(); ++i)
        sum += (y_true[i] - y_pred[i]) * (y_true[i] - y_pred[i]);
    return std::sqrt(sum / static_cast<double>(y_true.size()));
}

MapeResult mape(std::span<const double> y_true, std::span<const double> y_pred) {
    check_lengths(y_true, y_pred, "mape");
    MapeResult out;
    double sum = 0.0;
    int kept = 0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        if (y_true[i] == 0.0) {
            ++out.excluded;
            continue;
        }
        sum += std::abs(y_true[i] - y_pred[i]) / std::abs(y_true[i]);
        ++kept;
    }
    if (kept > 0) out.percent = 100.0 * sum / static_cast<double>(kept);
    return out;
}

std::vector<BinStats> binned_report(std::span<const double> y_true, std::span<const double> y_pred,
                                    std::span<const double> edges) {
    check_lengths(y_true, y_pred, "binned_report");
    for (std::size_t i = 0; i + 1 < edges.size(); ++i)
        if (!(edges[i] < edges[i + 1])) throw Error("binned_report: edges must be strictly increasing");

    const double inf = std::numeric_limits<double>::infinity();
    const std::size_t n_bins = edges.size() + 1;
    std::vector<std::vector<double>> bt(n_bins), bp(n_bins);
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        std::size_t b = 0;
        while (b < edges.size() && y_true[i] >= edges[b]) ++b;
        bt[b].push_back(y_true[i]);
        bp[b].push_back(y_pred[i]);
    }

    std::vector<BinStats> out(n_bins);
    for (std::size_t b = 0; b < n_bins; ++b) {
        out[b].lower = b == 0 ? -inf : edges[b - 1];
        out[b].upper = b == edges.size() ? inf : edges[b];
        out[b].n = static_cast<int>(bt[b].size());
        if (out[b].n > 0) {
            out[b].rmse = rmse(bt[b], bp[b]);
            const MapeResult m = mape(bt[b], bp[b]);
            out[b].mape_percent = m.percent;
            out[b].mape_excluded = m.excluded;
        }
    }
    return out;
}

KindAggregate kind_aggregate(const Grid& grid, std::span<const std::optional<double>> per_cell) {
    if (per_cell.size() != grid.cells.size())
        throw Error("kind_aggregate: per-cell metrics do not cover the grid");
    KindAggregate agg;
    double ch_sum = 0.0, nc_sum = 0.0;
    for (const Cell& c : grid.cells) {
        const auto& v = per_cell[c.id];
        if (!v) {
            ++agg.n_excluded;
            continue;
        }
        if (c.kind == CellKind::Channel) {
            ch_sum += *v;
            ++agg.n_channel;
        } else {
            nc_sum += *v;
            ++agg.n_non_channel;
        }
    }
    if (agg.n_channel > 0) agg.channel = ch_sum / agg.n_channel;
    if (agg.n_non_channel > 0) agg.non_channel = nc_sum / agg.n_non_channel;
    if (agg.n_channel + agg.n_non_channel > 0)
        agg.overall = (ch_sum + nc_sum) / (agg.n_channel + agg.n_non_channel);
    return agg;
}

namespace {

nlohmann::json aggregate_json(const KindAggregate& a) {
    nlohmann::json j;
    j["channel"] = a.channel ? nlohmann::json(*a.channel) : nlohmann::json(nullptr);
    j["non_channel"] = a.non_channel ? nlohmann::json(*a.non_channel) : nlohmann::json(nullptr);
    j["overall"] = a.overall ? nlohmann::json(*a.overall) : nlohmann::json(nullptr);
    j["n_channel"] = a.n_channel;
    j["n_non_channel"] = a.n_non_channel;
    j["n_excluded"] = a.n_excluded;
    return j;
}

nlohmann::json bin_json(const BinStats& b) {
    nlohmann::json j;
    j["lower_ft"] = std::isinf(b.lower) ? nlohmann::json(nullptr) : nlohmann::json(b.lower);
    j["upper_ft"] = std::isinf(b.upper) ? nlohmann::json(nullptr) : nlohmann::json(b.upper);
    j["n"] = b.n;
    j["rmse_ft"] = b.rmse ? nlohmann::json(*b.rmse) : nlohmann::json(nullptr);
    j["mape_percent"] = b.mape_percent ? nlohmann::json(*b.mape_percent) : nlohmann::json(nullptr);
    j["mape_excluded"] = b.mape_excluded;
    return j;
}

}  // namespace

void EvaluationReport::write_json(const std::filesystem::path& path) const {
    nlohmann::json j;
    j["label"] = label;
    j["r2"] = aggregate_json(r2_aggregate);
    j["rmse_ft"] = aggregate_json(rmse_aggregate);
    nlohmann::json bins_j = nlohmann::json::array();
    for (const BinStats& b : bins) bins_j.push_back(bin_json(b));
    j["depth_bins"] = std::move(bins_j);
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

void EvaluationReport::write_cell_csv(const std::filesystem::path& path) const {
    csv::Writer w(path);
    w.header("cell_id,kind,r2,rmse_ft");
    for (const CellMetrics& m : per_cell)
        w.row(m.cell_id, m.kind == CellKind::Channel ? "channel" : "nonchannel",
              m.r2 ? csv::format_double(*m.r2) : std::string(), m.rmse);
}

std::vector<CellDiff> diff_report(const EvaluationReport& report_a, const EvaluationReport& report_b) {
    if (report_a.per_cell.size() != report_b.per_cell.size())
        throw Error("diff_report: reports cover different cell sets");
    std::vector<CellDiff> out;
    out.reserve(report_a.per_cell.size());
    for (std::size_t i = 0; i < report_a.per_cell.size(); ++i) {
        const CellMetrics& a = report_a.per_cell[i];
        const CellMetrics& b = report_b.per_cell[i];
        if (a.cell_id != b.cell_id) throw Error("diff_report: reports cover different cell sets");
        CellDiff d;
        d.cell_id = a.cell_id;
        if (a.r2 && b.r2) d.delta_r2 = *b.r2 - *a.r2;
        d.delta_rmse = a.rmse - b.rmse;
        out.push_back(d);
    }
    return out;
}

void write_diff_csv(std::span<const CellDiff> diffs, const std::filesystem::path& path) {
    csv::Writer w(path);
    w.header("cell_id,delta_r2,delta_rmse");
    for (const CellDiff& d : diffs)
        w.row(d.cell_id, d.delta_r2 ? csv::format_double(*d.delta_r2) : std::string(), d.delta_rmse);
}

}  // namespace floodml
