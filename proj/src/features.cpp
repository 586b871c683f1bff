#include "floodml/features.hpp"

#include <algorithm>
#include <fstream>

#include <nlohmann/json.hpp>

#include "floodml/csv.hpp"

namespace floodml {

std::string experiment_name(Experiment e) { return e == Experiment::Exp1 ? "exp1" : "exp2"; }

Experiment parse_experiment(const std::string& name) {
    if (name == "exp1") return Experiment::Exp1;
    if (name == "exp2") return Experiment::Exp2;
    throw Error("unknown experiment '" + name + "' (expected exp1 or exp2)");
}

CellFeatures cell_features(std::span<const double> hourly_depths) {
    CellFeatures f;
    int first = -1, last = -1;
    for (std::size_t h = 0; h < hourly_depths.size(); ++h) {
        const double d = hourly_depths[h];
        if (d < 0.0) throw Error("cell_features: negative depth at hour " + std::to_string(h));
        f.cumulative_in += d;
        f.peak_in_hr = std::max(f.peak_in_hr, d);
        if (d > 0.0) {
            if (first < 0) first = static_cast<int>(h);
            last = static_cast<int>(h);
        }
    }
    f.duration_hr = first < 0 ? 0.0 : static_cast<double>(last - first + 1);
    return f;
}

std::vector<std::uint8_t> heavy_mask(std::span<const double> per_cell_values, double threshold) {
    if (threshold < 0.0) throw Error("heavy_mask: negative threshold");
    std::vector<std::uint8_t> mask(per_cell_values.size());
    for (std::size_t i = 0; i < per_cell_values.size(); ++i) {
        if (per_cell_values[i] < 0.0) throw Error("heavy_mask: negative value");
        mask[i] = per_cell_values[i] > threshold ? 1 : 0;
    }
    return mask;
}

double heavy_ratio(const Grid& grid, std::span<const std::uint8_t> mask, int watershed) {
    if (watershed < 0 || watershed >= grid.n_watersheds())
        throw Error("heavy_ratio: watershed id out of range");
    if (mask.size() != grid.cells.size())
        throw Error("heavy_ratio: mask length does not match grid");
    double heavy_area = 0.0, total_area = 0.0;
    for (const Cell& c : grid.cells) {
        if (c.watershed != watershed) continue;
        total_area += c.area_sqft;
        if (mask[c.id]) heavy_area += c.area_sqft;
    }
    if (total_area == 0.0)
        throw Error("heavy_ratio: degenerate watershed " + std::to_string(watershed));
    return heavy_area / total_area;
}

std::vector<std::string> feature_names_for(Experiment experiment, int n_watersheds) {
    std::vector<std::string> names{"cumulative_in", "peak_in_hr"};
    if (experiment == Experiment::Exp1) return names;
    names.push_back("duration_hr");
    for (int w = 0; w < n_watersheds; ++w) names.push_back("heavy_cum_ratio_w" + std::to_string(w));
    for (int w = 0; w < n_watersheds; ++w) names.push_back("heavy_peak_ratio_w" + std::to_string(w));
    return names;
}

FeatureBundle build_matrix(const Grid& grid, const std::vector<RainfallField>& fields,
                           Experiment experiment) {
    if (fields.empty()) throw Error("build_matrix: no events");
    const int n_cells = grid.n_cells();
    const int n_ws = grid.n_watersheds();

    FeatureBundle b;
    b.experiment = experiment;
    b.n_cells = n_cells;
    b.n_events = static_cast<int>(fields.size());
    b.feature_names = feature_names_for(experiment, n_ws);
    b.n_features = static_cast<int>(b.feature_names.size());
    b.cell_features.resize(fields.size());
    if (experiment == Experiment::Exp2) b.event_ratios.resize(fields.size());

    for (std::size_t e = 0; e < fields.size(); ++e) {
        const RainfallField& field = fields[e];
        if (field.n_cells != n_cells)
            throw Error("build_matrix: event " + std::to_string(e) + " has " +
                        std::to_string(field.n_cells) + " cells, grid has " + std::to_string(n_cells));
        auto& per_cell = b.cell_features[e];
        per_cell.resize(n_cells);
        for (int c = 0; c < n_cells; ++c)
            per_cell[c] = cell_features({field.row(c), static_cast<std::size_t>(field.n_hours)});

        if (experiment == Experiment::Exp2) {
            std::vector<double> cum(n_cells), peak(n_cells);
            for (int c = 0; c < n_cells; ++c) {
                cum[c] = per_cell[c].cumulative_in;
                peak[c] = per_cell[c].peak_in_hr;
            }
            const auto cum_mask = heavy_mask(cum);
            const auto peak_mask = heavy_mask(peak);
            auto& ratios = b.event_ratios[e];
            ratios.resize(2 * static_cast<std::size_t>(n_ws));
            for (int w = 0; w < n_ws; ++w) ratios[w] = heavy_ratio(grid, cum_mask, w);
            for (int w = 0; w < n_ws; ++w) ratios[n_ws + w] = heavy_ratio(grid, peak_mask, w);
        }
    }
    return b;
}

void FeatureBundle::row(int event, int cell, std::span<double> out) const {
    const CellFeatures& f = cell_features[event][cell];
    out[0] = f.cumulative_in;
    out[1] = f.peak_in_hr;
    if (experiment == Experiment::Exp2) {
        out[2] = f.duration_hr;
        const auto& ratios = event_ratios[event];
        std::copy(ratios.begin(), ratios.end(), out.begin() + 3);
    }
}

FeatureMatrix FeatureBundle::cell_matrix(int cell) const {
    FeatureMatrix m;
    m.experiment = experiment;
    m.n_events = n_events;
    m.n_features = n_features;
    m.feature_names = feature_names;
    m.values.resize(static_cast<std::size_t>(n_events) * n_features);
    for (int e = 0; e < n_events; ++e)
        row(e, cell, {m.values.data() + static_cast<std::size_t>(e) * n_features,
                      static_cast<std::size_t>(n_features)});
    return m;
}

MinMaxScaler fit_scaler(const FeatureMatrix& matrix, std::span<const int> training_rows) {
    if (training_rows.empty()) throw Error("fit_scaler: empty training set");
    MinMaxScaler s;
    s.feature_names = matrix.feature_names;
    s.min.assign(matrix.n_features, 0.0);
    s.max.assign(matrix.n_features, 0.0);
    for (int f = 0; f < matrix.n_features; ++f) {
        double lo = matrix.at(training_rows[0], f), hi = lo;
        for (int r : training_rows) {
            lo = std::min(lo, matrix.at(r, f));
            hi = std::max(hi, matrix.at(r, f));
        }
        s.min[f] = lo;
        s.max[f] = hi;
    }
    return s;
}

void MinMaxScaler::apply(std::span<const double> row, std::span<double> out) const {
    if (row.size() != min.size()) throw Error("scaler: row length mismatch");
    for (std::size_t f = 0; f < row.size(); ++f)
        out[f] = degenerate(static_cast<int>(f)) ? 0.0 : (row[f] - min[f]) / (max[f] - min[f]);
}

std::vector<double> MinMaxScaler::apply(std::span<const double> row) const {
    std::vector<double> out(row.size());
    apply(row, out);
    return out;
}

void MinMaxScaler::save(const std::filesystem::path& path) const {
    nlohmann::json arr = nlohmann::json::array();
    for (std::size_t f = 0; f < min.size(); ++f)
        arr.push_back({{"name", feature_names[f]}, {"min", min[f]}, {"max", max[f]}});
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << arr.dump(2) << '\n';
}

MinMaxScaler MinMaxScaler::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    nlohmann::json arr;
    try {
        in >> arr;
    } catch (const nlohmann::json::exception& e) {
        throw Error("bad scaler file " + path.string() + ": " + e.what());
    }
    MinMaxScaler s;
    for (const auto& item : arr) {
        s.feature_names.push_back(item.at("name").get<std::string>());
        s.min.push_back(item.at("min").get<double>());
        s.max.push_back(item.at("max").get<double>());
    }
    return s;
}

void write_feature_matrix(const FeatureBundle& bundle, const std::filesystem::path& path) {
    csv::Writer w(path);
    std::string header = "event_id,cell_id";
    for (const auto& name : bundle.feature_names) header += "," + name;
    w.header(header);
    std::vector<double> row_buf(bundle.n_features);
    for (int e = 0; e < bundle.n_events; ++e)
        for (int c = 0; c < bundle.n_cells; ++c) {
            bundle.row(e, c, row_buf);
            std::string line = std::to_string(e) + "," + std::to_string(c);
            for (double v : row_buf) line += "," + csv::format_double(v);
            w.raw_line(line);
        }
}

}  // namespace floodml
