#include "floodml/rainfall.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "floodml/csv.hpp"

namespace floodml {

ThiessenAssignment thiessen_assign(const Grid& grid, const std::vector<GageRecord>& gages) {
    if (gages.empty()) throw Error("thiessen_assign: empty gage list");
    for (std::size_t i = 0; i < gages.size(); ++i)
        for (std::size_t j = i + 1; j < gages.size(); ++j)
            if (gages[i].x == gages[j].x && gages[i].y == gages[j].y)
                throw Error("thiessen_assign: gages " + std::to_string(gages[i].gage_id) + " and " +
                            std::to_string(gages[j].gage_id) + " share a location");

    ThiessenAssignment out;
    out.cell_to_gage.resize(grid.cells.size());
    for (const Cell& c : grid.cells) {
        double best_d2 = std::numeric_limits<double>::infinity();
        int best_id = -1;
        for (const GageRecord& g : gages) {
            const double dx = g.x - c.x, dy = g.y - c.y;
            const double d2 = dx * dx + dy * dy;
            if (d2 < best_d2 || (d2 == best_d2 && g.gage_id < best_id)) {
                best_d2 = d2;
                best_id = g.gage_id;
            }
        }
        out.cell_to_gage[c.id] = best_id;
    }
    return out;
}

std::vector<double> aggregate_hourly(const GageRecord& record) {
    const std::size_t n = record.depths_in.size();
    const std::size_t hours = (n + 3) / 4;
    std::vector<double> out(hours, 0.0);
    for (std::size_t i = 0; i < n; ++i) out[i / 4] += record.depths_in[i];
    return out;
}

RainfallField build_field(const Grid& grid, const std::vector<GageRecord>& gages,
                          const ThiessenAssignment& assignment) {
    if (gages.empty()) throw Error("build_field: empty gage list");
    if (assignment.cell_to_gage.size() != grid.cells.size())
        throw Error("build_field: assignment does not cover the grid");

    for (const GageRecord& g : gages) {
        if (g.start_minutes != gages.front().start_minutes ||
            g.depths_in.size() != gages.front().depths_in.size())
            throw Error("build_field: gage " + std::to_string(g.gage_id) +
                        " window differs from gage " + std::to_string(gages.front().gage_id));
    }

    std::map<int, std::vector<double>> hourly;
    for (const GageRecord& g : gages) hourly[g.gage_id] = aggregate_hourly(g);

    const int n_hours = static_cast<int>(hourly.begin()->second.size());
    RainfallField field(grid.n_cells(), n_hours);
    for (const Cell& c : grid.cells) {
        auto it = hourly.find(assignment.cell_to_gage[c.id]);
        if (it == hourly.end())
            throw Error("build_field: cell " + std::to_string(c.id) + " assigned to unknown gage " +
                        std::to_string(assignment.cell_to_gage[c.id]));
        for (int h = 0; h < n_hours; ++h) field.at(c.id, h) = it->second[h];
    }
    return field;
}

std::vector<GageRecord> load_gages(const std::filesystem::path& path) {
    std::map<int, GageRecord> by_id;
    std::map<int, int> last_t;
    csv::read_file(path, "gage_id,x,y,t_minutes,depth_in",
                   [&](const std::vector<std::string>& f, std::size_t ln) {
                       if (f.size() != 5) throw ParseError("expected 5 fields", ln);
                       const int id = static_cast<int>(csv::parse_int(f[0], ln, "gage_id"));
                       const int t = static_cast<int>(csv::parse_int(f[3], ln, "t_minutes"));
                       const double depth = csv::parse_double(f[4], ln, "depth_in");
                       if (depth < 0.0) throw ParseError("negative depth", ln);
                       auto [it, fresh] = by_id.try_emplace(id);
                       GageRecord& g = it->second;
                       if (fresh) {
                           g.gage_id = id;
                           g.x = csv::parse_double(f[1], ln, "x");
                           g.y = csv::parse_double(f[2], ln, "y");
                           g.start_minutes = t;
                       } else if (t != last_t[id] + 15) {
                           throw ParseError("gage " + f[0] + " samples must advance by exactly 15 minutes",
                                            ln);
                       }
                       last_t[id] = t;
                       g.depths_in.push_back(depth);
                   });
    std::vector<GageRecord> out;
    out.reserve(by_id.size());
    for (auto& [id, g] : by_id) out.push_back(std::move(g));
    return out;
}

void write_field(const RainfallField& field, const std::filesystem::path& path) {
    csv::Writer w(path);
    w.header("cell_id,hour,intensity_in_per_hr");
    for (int c = 0; c < field.n_cells; ++c)
        for (int h = 0; h < field.n_hours; ++h) w.row(c, h, field.at(c, h));
}

RainfallField read_field(const std::filesystem::path& path) {
    std::vector<std::tuple<int, int, double>> rows;
    int max_cell = -1, max_hour = -1;
    csv::read_file(path, "cell_id,hour,intensity_in_per_hr",
                   [&](const std::vector<std::string>& f, std::size_t ln) {
                       if (f.size() != 3) throw ParseError("expected 3 fields", ln);
                       const int c = static_cast<int>(csv::parse_int(f[0], ln, "cell_id"));
                       const int h = static_cast<int>(csv::parse_int(f[1], ln, "hour"));
                       const double v = csv::parse_double(f[2], ln, "intensity_in_per_hr");
                       if (c < 0 || h < 0) throw ParseError("negative index", ln);
                       if (v < 0.0) throw ParseError("negative intensity", ln);
                       rows.emplace_back(c, h, v);
                       max_cell = std::max(max_cell, c);
                       max_hour = std::max(max_hour, h);
                   });
    if (rows.empty()) throw Error("empty rainfall field " + path.string());
    RainfallField field(max_cell + 1, max_hour + 1);
    for (const auto& [c, h, v] : rows) field.at(c, h) = v;
    return field;
}

}  // namespace floodml
