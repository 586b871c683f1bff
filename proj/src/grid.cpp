#include "floodml/grid.hpp"

#include <algorithm>
#include <unordered_set>

#include "floodml/csv.hpp"

namespace floodml {

void Grid::rebuild_derived() {
    n_channel = 0;
    n_non_channel = 0;
    int max_ws = -1;
    for (const Cell& c : cells) {
        (c.kind == CellKind::Channel ? n_channel : n_non_channel)++;
        max_ws = std::max(max_ws, c.watershed);
    }
    if (static_cast<int>(watersheds.size()) < max_ws + 1) {
        for (int w = static_cast<int>(watersheds.size()); w <= max_ws; ++w)
            watersheds.push_back({w, "W" + std::to_string(w), 0.0});
    }
    for (Watershed& w : watersheds) w.area_sqft = 0.0;
    for (const Cell& c : cells)
        if (c.watershed >= 0 && c.watershed < static_cast<int>(watersheds.size()))
            watersheds[c.watershed].area_sqft += c.area_sqft;

    upstream_of_.assign(cells.size(), {});
    for (const Cell& c : cells)
        if (c.kind == CellKind::Channel && c.downstream && *c.downstream >= 0 &&
            *c.downstream < n_cells())
            upstream_of_[*c.downstream].push_back(c.id);
    for (auto& v : upstream_of_) std::sort(v.begin(), v.end());
}

Grid load_grid(const std::filesystem::path& grid_csv,
               const std::optional<std::filesystem::path>& watershed_csv) {
    Grid grid;
    if (watershed_csv) {
        csv::read_file(*watershed_csv, "watershed_id,name",
                       [&](const std::vector<std::string>& f, std::size_t ln) {
                           if (f.size() != 2) throw ParseError("expected 2 fields", ln);
                           int id = static_cast<int>(csv::parse_int(f[0], ln, "watershed_id"));
                           if (id != static_cast<int>(grid.watersheds.size()))
                               throw ParseError("watershed ids must be dense and ascending", ln);
                           grid.watersheds.push_back({id, f[1], 0.0});
                       });
    }
    const int n_ws = watershed_csv ? static_cast<int>(grid.watersheds.size()) : -1;

    csv::read_file(grid_csv, "cell_id,x,y,area_sqft,kind,watershed_id,downstream_id",
                   [&](const std::vector<std::string>& f, std::size_t ln) {
                       if (f.size() != 7) throw ParseError("expected 7 fields", ln);
                       Cell c;
                       c.id = static_cast<int>(csv::parse_int(f[0], ln, "cell_id"));
                       if (c.id != static_cast<int>(grid.cells.size()))
                           throw ParseError("cell ids must be dense and ascending", ln);
                       c.x = csv::parse_double(f[1], ln, "x");
                       c.y = csv::parse_double(f[2], ln, "y");
                       c.area_sqft = csv::parse_double(f[3], ln, "area_sqft");
                       if (f[4] == "channel")
                           c.kind = CellKind::Channel;
                       else if (f[4] == "nonchannel")
                           c.kind = CellKind::NonChannel;
                       else
                           throw ParseError("kind must be 'channel' or 'nonchannel', got '" + f[4] + "'", ln);
                       c.watershed = static_cast<int>(csv::parse_int(f[5], ln, "watershed_id"));
                       if (c.watershed < 0 || (n_ws >= 0 && c.watershed >= n_ws))
                           throw ParseError("watershed_id " + f[5] + " out of range", ln);
                       if (!f[6].empty())
                           c.downstream = static_cast<int>(csv::parse_int(f[6], ln, "downstream_id"));
                       grid.cells.push_back(c);
                   });

    grid.rebuild_derived();
    auto violations = validate_grid(grid);
    if (!violations.empty())
        throw ValidationError("invalid grid " + grid_csv.string() + ": " + violations.front());
    return grid;
}

void save_grid(const Grid& grid, const std::filesystem::path& grid_csv,
               const std::optional<std::filesystem::path>& watershed_csv) {
    csv::Writer w(grid_csv);
    w.header("cell_id,x,y,area_sqft,kind,watershed_id,downstream_id");
    for (const Cell& c : grid.cells) {
        w.row(c.id, c.x, c.y, c.area_sqft,
              c.kind == CellKind::Channel ? "channel" : "nonchannel", c.watershed,
              c.downstream ? std::to_string(*c.downstream) : std::string());
    }
    if (watershed_csv) {
        csv::Writer ww(*watershed_csv);
        ww.header("watershed_id,name");
        for (const Watershed& ws : grid.watersheds) ww.row(ws.id, ws.name);
    }
}

std::vector<std::string> validate_grid(const Grid& grid) {
    std::vector<std::string> out;
    const int n = grid.n_cells();
    int n_channel = 0, n_non_channel = 0;

    for (const Cell& c : grid.cells) {
        if (c.area_sqft <= 0.0)
            out.push_back("cell " + std::to_string(c.id) + " has non-positive area");
        if (c.watershed < 0 || c.watershed >= grid.n_watersheds())
            out.push_back("cell " + std::to_string(c.id) + " references unknown watershed " +
                          std::to_string(c.watershed));
        if (c.kind == CellKind::Channel)
            ++n_channel;
        else
            ++n_non_channel;
        if (c.downstream) {
            if (c.kind == CellKind::NonChannel)
                out.push_back("non-channel cell " + std::to_string(c.id) + " has downstream");
            else if (*c.downstream < 0 || *c.downstream >= n)
                out.push_back("cell " + std::to_string(c.id) + " downstream id out of range");
            else if (grid.cells[*c.downstream].kind != CellKind::Channel)
                out.push_back("cell " + std::to_string(c.id) +
                              " drains into non-channel cell " + std::to_string(*c.downstream));
        }
    }
    if (n_channel != grid.n_channel || n_non_channel != grid.n_non_channel)
        out.push_back("kind counts do not match cells");

    // downstream links over channel cells must form a forest
    std::vector<int> state(n, 0);  // 0 unvisited, 1 on path, 2 done
    for (int start = 0; start < n; ++start) {
        if (state[start] != 0 || grid.cells[start].kind != CellKind::Channel) continue;
        std::vector<int> path;
        int cur = start;
        while (cur >= 0 && state[cur] == 0) {
            state[cur] = 1;
            path.push_back(cur);
            const auto& d = grid.cells[cur].downstream;
            cur = (d && grid.cells[cur].kind == CellKind::Channel && *d >= 0 && *d < n) ? *d : -1;
            if (cur >= 0 && state[cur] == 1) {
                out.push_back("drainage cycle through cell " + std::to_string(cur));
                cur = -1;
            }
        }
        for (int c : path) state[c] = 2;
    }

    for (const Watershed& w : grid.watersheds) {
        double sum = 0.0;
        for (const Cell& c : grid.cells)
            if (c.watershed == w.id) sum += c.area_sqft;
        const double tol = 1e-9 * std::max(1.0, std::abs(sum));
        if (std::abs(sum - w.area_sqft) > tol)
            out.push_back("watershed " + std::to_string(w.id) + " area field " +
                          std::to_string(w.area_sqft) + " != member sum " + std::to_string(sum));
    }
    return out;
}

double watershed_area(const Grid& grid, int watershed) {
    if (watershed < 0 || watershed >= grid.n_watersheds())
        throw Error("watershed id " + std::to_string(watershed) + " out of range");
    double sum = 0.0;
    for (const Cell& c : grid.cells)
        if (c.watershed == watershed) sum += c.area_sqft;
    return sum;
}

}  // namespace floodml
