#include "floodml/presets.hpp"

#include <algorithm>

namespace floodml::presets {

namespace {
constexpr double kSpacing = 100.0;
constexpr double kCellArea = 10000.0;
}  // namespace

Grid desk_grid() {
    constexpr int n = 20;
    Grid grid;
    grid.cells.reserve(n * n);
    auto cell_index = [](int row, int col) { return row * n + col; };
    for (int row = 0; row < n; ++row) {
        for (int col = 0; col < n; ++col) {
            Cell c;
            c.id = cell_index(row, col);
            c.x = col * kSpacing;
            c.y = row * kSpacing;
            c.area_sqft = kCellArea;
            c.watershed = std::min(row / 7, 2) * 3 + std::min(col / 7, 2);
            if (col == 10) {
                c.kind = CellKind::Channel;
                if (row < n - 1) c.downstream = cell_index(row + 1, 10);
            } else if (row == 10) {
                c.kind = CellKind::Channel;
                c.downstream = cell_index(10, col < 10 ? col + 1 : col - 1);
            }
            grid.cells.push_back(c);
        }
    }
    grid.watersheds.reserve(9);
    for (int w = 0; w < 9; ++w) grid.watersheds.push_back({w, "W" + std::to_string(w), 0.0});
    grid.rebuild_derived();
    return grid;
}

StormConfig desk_storm_config(std::uint64_t seed) {
    StormConfig c;
    c.n_events = 200;
    c.min_hours = 12;
    c.max_hours = 60;
    c.min_centers = 1;
    c.max_centers = 4;
    c.min_radius = 100.0;
    c.max_radius = 1800.0;
    c.min_intensity = 0.02;
    c.max_intensity = 0.45;
    c.seed = seed;
    return c;
}

OracleParams desk_oracle_params() {
    OracleParams p;
    p.runoff_channel = 0.6;
    p.runoff_non_channel = 0.6;
    p.infiltration_in = 0.8;
    p.routing_weight = 0.18;
    p.depth_cap_ft = 12.0;
    return p;
}

Grid upstream_demo_grid() {
    Grid grid;
    // watershed 0: 8x5 block of channel cells snaking into a single chain
    constexpr int kCols = 8, kRows = 5;
    for (int i = 0; i < kCols * kRows; ++i) {
        const int row = i / kCols;
        const int pos = i % kCols;
        const int col = (row % 2 == 0) ? pos : kCols - 1 - pos;  // boustrophedon
        Cell c;
        c.id = i;
        c.x = col * kSpacing;
        c.y = row * kSpacing;
        c.area_sqft = kCellArea;
        c.kind = CellKind::Channel;
        c.watershed = 0;
        c.downstream = i + 1;  // cell 39 drains into the outlet (40)
        grid.cells.push_back(c);
    }
    // watershed 1: the outlet channel cell plus non-channel surroundings
    {
        Cell outlet;
        outlet.id = kUpstreamDemoOutlet;
        outlet.x = 1600.0;
        outlet.y = 200.0;
        outlet.area_sqft = kCellArea;
        outlet.kind = CellKind::Channel;
        outlet.watershed = 1;
        grid.cells.push_back(outlet);
    }
    int id = kUpstreamDemoOutlet + 1;
    for (int row = 0; row < 4; ++row)
        for (int col = 0; col < 2; ++col) {
            Cell c;
            c.id = id++;
            c.x = 1500.0 + col * kSpacing;
            c.y = row * kSpacing;
            c.area_sqft = kCellArea;
            c.kind = CellKind::NonChannel;
            c.watershed = 1;
            grid.cells.push_back(c);
        }
    // watersheds 2..8: small far-away clusters
    for (int w = 2; w <= 8; ++w)
        for (int k = 0; k < 3; ++k) {
            Cell c;
            c.id = id++;
            c.x = 2600.0 + (w - 2) * 150.0;
            c.y = k * kSpacing;
            c.area_sqft = kCellArea;
            c.kind = CellKind::NonChannel;
            c.watershed = w;
            grid.cells.push_back(c);
        }
    for (int w = 0; w < 9; ++w) grid.watersheds.push_back({w, "W" + std::to_string(w), 0.0});
    grid.rebuild_derived();
    return grid;
}

StormConfig upstream_demo_storm_config(std::uint64_t seed) {
    StormConfig c;
    c.n_events = 240;
    c.min_hours = 12;
    c.max_hours = 48;
    c.min_centers = 1;
    c.max_centers = 2;
    c.min_radius = 80.0;
    c.max_radius = 400.0;
    c.min_intensity = 0.05;
    c.max_intensity = 0.6;
    c.seed = seed;
    return c;
}

OracleParams upstream_demo_oracle_params() {
    OracleParams p;
    p.runoff_channel = 0.6;
    p.runoff_non_channel = 0.6;
    p.infiltration_in = 0.5;
    p.routing_weight = 2.0;
    p.depth_cap_ft = 500.0;
    return p;
}

}  // namespace floodml::presets
