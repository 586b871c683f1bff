#pragma once

#include "floodml/grid.hpp"
#include "floodml/oracle.hpp"

namespace floodml::presets {

/// 20x20 mesh (400 cells, 100 ft spacing, 10,000 sqft cells) with nine 3x3
/// block watersheds and a cross-shaped channel network: column 10 is a main
/// stem flowing south, row 10 drains toward it from both sides (39 channel
/// cells, ~10%).
Grid desk_grid();

/// 200-event corpus spanning localized single-center storms to events much
/// broader than the mesh.
StormConfig desk_storm_config(std::uint64_t seed = 42);

OracleParams desk_oracle_params();

/// Grid built so the outlet channel cell's depth is dominated by rainfall in
/// a far-away upstream watershed: watershed 0 is a 40-cell channel chain
/// draining into cell 40 ("the outlet") in watershed 1; watersheds 2..8 are
/// small distant clusters. Used to study upstream-driven feature importance.
Grid upstream_demo_grid();

/// Outlet cell id of upstream_demo_grid().
constexpr int kUpstreamDemoOutlet = 40;

StormConfig upstream_demo_storm_config(std::uint64_t seed = 7);
OracleParams upstream_demo_oracle_params();

}  // namespace floodml::presets
