#pragma once

#include <cstdint>
#include <vector>

#include "floodml/grid.hpp"
#include "floodml/rainfall.hpp"

namespace floodml {

/// Storm-corpus generator configuration. Each event is a sum of Gaussian
/// space-time kernels with parameters drawn uniformly from these ranges.
struct StormConfig {
    int n_events = 592;
    int min_hours = 12, max_hours = 60;
    int min_centers = 1, max_centers = 4;
    double min_radius = 100.0, max_radius = 1800.0;       // length units of the grid
    double min_intensity = 0.02, max_intensity = 0.45;    // kernel peak, in/hr
    std::uint64_t seed = 0;

    void validate() const;
};

/// Deterministic hydrologic response used as ground truth in place of a
/// hydrodynamic simulation corpus.
struct OracleParams {
    double runoff_channel = 0.6;      // in (0, 1]
    double runoff_non_channel = 0.6;  // in (0, 1]
    double infiltration_in = 0.8;     // subtracted from cumulative rainfall
    double routing_weight = 0.18;     // scales the upstream-runoff sum on channel cells
    double depth_cap_ft = 12.0;

    void validate() const;
};

/// Smooth increasing peak-intensity gain used by the oracle:
///   g(p) = 1 + 0.08 * p / (p + 2),  g(0) = 1, sup g = 1.08.
double oracle_peak_gain(double peak_in_hr);

/// Deterministic given config.seed: event e depends only on (seed, e), so the
/// corpus is stable under regeneration and parallel evaluation.
std::vector<RainfallField> generate_events(const Grid& grid, const StormConfig& config);

/// Per-cell peak depth in feet.
///   local(c)  = runoff(kind) * max(0, cumulative(c) - infiltration) * g(peak(c))
///   depth(c)  = min(cap, local(c))                              non-channel
///   depth(c)  = min(cap, local(c) + routing * sum_u local(u))   channel,
/// where u ranges over all cells draining into c through the channel forest.
std::vector<double> simulate_peak_depth(const Grid& grid, const RainfallField& field,
                                        const OracleParams& params);

}  // namespace floodml
