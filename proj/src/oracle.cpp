#include "floodml/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "floodml/common.hpp"

namespace floodml {

void StormConfig::validate() const {
    if (n_events < 1) throw Error("storm config: n_events must be >= 1");
    if (min_hours < 1 || max_hours < min_hours) throw Error("storm config: bad hours range");
    if (min_centers < 1 || max_centers < min_centers) throw Error("storm config: bad centers range");
    if (min_radius <= 0.0 || max_radius < min_radius) throw Error("storm config: bad radius range");
    if (min_intensity < 0.0 || max_intensity < min_intensity)
        throw Error("storm config: bad intensity range");
}

void OracleParams::validate() const {
    if (runoff_channel <= 0.0 || runoff_channel > 1.0 || runoff_non_channel <= 0.0 ||
        runoff_non_channel > 1.0)
        throw Error("oracle params: runoff coefficients must be in (0, 1]");
    if (infiltration_in < 0.0) throw Error("oracle params: negative infiltration");
    if (routing_weight < 0.0) throw Error("oracle params: negative routing weight");
    if (depth_cap_ft <= 0.0) throw Error("oracle params: depth cap must be positive");
}

double oracle_peak_gain(double peak_in_hr) { return 1.0 + 0.08 * peak_in_hr / (peak_in_hr + 2.0); }

namespace {

struct Kernel {
    double cx, cy, radius, intensity, t_center, t_width;
};

}  // namespace

std::vector<RainfallField> generate_events(const Grid& grid, const StormConfig& config) {
    config.validate();
    if (grid.cells.empty()) throw Error("generate_events: degenerate grid (no cells)");

    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const Cell& c : grid.cells) {
        xmin = std::min(xmin, c.x);
        xmax = std::max(xmax, c.x);
        ymin = std::min(ymin, c.y);
        ymax = std::max(ymax, c.y);
    }
    // storm centers may fall slightly outside the mesh
    const double margin = 0.1 * std::max(xmax - xmin, ymax - ymin) + 1.0;

    std::vector<RainfallField> events;
    events.reserve(config.n_events);
    for (int e = 0; e < config.n_events; ++e) {
        Rng rng(mix_seed(config.seed, static_cast<std::uint64_t>(e)));
        const int hours = static_cast<int>(rng.uniform_int(config.min_hours, config.max_hours));
        const int n_kernels = static_cast<int>(rng.uniform_int(config.min_centers, config.max_centers));

        std::vector<Kernel> kernels(n_kernels);
        for (Kernel& k : kernels) {
            k.cx = rng.uniform(xmin - margin, xmax + margin);
            k.cy = rng.uniform(ymin - margin, ymax + margin);
            k.radius = rng.uniform(config.min_radius, config.max_radius);
            k.intensity = rng.uniform(config.min_intensity, config.max_intensity);
            k.t_center = rng.uniform(0.0, static_cast<double>(hours));
            k.t_width = rng.uniform(2.0, 10.0);
        }

        RainfallField field(grid.n_cells(), hours);
        for (const Cell& c : grid.cells) {
            for (const Kernel& k : kernels) {
                const double dx = c.x - k.cx, dy = c.y - k.cy;
                const double space = k.intensity * std::exp(-(dx * dx + dy * dy) / (2.0 * k.radius * k.radius));
                if (space <= 0.0) continue;
                for (int h = 0; h < hours; ++h) {
                    const double dt = (h + 0.5) - k.t_center;
                    const double v = space * std::exp(-dt * dt / (2.0 * k.t_width * k.t_width));
                    field.at(c.id, h) += std::max(0.0, v);
                }
            }
        }
        events.push_back(std::move(field));
    }
    return events;
}

std::vector<double> simulate_peak_depth(const Grid& grid, const RainfallField& field,
                                        const OracleParams& params) {
    params.validate();
    if (field.n_cells != grid.n_cells())
        throw Error("simulate_peak_depth: field has " + std::to_string(field.n_cells) +
                    " cells, grid has " + std::to_string(grid.n_cells()));

    const int n = grid.n_cells();
    std::vector<double> local(n, 0.0);
    for (const Cell& c : grid.cells) {
        double cumulative = 0.0, peak = 0.0;
        for (int h = 0; h < field.n_hours; ++h) {
            const double v = field.at(c.id, h);
            cumulative += v;
            peak = std::max(peak, v);
        }
        const double coef = c.kind == CellKind::Channel ? params.runoff_channel : params.runoff_non_channel;
        local[c.id] = coef * std::max(0.0, cumulative - params.infiltration_in) * oracle_peak_gain(peak);
    }

    // accumulated(c) = sum of local runoff over all channel cells draining into c;
    // children are visited in ascending id order so the sum order is fixed.
    std::vector<double> accumulated(n, 0.0);
    std::vector<int> order;
    order.reserve(n);
    std::vector<int> pending(n, 0);
    for (const Cell& c : grid.cells)
        pending[c.id] = static_cast<int>(grid.upstream_neighbors(c.id).size());
    for (const Cell& c : grid.cells)
        if (c.kind == CellKind::Channel && pending[c.id] == 0) order.push_back(c.id);
    for (std::size_t i = 0; i < order.size(); ++i) {
        const int u = order[i];
        for (int up : grid.upstream_neighbors(u)) accumulated[u] += accumulated[up] + local[up];
        const auto& d = grid.cells[u].downstream;
        if (d && *d >= 0 && *d < n && --pending[*d] == 0) order.push_back(*d);
    }
    // a cycle would leave nodes unprocessed; validated grids cannot reach this
    for (const Cell& c : grid.cells)
        if (c.kind == CellKind::Channel && pending[c.id] > 0)
            throw Error("simulate_peak_depth: drainage cycle at cell " + std::to_string(c.id));

    std::vector<double> depth(n, 0.0);
    for (const Cell& c : grid.cells) {
        double d = local[c.id];
        if (c.kind == CellKind::Channel) d += params.routing_weight * accumulated[c.id];
        depth[c.id] = std::min(d, params.depth_cap_ft);
    }
    return depth;
}

}  // namespace floodml
