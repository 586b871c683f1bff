#pragma once

#include <filesystem>
#include <vector>

#include "floodml/grid.hpp"

namespace floodml {

/// One rain gage: 15-minute depth samples starting at `start_minutes`.
struct GageRecord {
    int gage_id = 0;
    double x = 0.0;
    double y = 0.0;
    int start_minutes = 0;
    std::vector<double> depths_in;  // one entry per 15-minute step
};

/// Per-cell hourly rainfall intensity for one event, row-major [cell][hour].
struct RainfallField {
    int n_cells = 0;
    int n_hours = 0;
    std::vector<double> intensity;

    RainfallField() = default;
    RainfallField(int cells, int hours)
        : n_cells(cells), n_hours(hours), intensity(static_cast<std::size_t>(cells) * hours, 0.0) {}

    double& at(int cell, int hour) { return intensity[static_cast<std::size_t>(cell) * n_hours + hour]; }
    double at(int cell, int hour) const {
        return intensity[static_cast<std::size_t>(cell) * n_hours + hour];
    }
    const double* row(int cell) const { return intensity.data() + static_cast<std::size_t>(cell) * n_hours; }
};

struct ThiessenAssignment {
    std::vector<int> cell_to_gage;  // indexed by cell id, holds gage_id
};

/// Nearest-gage assignment per cell centroid; ties go to the lowest gage_id.
ThiessenAssignment thiessen_assign(const Grid& grid, const std::vector<GageRecord>& gages);

/// Sums 15-minute depths into hourly totals; a trailing partial hour is
/// zero-padded so the event total is conserved.
std::vector<double> aggregate_hourly(const GageRecord& record);

/// Piecewise-constant rainfall field: each cell gets the hourly series of its
/// assigned gage.
RainfallField build_field(const Grid& grid, const std::vector<GageRecord>& gages,
                          const ThiessenAssignment& assignment);

/// Gage CSV (`gage_id,x,y,t_minutes,depth_in`, long format). Validates the
/// 15-minute step and non-negative depths per gage.
std::vector<GageRecord> load_gages(const std::filesystem::path& path);

void write_field(const RainfallField& field, const std::filesystem::path& path);
RainfallField read_field(const std::filesystem::path& path);

}  // namespace floodml
