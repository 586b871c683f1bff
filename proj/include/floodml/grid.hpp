#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace floodml {

enum class CellKind { Channel, NonChannel };

struct Cell {
    int id = 0;
    double x = 0.0;
    double y = 0.0;
    double area_sqft = 0.0;
    CellKind kind = CellKind::NonChannel;
    int watershed = 0;
    std::optional<int> downstream;  // drainage successor, channel cells only
};

struct Watershed {
    int id = 0;
    std::string name;
    double area_sqft = 0.0;  // sum of member cell areas
};

/// Study-area mesh. Immutable after load; shared read-only across workers.
struct Grid {
    std::vector<Cell> cells;
    std::vector<Watershed> watersheds;
    int n_channel = 0;
    int n_non_channel = 0;

    int n_cells() const { return static_cast<int>(cells.size()); }
    int n_watersheds() const { return static_cast<int>(watersheds.size()); }

    /// Cells draining directly into `cell` (channel forest edges), ascending id.
    const std::vector<int>& upstream_neighbors(int cell) const { return upstream_of_[cell]; }

    void rebuild_derived();  // recomputes counts, watershed areas, upstream lists

private:
    std::vector<std::vector<int>> upstream_of_;
};

/// Loads the grid CSV (`cell_id,x,y,area_sqft,kind,watershed_id,downstream_id`).
/// When `watershed_csv` is given (`watershed_id,name`) it fixes the watershed
/// count and names; otherwise watersheds are inferred from the cells.
Grid load_grid(const std::filesystem::path& grid_csv,
               const std::optional<std::filesystem::path>& watershed_csv = std::nullopt);

void save_grid(const Grid& grid, const std::filesystem::path& grid_csv,
               const std::optional<std::filesystem::path>& watershed_csv = std::nullopt);

/// Every invariant violation in human-readable form; empty means valid.
std::vector<std::string> validate_grid(const Grid& grid);

/// Sum of member cell areas (AW of the watershed-ratio features).
double watershed_area(const Grid& grid, int watershed);

}  // namespace floodml
