#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "floodml/grid.hpp"
#include "floodml/rainfall.hpp"

namespace testutil {

/// Unique temp directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("floodml_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline floodml::Cell make_cell(int id, double x, double y, double area, floodml::CellKind kind,
                               int watershed, std::optional<int> downstream = std::nullopt) {
    floodml::Cell c;
    c.id = id;
    c.x = x;
    c.y = y;
    c.area_sqft = area;
    c.kind = kind;
    c.watershed = watershed;
    c.downstream = downstream;
    return c;
}

inline floodml::Grid make_grid(std::vector<floodml::Cell> cells, int n_watersheds = -1) {
    floodml::Grid grid;
    grid.cells = std::move(cells);
    if (n_watersheds > 0)
        for (int w = 0; w < n_watersheds; ++w)
            grid.watersheds.push_back({w, "W" + std::to_string(w), 0.0});
    grid.rebuild_derived();
    return grid;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Field with explicit per-cell hourly series.
inline floodml::RainfallField make_field(const std::vector<std::vector<double>>& rows) {
    floodml::RainfallField f(static_cast<int>(rows.size()),
                             rows.empty() ? 0 : static_cast<int>(rows.front().size()));
    for (std::size_t c = 0; c < rows.size(); ++c)
        for (std::size_t h = 0; h < rows[c].size(); ++h)
            f.at(static_cast<int>(c), static_cast<int>(h)) = rows[c][h];
    return f;
}

}  // namespace testutil
