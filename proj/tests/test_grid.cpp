#include <doctest.h>

#include "floodml/common.hpp"
#include "floodml/grid.hpp"
#include "helpers.hpp"

using namespace floodml;
using testutil::make_cell;
using testutil::make_grid;

namespace {

const char* kThreeCellCsv =
    "cell_id,x,y,area_sqft,kind,watershed_id,downstream_id\n"
    "0,0,0,1,nonchannel,0,\n"
    "1,1,0,1,nonchannel,0,\n"
    "2,2,0,1,nonchannel,0,\n";

}  // namespace

TEST_CASE("load_grid: three non-channel cells, one watershed") {
    testutil::TempDir dir("grid");
    testutil::write_text(dir / "grid.csv", kThreeCellCsv);
    const Grid grid = load_grid(dir / "grid.csv");
    CHECK(grid.n_cells() == 3);
    CHECK(grid.n_channel == 0);
    CHECK(grid.n_non_channel == 3);
    CHECK(watershed_area(grid, 0) == 3.0);
    CHECK(validate_grid(grid).empty());
}

TEST_CASE("load_grid: drainage cycle is rejected") {
    testutil::TempDir dir("grid");
    testutil::write_text(dir / "grid.csv",
                         "cell_id,x,y,area_sqft,kind,watershed_id,downstream_id\n"
                         "0,0,0,1,channel,0,1\n"
                         "1,1,0,1,channel,0,0\n");
    CHECK_THROWS_WITH_AS(load_grid(dir / "grid.csv"), doctest::Contains("drainage cycle"),
                         ValidationError);
}

TEST_CASE("load_grid: watershed id out of declared range") {
    testutil::TempDir dir("grid");
    std::string ws = "watershed_id,name\n";
    for (int w = 0; w < 9; ++w) ws += std::to_string(w) + ",W" + std::to_string(w) + "\n";
    testutil::write_text(dir / "watersheds.csv", ws);
    testutil::write_text(dir / "grid.csv",
                         "cell_id,x,y,area_sqft,kind,watershed_id,downstream_id\n"
                         "0,0,0,1,nonchannel,9,\n");
    CHECK_THROWS_AS(load_grid(dir / "grid.csv", dir / "watersheds.csv"), ParseError);
}

TEST_CASE("load_grid: parse errors carry line numbers") {
    testutil::TempDir dir("grid");
    testutil::write_text(dir / "grid.csv",
                         "cell_id,x,y,area_sqft,kind,watershed_id,downstream_id\n"
                         "0,0,0,oops,nonchannel,0,\n");
    CHECK_THROWS_WITH_AS(load_grid(dir / "grid.csv"), doctest::Contains("line 2"), ParseError);
}

TEST_CASE("validate_grid: violations are reported, not thrown") {
    SUBCASE("valid grid") {
        const Grid grid = make_grid({make_cell(0, 0, 0, 1, CellKind::NonChannel, 0),
                                     make_cell(1, 1, 0, 1, CellKind::NonChannel, 0),
                                     make_cell(2, 2, 0, 1, CellKind::NonChannel, 0)});
        CHECK(validate_grid(grid).empty());
    }
    SUBCASE("non-channel cell with downstream") {
        const Grid grid = make_grid({make_cell(0, 0, 0, 1, CellKind::Channel, 0),
                                     make_cell(1, 1, 0, 1, CellKind::NonChannel, 0),
                                     make_cell(2, 2, 0, 1, CellKind::NonChannel, 0, 0)});
        const auto violations = validate_grid(grid);
        REQUIRE(violations.size() == 1);
        CHECK(violations[0] == "non-channel cell 2 has downstream");
    }
    SUBCASE("stale watershed area field") {
        Grid grid = make_grid({make_cell(0, 0, 0, 2, CellKind::NonChannel, 0),
                               make_cell(1, 1, 0, 3, CellKind::NonChannel, 1)});
        grid.watersheds[1].area_sqft = 99.0;
        const auto violations = validate_grid(grid);
        REQUIRE(violations.size() == 1);
        CHECK(violations[0].find("watershed 1") != std::string::npos);
    }
}

TEST_CASE("watershed_area") {
    const Grid grid = make_grid({make_cell(0, 0, 0, 2, CellKind::NonChannel, 0),
                                 make_cell(1, 1, 0, 3, CellKind::NonChannel, 0),
                                 make_cell(2, 2, 0, 5, CellKind::NonChannel, 0)},
                                2);
    CHECK(watershed_area(grid, 0) == 10.0);
    CHECK(watershed_area(grid, 1) == 0.0);  // declared but empty
    CHECK_THROWS_AS(watershed_area(grid, 2), Error);

    const Grid fractional = make_grid({make_cell(0, 0, 0, 1.5, CellKind::NonChannel, 0),
                                       make_cell(1, 1, 0, 2.5, CellKind::NonChannel, 0)});
    CHECK(watershed_area(fractional, 0) == 4.0);
}

TEST_CASE("grid property: watershed areas partition the total area") {
    Rng rng(2024);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 1 + static_cast<int>(rng.uniform_int(0, 199));
        const int n_ws = 1 + static_cast<int>(rng.uniform_int(0, 8));
        std::vector<Cell> cells;
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            const double area = rng.uniform(0.5, 100.0);
            total += area;
            cells.push_back(make_cell(i, rng.uniform(0, 1000), rng.uniform(0, 1000), area,
                                      CellKind::NonChannel,
                                      static_cast<int>(rng.uniform_int(0, n_ws - 1))));
        }
        const Grid grid = make_grid(std::move(cells), n_ws);
        double sum = 0.0;
        for (int w = 0; w < n_ws; ++w) sum += watershed_area(grid, w);
        CHECK(sum == doctest::Approx(total).epsilon(1e-9));
    }
}

TEST_CASE("grid property: channel drainage terminates within n_channel steps") {
    // 30-cell chain with one branch
    std::vector<Cell> cells;
    for (int i = 0; i < 30; ++i)
        cells.push_back(make_cell(i, i, 0, 1, CellKind::Channel, 0,
                                  i < 29 ? std::optional<int>(i + 1) : std::nullopt));
    cells.push_back(make_cell(30, 0, 1, 1, CellKind::Channel, 0, 15));
    const Grid grid = make_grid(std::move(cells));
    CHECK(validate_grid(grid).empty());
    for (const Cell& start : grid.cells) {
        int steps = 0;
        std::optional<int> cur = start.id;
        while (cur && steps <= grid.n_channel) {
            cur = grid.cells[*cur].downstream;
            ++steps;
        }
        CHECK(steps <= grid.n_channel);
    }
}

TEST_CASE("grid round-trip: save then load is identical") {
    testutil::TempDir dir("grid");
    const Grid grid = make_grid({make_cell(0, 0.25, 1e6, 1200.5, CellKind::Channel, 0, 1),
                                 make_cell(1, 1.75, -3.5, 0.125, CellKind::Channel, 1),
                                 make_cell(2, 2.0, 0.1, 3.25, CellKind::NonChannel, 1)},
                                2);
    save_grid(grid, dir / "grid.csv", dir / "ws.csv");
    const Grid loaded = load_grid(dir / "grid.csv", dir / "ws.csv");
    REQUIRE(loaded.n_cells() == grid.n_cells());
    for (int i = 0; i < grid.n_cells(); ++i) {
        CHECK(loaded.cells[i].x == grid.cells[i].x);
        CHECK(loaded.cells[i].y == grid.cells[i].y);
        CHECK(loaded.cells[i].area_sqft == grid.cells[i].area_sqft);
        CHECK(loaded.cells[i].kind == grid.cells[i].kind);
        CHECK(loaded.cells[i].watershed == grid.cells[i].watershed);
        CHECK(loaded.cells[i].downstream == grid.cells[i].downstream);
    }
    // a second save produces identical bytes
    save_grid(loaded, dir / "grid2.csv");
    CHECK(testutil::read_text(dir / "grid.csv") == testutil::read_text(dir / "grid2.csv"));
}
