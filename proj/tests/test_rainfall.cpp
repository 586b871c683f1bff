#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "floodml/common.hpp"
#include "floodml/rainfall.hpp"
#include "helpers.hpp"

using namespace floodml;
using testutil::make_cell;
using testutil::make_grid;

namespace {

GageRecord gage(int id, double x, double y, std::vector<double> depths) {
    GageRecord g;
    g.gage_id = id;
    g.x = x;
    g.y = y;
    g.depths_in = std::move(depths);
    return g;
}

}  // namespace

TEST_CASE("thiessen_assign: single gage covers everything") {
    const Grid grid = make_grid({make_cell(0, 0, 0, 1, CellKind::NonChannel, 0),
                                 make_cell(1, 50, 20, 1, CellKind::NonChannel, 0)});
    const auto a = thiessen_assign(grid, {gage(7, 10, 10, {})});
    CHECK(a.cell_to_gage == std::vector<int>{7, 7});
}

TEST_CASE("thiessen_assign: equidistant tie goes to the lowest gage id") {
    const Grid grid = make_grid({make_cell(0, 0, 0, 1, CellKind::NonChannel, 0)});
    const auto a = thiessen_assign(grid, {gage(5, 1, 0, {}), gage(2, 0, 1, {})});
    CHECK(a.cell_to_gage[0] == 2);
}

TEST_CASE("thiessen_assign: matches a brute-force nearest scan on a line") {
    std::vector<Cell> cells;
    for (int i = 0; i < 4; ++i) cells.push_back(make_cell(i, i * 10.0, 0, 1, CellKind::NonChannel, 0));
    const Grid grid = make_grid(std::move(cells));
    const std::vector<GageRecord> gages{gage(0, -5, 0, {}), gage(1, 36, 0, {})};
    const auto a = thiessen_assign(grid, gages);
    for (const Cell& c : grid.cells) {
        int best = -1;
        double best_d = 1e300;
        for (const auto& g : gages) {
            const double d = std::hypot(g.x - c.x, g.y - c.y);
            if (d < best_d) {
                best_d = d;
                best = g.gage_id;
            }
        }
        CHECK(a.cell_to_gage[c.id] == best);
    }
}

TEST_CASE("thiessen_assign: independent of gage list order and idempotent") {
    Rng rng(55);
    std::vector<Cell> cells;
    for (int i = 0; i < 40; ++i)
        cells.push_back(make_cell(i, rng.uniform(0, 100), rng.uniform(0, 100), 1,
                                  CellKind::NonChannel, 0));
    const Grid grid = make_grid(std::move(cells));
    std::vector<GageRecord> gages;
    for (int i = 0; i < 6; ++i) gages.push_back(gage(i, rng.uniform(0, 100), rng.uniform(0, 100), {}));

    const auto a = thiessen_assign(grid, gages);
    std::reverse(gages.begin(), gages.end());
    const auto b = thiessen_assign(grid, gages);
    CHECK(a.cell_to_gage == b.cell_to_gage);
    CHECK(thiessen_assign(grid, gages).cell_to_gage == b.cell_to_gage);
}

TEST_CASE("thiessen_assign: moving a gage strictly closer captures the cell") {
    const Grid grid = make_grid({make_cell(0, 0, 0, 1, CellKind::NonChannel, 0)});
    std::vector<GageRecord> gages{gage(0, 10, 0, {}), gage(1, 20, 0, {})};
    CHECK(thiessen_assign(grid, gages).cell_to_gage[0] == 0);
    gages[1].x = 5.0;
    CHECK(thiessen_assign(grid, gages).cell_to_gage[0] == 1);
}

TEST_CASE("thiessen_assign: error cases") {
    const Grid grid = make_grid({make_cell(0, 0, 0, 1, CellKind::NonChannel, 0)});
    CHECK_THROWS_AS(thiessen_assign(grid, {}), Error);
    CHECK_THROWS_WITH_AS(thiessen_assign(grid, {gage(0, 1, 1, {}), gage(1, 1, 1, {})}),
                         doctest::Contains("share a location"), Error);
}

TEST_CASE("aggregate_hourly") {
    CHECK(aggregate_hourly(gage(0, 0, 0, {0.1, 0.2, 0.3, 0.4})) == std::vector<double>{1.0});
    CHECK(aggregate_hourly(gage(0, 0, 0, std::vector<double>(8, 0.0))) ==
          std::vector<double>{0.0, 0.0});
    const auto hourly = aggregate_hourly(gage(0, 0, 0, {0.5, 0, 0, 0, 0, 0, 0, 0.5}));
    CHECK(hourly == std::vector<double>{0.5, 0.5});
    CHECK(std::accumulate(hourly.begin(), hourly.end(), 0.0) == 1.0);

    // trailing partial hour is zero-padded
    CHECK(aggregate_hourly(gage(0, 0, 0, {0.1, 0.1, 0.1, 0.1, 0.3})) ==
          std::vector<double>{0.4, 0.3});
}

TEST_CASE("build_field: cells sharing a gage share a row; zero rain stays zero") {
    const Grid grid = make_grid({make_cell(0, 0, 0, 1, CellKind::NonChannel, 0),
                                 make_cell(1, 1, 0, 1, CellKind::NonChannel, 0)});
    const std::vector<GageRecord> gages{gage(3, 0.4, 0, {0.1, 0.2, 0.3, 0.4})};
    const auto field = build_field(grid, gages, thiessen_assign(grid, gages));
    CHECK(field.n_hours == 1);
    CHECK(field.at(0, 0) == 1.0);
    CHECK(field.at(1, 0) == 1.0);

    const std::vector<GageRecord> dry{gage(3, 0.4, 0, {0, 0, 0, 0})};
    const auto zero = build_field(grid, dry, thiessen_assign(grid, dry));
    for (double v : zero.intensity) CHECK(v == 0.0);
}

TEST_CASE("build_field: three cells, two gages, assembled by hand") {
    const Grid grid = make_grid({make_cell(0, 0, 0, 1, CellKind::NonChannel, 0),
                                 make_cell(1, 10, 0, 1, CellKind::NonChannel, 0),
                                 make_cell(2, 100, 0, 1, CellKind::NonChannel, 0)});
    const std::vector<GageRecord> gages{gage(0, 1, 0, {0.1, 0.1, 0.1, 0.1, 0.4, 0, 0, 0}),
                                        gage(1, 99, 0, {0, 0, 0, 0, 0.2, 0.2, 0.2, 0.2})};
    const auto field = build_field(grid, gages, thiessen_assign(grid, gages));
    REQUIRE(field.n_hours == 2);
    // cells 0 and 1 take gage 0: hours {0.4, 0.4}; cell 2 takes gage 1: {0, 0.8}
    CHECK(field.at(0, 0) == doctest::Approx(0.4));
    CHECK(field.at(0, 1) == doctest::Approx(0.4));
    CHECK(field.at(1, 0) == doctest::Approx(0.4));
    CHECK(field.at(2, 0) == 0.0);
    CHECK(field.at(2, 1) == doctest::Approx(0.8));
}

TEST_CASE("build_field property: per-cell mass conservation") {
    Rng rng(99);
    std::vector<Cell> cells;
    for (int i = 0; i < 25; ++i)
        cells.push_back(make_cell(i, rng.uniform(0, 50), rng.uniform(0, 50), 1,
                                  CellKind::NonChannel, 0));
    const Grid grid = make_grid(std::move(cells));
    std::vector<GageRecord> gages;
    for (int i = 0; i < 4; ++i) {
        std::vector<double> depths;
        for (int k = 0; k < 28; ++k) depths.push_back(rng.uniform(0, 0.3));
        gages.push_back(gage(i, rng.uniform(0, 50), rng.uniform(0, 50), std::move(depths)));
    }
    const auto assignment = thiessen_assign(grid, gages);
    const auto field = build_field(grid, gages, assignment);
    for (const Cell& c : grid.cells) {
        double row_sum = 0.0;
        for (int h = 0; h < field.n_hours; ++h) row_sum += field.at(c.id, h);
        const GageRecord* g = nullptr;
        for (const auto& gg : gages)
            if (gg.gage_id == assignment.cell_to_gage[c.id]) g = &gg;
        REQUIRE(g != nullptr);
        const double gage_sum = std::accumulate(g->depths_in.begin(), g->depths_in.end(), 0.0);
        CHECK(row_sum == doctest::Approx(gage_sum).epsilon(1e-9));
    }
}

TEST_CASE("build_field: mismatched gage windows are rejected") {
    const Grid grid = make_grid({make_cell(0, 0, 0, 1, CellKind::NonChannel, 0)});
    const std::vector<GageRecord> gages{gage(0, 1, 0, {0.1, 0.1, 0.1, 0.1}),
                                        gage(1, 2, 0, {0.1, 0.1})};
    CHECK_THROWS_WITH_AS(build_field(grid, gages, thiessen_assign(grid, gages)),
                         doctest::Contains("window"), Error);
}

TEST_CASE("load_gages: validates the 15-minute step") {
    testutil::TempDir dir("gages");
    testutil::write_text(dir / "gages.csv",
                         "gage_id,x,y,t_minutes,depth_in\n"
                         "0,1,2,0,0.1\n"
                         "0,1,2,15,0.2\n"
                         "1,5,5,0,0.0\n"
                         "1,5,5,15,0.3\n");
    const auto gages = load_gages(dir / "gages.csv");
    REQUIRE(gages.size() == 2);
    CHECK(gages[0].depths_in == std::vector<double>{0.1, 0.2});
    CHECK(gages[1].x == 5.0);

    testutil::write_text(dir / "bad.csv",
                         "gage_id,x,y,t_minutes,depth_in\n"
                         "0,1,2,0,0.1\n"
                         "0,1,2,30,0.2\n");
    CHECK_THROWS_WITH_AS(load_gages(dir / "bad.csv"), doctest::Contains("15 minutes"), ParseError);

    testutil::write_text(dir / "neg.csv",
                         "gage_id,x,y,t_minutes,depth_in\n"
                         "0,1,2,0,-0.1\n");
    CHECK_THROWS_AS(load_gages(dir / "neg.csv"), ParseError);
}

TEST_CASE("rainfall field CSV round-trip") {
    testutil::TempDir dir("field");
    const auto field = testutil::make_field({{0.0, 1.25}, {0.5, 0.0}});
    write_field(field, dir / "f.csv");
    const auto loaded = read_field(dir / "f.csv");
    CHECK(loaded.n_cells == 2);
    CHECK(loaded.n_hours == 2);
    CHECK(loaded.intensity == field.intensity);
}
