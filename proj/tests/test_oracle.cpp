#include <doctest.h>

#include <cmath>
#include <numeric>

#include "floodml/common.hpp"
#include "floodml/oracle.hpp"
#include "floodml/presets.hpp"
#include "helpers.hpp"

using namespace floodml;
using testutil::make_cell;
using testutil::make_field;
using testutil::make_grid;

namespace {

StormConfig small_config(std::uint64_t seed) {
    StormConfig c;
    c.n_events = 5;
    c.min_hours = 6;
    c.max_hours = 18;
    c.min_centers = 1;
    c.max_centers = 2;
    c.min_radius = 50.0;
    c.max_radius = 500.0;
    c.min_intensity = 0.1;
    c.max_intensity = 0.5;
    c.seed = seed;
    return c;
}

}  // namespace

TEST_CASE("generate_events: bit-identical for a fixed seed") {
    const Grid grid = presets::desk_grid();
    const auto a = generate_events(grid, small_config(9001));
    const auto b = generate_events(grid, small_config(9001));
    REQUIRE(a.size() == b.size());
    for (std::size_t e = 0; e < a.size(); ++e) CHECK(a[e].intensity == b[e].intensity);

    const auto c = generate_events(grid, small_config(9002));
    bool any_different = false;
    for (std::size_t e = 0; e < a.size() && !any_different; ++e)
        any_different = a[e].n_hours != c[e].n_hours || a[e].intensity != c[e].intensity;
    CHECK(any_different);
}

TEST_CASE("generate_events: zero intensity range gives null events") {
    const Grid grid = presets::desk_grid();
    StormConfig cfg = small_config(1);
    cfg.min_intensity = cfg.max_intensity = 0.0;
    for (const auto& field : generate_events(grid, cfg))
        for (double v : field.intensity) CHECK(v == 0.0);
}

TEST_CASE("generate_events: radius much larger than the domain is near-uniform") {
    const Grid grid = presets::desk_grid();  // 1900 ft extent
    StormConfig cfg = small_config(77);
    cfg.n_events = 3;
    cfg.min_centers = cfg.max_centers = 1;
    cfg.min_radius = cfg.max_radius = 40000.0;
    for (const auto& field : generate_events(grid, cfg)) {
        std::vector<double> cumulative(field.n_cells, 0.0);
        for (int c = 0; c < field.n_cells; ++c)
            for (int h = 0; h < field.n_hours; ++h) cumulative[c] += field.at(c, h);
        const double mean =
            std::accumulate(cumulative.begin(), cumulative.end(), 0.0) / cumulative.size();
        REQUIRE(mean > 0.0);
        double var = 0.0;
        for (double v : cumulative) var += (v - mean) * (v - mean);
        const double cv = std::sqrt(var / cumulative.size()) / mean;
        CHECK(cv < 0.1);
    }
}

TEST_CASE("generate_events: degenerate grid is rejected") {
    Grid empty;
    CHECK_THROWS_AS(generate_events(empty, small_config(1)), Error);
}

TEST_CASE("simulate_peak_depth: zero rainfall gives zero depth") {
    const Grid grid = presets::desk_grid();
    const RainfallField dry(grid.n_cells(), 4);
    for (double d : simulate_peak_depth(grid, dry, presets::desk_oracle_params()))
        CHECK(d == 0.0);
}

TEST_CASE("simulate_peak_depth: non-channel response is local and deterministic") {
    const Grid grid = make_grid({make_cell(0, 0, 0, 1, CellKind::NonChannel, 0),
                                 make_cell(1, 50, 0, 1, CellKind::NonChannel, 0),
                                 make_cell(2, 100, 0, 1, CellKind::NonChannel, 0)});
    OracleParams params;
    auto field = make_field({{1.0, 2.0, 0.5}, {1.0, 2.0, 0.5}, {0, 0, 0}});
    const auto depth = simulate_peak_depth(grid, field, params);
    CHECK(depth[0] == depth[1]);  // identical series, identical depth
    CHECK(depth[2] == 0.0);

    // perturbing another cell leaves a non-channel cell unchanged, exactly
    field.at(2, 1) = 3.0;
    const auto depth2 = simulate_peak_depth(grid, field, params);
    CHECK(depth2[0] == depth[0]);
    CHECK(depth2[1] == depth[1]);
    CHECK(depth2[2] > 0.0);

    // identical inputs are bit-identical
    CHECK(simulate_peak_depth(grid, field, params) == depth2);
}

TEST_CASE("simulate_peak_depth: five-cell chain matches the closed form") {
    std::vector<Cell> cells;
    for (int i = 0; i < 5; ++i)
        cells.push_back(make_cell(i, i * 10.0, 0, 1, CellKind::Channel, 0,
                                  i < 4 ? std::optional<int>(i + 1) : std::nullopt));
    const Grid grid = make_grid(std::move(cells));

    OracleParams params;
    params.runoff_channel = 0.5;
    params.runoff_non_channel = 0.5;
    params.infiltration_in = 1.0;
    params.routing_weight = 0.25;
    params.depth_cap_ft = 100.0;

    // rain only on the most-upstream cell: cumulative 3 in, peak 1 in/hr
    auto field = make_field({{1.0, 1.0, 1.0}, {0, 0, 0}, {0, 0, 0}, {0, 0, 0}, {0, 0, 0}});
    const auto depth = simulate_peak_depth(grid, field, params);

    const double local0 = 0.5 * (3.0 - 1.0) * oracle_peak_gain(1.0);
    CHECK(depth[0] == doctest::Approx(local0).epsilon(1e-15));
    for (int i = 1; i < 5; ++i) {
        CHECK(depth[i] > 0.0);  // dry cells flood from upstream routing
        CHECK(depth[i] == doctest::Approx(0.25 * local0).epsilon(1e-15));
    }
}

TEST_CASE("simulate_peak_depth: channel depth reacts to upstream-only changes") {
    std::vector<Cell> cells;
    for (int i = 0; i < 3; ++i)
        cells.push_back(make_cell(i, i * 10.0, 0, 1, CellKind::Channel, 0,
                                  i < 2 ? std::optional<int>(i + 1) : std::nullopt));
    const Grid grid = make_grid(std::move(cells));
    OracleParams params;

    auto field = make_field({{2.0, 2.0}, {1.0, 1.0}, {1.0, 1.0}});
    const auto before = simulate_peak_depth(grid, field, params);
    field.at(0, 0) = 4.0;  // change rain only at the head cell
    const auto after = simulate_peak_depth(grid, field, params);
    CHECK(after[2] > before[2]);
    CHECK(after[1] > before[1]);
}

TEST_CASE("simulate_peak_depth property: pointwise more rain never lowers depth") {
    const Grid grid = presets::desk_grid();
    const auto fields = generate_events(grid, small_config(501));
    const OracleParams params = presets::desk_oracle_params();
    Rng rng(606);
    for (const auto& field : fields) {
        const auto base = simulate_peak_depth(grid, field, params);
        RainfallField more = field;
        for (double& v : more.intensity)
            if (rng.next_double() < 0.3) v += rng.uniform(0.0, 0.5);
        const auto bumped = simulate_peak_depth(grid, more, params);
        for (int c = 0; c < grid.n_cells(); ++c) CHECK(bumped[c] >= base[c]);
    }
}

TEST_CASE("simulate_peak_depth: depths never exceed the cap") {
    const Grid grid = presets::desk_grid();
    StormConfig cfg = small_config(3203);
    cfg.min_intensity = 2.0;
    cfg.max_intensity = 4.0;
    cfg.min_radius = 5000.0;
    cfg.max_radius = 5000.0;
    OracleParams params = presets::desk_oracle_params();
    for (const auto& field : generate_events(grid, cfg)) {
        const auto depth = simulate_peak_depth(grid, field, params);
        double peak = 0.0;
        for (double d : depth) {
            CHECK(d <= params.depth_cap_ft);
            peak = std::max(peak, d);
        }
        CHECK(peak == params.depth_cap_ft);  // soaked corpus saturates somewhere
    }
}

TEST_CASE("simulate_peak_depth: dimension mismatch is rejected") {
    const Grid grid = presets::desk_grid();
    const RainfallField wrong(grid.n_cells() - 1, 4);
    CHECK_THROWS_AS(simulate_peak_depth(grid, wrong, presets::desk_oracle_params()), Error);
}

TEST_CASE("oracle params are validated") {
    const Grid grid = presets::desk_grid();
    const RainfallField dry(grid.n_cells(), 2);
    OracleParams params;
    params.runoff_channel = 0.0;
    CHECK_THROWS_AS(simulate_peak_depth(grid, dry, params), Error);
    params = OracleParams{};
    params.routing_weight = -1.0;
    CHECK_THROWS_AS(simulate_peak_depth(grid, dry, params), Error);
}
