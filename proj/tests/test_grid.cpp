#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>
#include <stdexcept>
#include <vector>

#include "wavesrc/grid.hpp"

using namespace wavesrc;

namespace {

SpaceTimeGrid make_grid(int n, int n_t) {
    SpaceTimeGrid g;
    g.space = SpatialGrid2D::square(-0.5, 0.5, n);
    g.time = TimeGrid::make(1.0, n_t);
    return g;
}

} // namespace

TEST_CASE("square grid node coordinates") {
    const SpatialGrid2D g = SpatialGrid2D::square(-0.5, 0.5, 45);
    CHECK(g.n == 45);
    CHECK(g.dx == doctest::Approx(1.0 / 44.0).epsilon(1e-15));
    CHECK(g.x(1) == doctest::Approx(-0.5));
    CHECK(g.x(45) == doctest::Approx(0.5));
    CHECK(g.x(23) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(g.y(12) == doctest::Approx(-0.25));
    CHECK(g.is_boundary(1, 7));
    CHECK(g.is_boundary(45, 45));
    CHECK(g.is_boundary(3, 1));
    CHECK_FALSE(g.is_boundary(2, 2));
}

TEST_CASE("square grid rejects degenerate input") {
    CHECK_THROWS_AS(SpatialGrid2D::square(-0.5, 0.5, 1), config_error);
    CHECK_THROWS_AS(SpatialGrid2D::square(0.5, 0.5, 10), config_error);
    CHECK_THROWS_AS(SpatialGrid2D::square(0.5, -0.5, 10), config_error);
}

TEST_CASE("time grid conventions") {
    const TimeGrid a = TimeGrid::make(1.0, 60, DtConvention::t_over_nt);
    CHECK(a.dt == doctest::Approx(1.0 / 60.0).epsilon(1e-15));
    CHECK(a.t(1) == 0.0);
    CHECK(a.t(60) == doctest::Approx(1.0 - 1.0 / 60.0));

    const TimeGrid b = TimeGrid::make(1.0, 60, DtConvention::t_over_nt_minus_1);
    CHECK(b.dt == doctest::Approx(1.0 / 59.0));
    CHECK(b.t(60) == doctest::Approx(1.0));

    CHECK_THROWS_AS(TimeGrid::make(1.0, 2), config_error);
    CHECK_THROWS_AS(TimeGrid::make(0.0, 60), config_error);
    CHECK_THROWS_AS(TimeGrid::make(-1.0, 60), config_error);
}

TEST_CASE("linearize and delinearize are inverse bijections") {
    const SpaceTimeGrid g = make_grid(5, 4);
    std::set<std::int64_t> seen;
    for (int m = 1; m <= 5; ++m)
        for (int n = 1; n <= 5; ++n)
            for (int j = 1; j <= 4; ++j) {
                const std::int64_t i = linearize(m, n, j, g);
                CHECK(i >= 1);
                CHECK(i <= g.unknowns());
                seen.insert(i);
                const auto back = delinearize(i, g);
                CHECK(back[0] == m);
                CHECK(back[1] == n);
                CHECK(back[2] == j);
            }
    CHECK(std::int64_t(seen.size()) == g.unknowns());
}

TEST_CASE("linearization is time-fastest with documented strides") {
    const SpaceTimeGrid g = make_grid(7, 5);
    CHECK(linearize(1, 1, 1, g) == 1);
    CHECK(linearize(1, 1, 2, g) == 2);
    CHECK(linearize(1, 2, 1, g) == 1 + 5);
    CHECK(linearize(2, 1, 1, g) == 1 + 7 * 5);
    CHECK(linearize(7, 7, 5, g) == g.unknowns());
    CHECK(flat_index(0, 0, 0, 7, 5) == linearize(1, 1, 1, g) - 1);
    CHECK(flat_index(3, 2, 4, 7, 5) == linearize(4, 3, 5, g) - 1);
}

TEST_CASE("index bounds are rejected") {
    const SpaceTimeGrid g = make_grid(5, 4);
    CHECK_THROWS_AS(linearize(0, 1, 1, g), std::out_of_range);
    CHECK_THROWS_AS(linearize(1, 6, 1, g), std::out_of_range);
    CHECK_THROWS_AS(linearize(1, 1, 5, g), std::out_of_range);
    CHECK_THROWS_AS(delinearize(0, g), std::out_of_range);
    CHECK_THROWS_AS(delinearize(g.unknowns() + 1, g), std::out_of_range);
}

TEST_CASE("boundary enumeration order, count, and normals") {
    const int n = 6;
    const auto nodes = boundary_nodes(n);
    REQUIRE(std::int64_t(nodes.size()) == 4 * n - 4);

    // west then east then south then north
    for (int k = 0; k < n; ++k) {
        CHECK(nodes[std::size_t(k)].m == 1);
        CHECK(nodes[std::size_t(k)].n == k + 1);
        CHECK(nodes[std::size_t(k)].nu_x == -1.0);
        CHECK(nodes[std::size_t(k)].nu_y == 0.0);
    }
    for (int k = 0; k < n; ++k) {
        CHECK(nodes[std::size_t(n + k)].m == n);
        CHECK(nodes[std::size_t(n + k)].nu_x == 1.0);
    }
    for (int k = 0; k < n - 2; ++k) {
        const auto& s = nodes[std::size_t(2 * n + k)];
        CHECK(s.n == 1);
        CHECK(s.m == k + 2);
        CHECK(s.nu_y == -1.0);
    }
    for (int k = 0; k < n - 2; ++k) {
        const auto& t = nodes[std::size_t(3 * n - 2 + k)];
        CHECK(t.n == n);
        CHECK(t.nu_y == 1.0);
    }

    // each boundary node appears exactly once
    std::set<std::pair<int, int>> uniq;
    for (const auto& b : nodes) uniq.insert({b.m, b.n});
    CHECK(uniq.size() == nodes.size());

    // corners belong to the west/east runs and carry x-axis normals
    for (const auto& b : nodes)
        if ((b.m == 1 || b.m == n) && (b.n == 1 || b.n == n)) {
            CHECK(b.nu_y == 0.0);
            CHECK((b.nu_x == -1.0 || b.nu_x == 1.0));
        }

    const SpatialGrid2D g = SpatialGrid2D::square(-0.5, 0.5, n);
    CHECK(boundary_nodes(g).size() == nodes.size());
}
