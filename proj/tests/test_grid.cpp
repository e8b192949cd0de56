#include "doctest.h"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "dkplab/grid.hpp"

using namespace dkplab;

TEST_CASE("node and cell counts") {
  auto g = HalfSpaceGrid::build(1, 0.01, 2.0, 2.0);
  CHECK(g.nx() == 401);
  CHECK(g.nt() == 201);
  CHECK(g.node_count() == 401 * 201);
  CHECK(g.boundary_count() == 401);
  CHECK(g.cell_count() == 400 * 200);

  auto g2 = HalfSpaceGrid::build(1, 0.5, 1.0, 1.0);
  CHECK(g2.nx() == 5);
  CHECK(g2.nt() == 3);

  auto g3 = HalfSpaceGrid::build(2, 0.1, 1.0, 1.0);
  CHECK(g3.nx() == 21);
  CHECK(g3.nt() == 11);
  CHECK(g3.node_count() == 21 * 21 * 11);
  CHECK(g3.cell_count() == 20 * 20 * 10);
}

TEST_CASE("construction rejects bad input") {
  CHECK_THROWS_AS(HalfSpaceGrid::build(3, 0.1, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(HalfSpaceGrid::build(1, 0.0, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(HalfSpaceGrid::build(1, -0.1, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(HalfSpaceGrid::build(1, 0.1, -1, 1), std::invalid_argument);
  // axis cap: 2*x_max/h = 6000 cells
  CHECK_THROWS_AS(HalfSpaceGrid::build(1, 0.001, 3, 3), std::invalid_argument);
  // boxes must be at least as tall as they are wide
  CHECK_THROWS_AS(HalfSpaceGrid::build(1, 0.1, 2, 1), std::invalid_argument);
}

TEST_CASE("node indexing round trips and classifies faces") {
  auto g = HalfSpaceGrid::build(2, 0.25, 1.0, 1.0);
  for (long id = 0; id < g.node_count(); ++id) {
    auto [i0, i1, j] = g.node_index(id);
    CHECK(g.node_id(i0, i1, j) == id);
    Point p = g.node_point(id);
    CHECK(g.nearest_node(p) == id);
    bool bottom = (j == 0);
    CHECK(g.is_bottom(id) == bottom);
  }
  // corners of the bottom face are bottom, not artificial
  CHECK(g.is_bottom(0));
  // top lid node
  long top = g.node_id(2, 2, g.nt() - 1);
  CHECK(g.on_artificial_face(top));
  CHECK(!g.is_interior(top));
  long mid = g.node_id(2, 2, 1);
  CHECK(g.is_interior(mid));
}

TEST_CASE("cell volumes tile the realized box") {
  for (int n : {1, 2}) {
    auto g = HalfSpaceGrid::build(n, 0.05, 1.0, 2.0);
    double total = g.cell_count() * g.cell_volume();
    double box = std::pow(2.0 * g.x_max(), n) * g.t_max();
    CHECK(std::abs(total - box) <= 1e-12 * box);
  }
}

TEST_CASE("box extents snap to whole cells") {
  auto g = HalfSpaceGrid::build(1, 0.3, 1.0, 1.0);  // 1/0.3 is not an integer
  CHECK(g.nx() == 7);                               // lround(1/0.3) = 3 cells per side
  CHECK(std::abs(g.x_max() - 0.9) <= 1e-15);
  double total = g.cell_count() * g.cell_volume();
  CHECK(std::abs(total - 2.0 * 0.9 * 0.9) <= 1e-12);
}

TEST_CASE("region membership conventions") {
  Region W = Region::whitney({0.0, 0.0}, 1.0);
  CHECK(W.contains(1, {{0.3, 0.0}, 1.0}));        // top face included
  CHECK(!W.contains(1, {{0.3, 0.0}, 0.5}));       // bottom face excluded
  CHECK(W.contains(1, {{0.3, 0.0}, 0.500001}));
  CHECK(!W.contains(1, {{1.0, 0.0}, 0.75}));      // lateral strict
  Region T = Region::carleson({0.0, 0.0}, 1.0);
  CHECK(T.contains(1, {{0.6, 0.0}, 0.6}));
  CHECK(!T.contains(1, {{0.8, 0.0}, 0.6}));       // outside the sphere
  CHECK(!T.contains(1, {{0.5, 0.0}, 0.0}));       // open at t = 0
  Region G = Region::cylinder({0.0, 0.0}, 1.0);
  CHECK(G.contains(1, {{0.9, 0.0}, 0.9}));
  CHECK(!G.contains(1, {{0.9, 0.0}, 1.0}));       // open at t = r
}

TEST_CASE("whitney cells sit inside the cylinder and the doubled ball") {
  for (int n : {1, 2}) {
    auto g = HalfSpaceGrid::build(n, 0.05, 2.0, 2.0);
    BPoint x{0.35, (n == 2) ? -0.25 : 0.0};
    double r = 0.8;
    Region W = Region::whitney(x, r);
    Region G = Region::cylinder(x, r);
    Region T2 = Region::carleson(x, 2.0 * r);
    auto cells = g.cells_in(W);
    CHECK(cells.size() > 0);
    for (long cid : cells) {
      Point c = g.cell_center(cid);
      CHECK(G.contains(n, c));
      CHECK(T2.contains(n, c));
    }
  }
}

TEST_CASE("regions resolve to cells once r >= 4h") {
  auto g = HalfSpaceGrid::build(1, 0.05, 2.0, 2.0);
  double r = 4 * g.h();
  BPoint x{0.325, 0.0};  // half-offset center
  CHECK(g.cells_in(Region::whitney(x, r)).size() > 0);
  CHECK(g.cells_in(Region::carleson(x, r)).size() > 0);
  CHECK(g.cells_in(Region::cylinder(x, r)).size() > 0);
  CHECK(g.boundary_nodes_in(x, r).size() > 0);
  CHECK(g.boundary_midpoints_in(x, r).size() > 0);
  // a slab thinner than one cell resolves to nothing
  CHECK_THROWS(g.region_average(Region::whitney(x, g.h()), [](const Point&) { return 1.0; }));
}

TEST_CASE("midpoint averages: exact values on aligned regions") {
  auto g = HalfSpaceGrid::build(1, 0.1, 2.0, 2.0);
  auto height = [](const Point& p) { return p.t; };
  // constant integrand is exact for every region kind
  for (auto reg : {Region::whitney({0, 0}, 1.0), Region::carleson({0, 0}, 1.0),
                   Region::cylinder({0, 0}, 1.0)}) {
    CHECK(g.region_average(reg, [](const Point&) { return 7.25; }) == doctest::Approx(7.25).epsilon(1e-14));
  }
  // mean of t over the Whitney slab (r/2, r] is 3r/4, exact by midpoint symmetry
  CHECK(std::abs(g.region_average(Region::whitney({0, 0}, 1.0), height) - 0.75) <= 1e-13);
  // mean of t over the cylinder (0, r) is r/2
  CHECK(std::abs(g.region_average(Region::cylinder({0, 0}, 1.0), height) - 0.5) <= 1e-13);
  // mean of t over the half disk is 4r/(3 pi); curved boundary so only ~h accurate
  double half_disk = g.region_average(Region::carleson({0, 0}, 1.0), height);
  CHECK(std::abs(half_disk - 4.0 / (3.0 * std::numbers::pi)) <= 5e-3);
}

TEST_CASE("midpoint rule is second order on smooth integrands") {
  auto f = [](const Point& p) { return p.t * p.t + std::cos(p.y[0]); };
  double exact = 7.0 / 12.0 + std::sin(1.0);
  Region W = Region::whitney({0, 0}, 1.0);
  double e1 = std::abs(HalfSpaceGrid::build(1, 0.1, 2, 2).region_average(W, f) - exact);
  double e2 = std::abs(HalfSpaceGrid::build(1, 0.05, 2, 2).region_average(W, f) - exact);
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.15));
}

TEST_CASE("boundary averages use cell midpoints") {
  auto g = HalfSpaceGrid::build(1, 0.1, 2.0, 2.0);
  // |y| averaged over Delta(0,1): midpoints +-0.05,...,+-0.95 -> exact 0.5
  double v = g.boundary_average({0, 0}, 1.0, [](const BPoint& y) { return std::abs(y[0]); });
  CHECK(std::abs(v - 0.5) <= 1e-13);
}

TEST_CASE("discrete fields: corner means and gradients are exact on affine data") {
  auto g = HalfSpaceGrid::build(2, 0.25, 1.0, 1.0);
  DiscreteField u(g, "affine");
  for (long id = 0; id < g.node_count(); ++id) {
    Point p = g.node_point(id);
    u.at(id) = 3.0 * p.y[0] - 1.5 * p.y[1] + 2.0 * p.t + 0.5;
  }
  for (long cid : {0L, g.cell_count() / 2, g.cell_count() - 1}) {
    Point c = g.cell_center(cid);
    CHECK(u.cell_value(cid) ==
          doctest::Approx(3.0 * c.y[0] - 1.5 * c.y[1] + 2.0 * c.t + 0.5).epsilon(1e-14));
    auto grad = u.cell_gradient(cid);
    CHECK(grad[0] == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(grad[1] == doctest::Approx(-1.5).epsilon(1e-14));
    CHECK(grad[2] == doctest::Approx(2.0).epsilon(1e-14));
  }
  // nodal height field averages to 3/4 over W(0,1)
  DiscreteField s(HalfSpaceGrid::build(1, 0.1, 2, 2), "height");
  for (long id = 0; id < s.grid.node_count(); ++id) s.at(id) = s.grid.node_point(id).t;
  CHECK(std::abs(s.region_average(Region::whitney({0, 0}, 1.0)) - 0.75) <= 1e-13);
}

TEST_CASE("dyadic window sets") {
  auto g = HalfSpaceGrid::build(1, 0.05, 2.0, 2.0);
  auto ws = DyadicWindowSet::build(g, 1.0, 5, 2.0);
  // levels below 4h are dropped: realized scales 1, 0.5, 0.25
  REQUIRE(ws.scale_r.size() == 3);
  CHECK(ws.scale_r[0] == doctest::Approx(1.0));
  CHECK(ws.scale_r[1] == doctest::Approx(0.5));
  CHECK(ws.scale_r[2] == doctest::Approx(0.25));
  for (const auto& w : ws.windows) {
    // centers on the half-offset lattice
    double frac = (w.x[0] - 0.5 * g.h()) / g.h();
    CHECK(std::abs(frac - std::round(frac)) <= 1e-9);
    // closed ball inside the box
    CHECK(std::abs(w.x[0]) + w.r <= 2.0 + 1e-12);
    // every window resolves
    CHECK(g.cells_in(Region::whitney(w.x, w.r)).size() > 0);
  }
  // finer levels have more windows
  std::array<int, 3> counts{0, 0, 0};
  for (const auto& w : ws.windows) counts[static_cast<std::size_t>(w.level)]++;
  CHECK(counts[0] > 0);
  CHECK(counts[1] > counts[0]);
  CHECK(counts[2] > counts[1]);

  CHECK_THROWS(DyadicWindowSet::build(g, 0.1, 1, 2.0));  // 0.1 = 2h unresolvable
}

TEST_CASE("interval node counts double exactly at half-offset centers") {
  auto g = HalfSpaceGrid::build(1, 0.05, 2.0, 2.0);
  BPoint c{0.025, 0.0};
  auto small = g.boundary_nodes_in(c, 0.5);
  auto big = g.boundary_nodes_in(c, 1.0);
  CHECK(small.size() * 2 == big.size());
}
