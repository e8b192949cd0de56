#include "doctest.h"

#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>

#include "dkplab/energies.hpp"
#include "dkplab/solver.hpp"
#include "dkplab/weights.hpp"

using namespace dkplab;

namespace {

DiscreteField fill(const HalfSpaceGrid& g, const std::function<double(const Point&)>& f,
                   std::string label = "fixture") {
  DiscreteField u(g, std::move(label));
  for (long id = 0; id < g.node_count(); ++id) u.at(id) = f(g.node_point(id));
  return u;
}

}  // namespace

TEST_CASE("affine states give exact energy splits") {
  auto g = HalfSpaceGrid::build(1, 0.25, 2.0, 2.0);

  // u = t: all the energy is vertical and the slope accounts for all of it
  auto us = fill(g, [](const Point& p) { return p.t; });
  auto rec = local_energies(us, {0.0, 0.0}, 1.0);
  CHECK(rec.E == 1.0);
  CHECK(rec.lambda == 1.0);
  CHECK(rec.E_i[0] == 0.0);
  CHECK(rec.J == 0.0);
  CHECK(rec.beta == 0.0);
  CHECK(rec.beta_i[0] == 0.0);

  // u = y: all the energy is horizontal and none of it is explained
  auto uy = fill(g, [](const Point& p) { return p.y[0]; });
  rec = local_energies(uy, {0.0, 0.0}, 1.0);
  CHECK(rec.E == 1.0);
  CHECK(rec.E_i[0] == 1.0);
  CHECK(rec.lambda == 0.0);
  CHECK(rec.J == 1.0);
  CHECK(rec.beta == 1.0);
  CHECK(rec.beta_i[0] == 1.0);

  // u = t + eps y: beta = eps^2 / (1 + eps^2), all of it horizontal
  double eps = 0.1;
  auto ut = fill(g, [eps](const Point& p) { return p.t + eps * p.y[0]; });
  rec = local_energies(ut, {0.0, 0.0}, 1.0);
  double want = eps * eps / (1.0 + eps * eps);
  CHECK(rec.lambda == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(rec.beta == doctest::Approx(want).epsilon(1e-12));
  CHECK(rec.beta_i[0] == doctest::Approx(want).epsilon(1e-12));

  // general constant gradient (a, b): J = a^2, beta = a^2 / (a^2 + b^2)
  double a = 0.3, b = 0.7;
  auto ug = fill(g, [a, b](const Point& p) { return a * p.y[0] + b * p.t; });
  rec = local_energies(ug, {0.5, 0.0}, 0.5);
  CHECK(rec.E == doctest::Approx(a * a + b * b).epsilon(1e-13));
  CHECK(rec.lambda == doctest::Approx(b).epsilon(1e-13));
  CHECK(rec.J == doctest::Approx(a * a).epsilon(1e-10));
  CHECK(rec.beta == doctest::Approx(a * a / (a * a + b * b)).epsilon(1e-10));

  // beta is blind to amplitude
  auto ug3 = fill(g, [a, b](const Point& p) { return 3.0 * (a * p.y[0] + b * p.t); });
  auto rec3 = local_energies(ug3, {0.5, 0.0}, 0.5);
  CHECK(rec3.beta == doctest::Approx(rec.beta).epsilon(1e-12));
  CHECK(rec3.beta_i[0] == doctest::Approx(rec.beta_i[0]).epsilon(1e-12));

  CHECK_THROWS_AS(local_energies(us, {0.0, 0.0}, 0.1), std::invalid_argument);
  auto uc = fill(g, [](const Point&) { return 4.0; });
  CHECK_THROWS_AS(local_energies(uc, {0.0, 0.0}, 1.0), std::runtime_error);
}

TEST_CASE("n = 2 splits the horizontal energy by direction") {
  auto g = HalfSpaceGrid::build(2, 0.25, 1.5, 1.5);
  auto u = fill(g, [](const Point& p) { return 0.3 * p.y[0] + 0.4 * p.y[1] + p.t; });
  auto rec = local_energies(u, {0.0, 0.0}, 1.0);
  double E = 0.09 + 0.16 + 1.0;
  CHECK(rec.E == doctest::Approx(E).epsilon(1e-13));
  CHECK(rec.E_i[0] == doctest::Approx(0.09).epsilon(1e-13));
  CHECK(rec.E_i[1] == doctest::Approx(0.16).epsilon(1e-13));
  CHECK(rec.lambda == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(rec.beta == doctest::Approx(0.25 / E).epsilon(1e-10));
  CHECK(rec.beta_i[0] + rec.beta_i[1] == doctest::Approx(rec.beta).epsilon(1e-10));
}

TEST_CASE("green function sweep keeps the energy identities") {
  auto g = HalfSpaceGrid::build(1, 0.05, 4.0, 4.0);
  auto A = make_dkp_sqrt_field(1, 0.2);
  auto op = AssembledOperator::assemble(A, g);
  auto green = green_function(op, Point{{0.0, 0.0}, 2.0});
  auto ws = DyadicWindowSet::build(g, 0.5, 2, 1.0);
  REQUIRE(ws.size() > 10);

  for (const auto& w : ws.windows) {
    auto rec = local_energies(green.G, w.x, w.r);
    CHECK(rec.E > 0.0);
    // the decomposition is assembled so these hold to the last bit
    CHECK(rec.beta_i[0] <= rec.beta);
    CHECK(rec.beta >= 0.0);
    CHECK(rec.beta <= 1.0);
    CHECK(rec.J == doctest::Approx(rec.E - rec.lambda * rec.lambda).epsilon(1e-10));
  }

  auto prof = beta_carleson_profile(green.G, ws, Point{{0.0, 0.0}, 2.0});
  CHECK(prof.beta.density.size() == ws.size());
  REQUIRE(prof.beta_i.size() == 1);
  for (std::size_t i = 0; i < ws.size(); ++i) {
    CHECK(prof.beta_i[0].density[i] <= prof.beta.density[i]);
    CHECK(prof.beta.density[i] >= 0.0);
  }
}

TEST_CASE("beta profile guards") {
  // dyadic pitch: every node coordinate is exact, so u = t really is affine
  // in floating point and the zeros below are bit-for-bit
  auto g = HalfSpaceGrid::build(1, 0.0625, 4.0, 4.0);
  auto u = fill(g, [](const Point& p) { return p.t; });
  auto ws = DyadicWindowSet::build(g, 0.5, 2, 1.0);

  // vertical flow carries no beta at all
  auto prof = beta_carleson_profile(u, ws, std::nullopt);
  for (double v : prof.beta.density) CHECK(v == 0.0);
  for (double v : prof.beta_i[0].density) CHECK(v == 0.0);

  // a pole low enough sits inside the safety margin of some window
  CHECK_THROWS_AS(beta_carleson_profile(u, ws, Point{{0.0, 0.0}, 0.5}), std::invalid_argument);

  // a sweep built for a wider box leaks through these truncation faces
  auto gw = HalfSpaceGrid::build(1, 0.0625, 8.0, 8.0);
  auto wide = DyadicWindowSet::build(gw, 2.0, 1, 8.0);
  CHECK_THROWS_AS(beta_carleson_profile(u, wide, std::nullopt), std::invalid_argument);
}

TEST_CASE("strip profile is nearly flow-aligned near the bottom") {
  auto g = HalfSpaceGrid::build(1, 0.025, 8.0, 8.0);
  double k = std::numbers::pi / 16.0;
  auto u = fill(g, [k](const Point& p) { return std::cos(k * p.y[0]) * std::sinh(k * p.t); });
  auto ws = DyadicWindowSet::build(g, 0.5, 3, 1.0);
  auto prof = beta_carleson_profile(u, ws, std::nullopt);
  double norm = prof.beta.norm_on({0.0, 0.0}, 1.0);
  CHECK(norm > 0.0);
  CHECK(norm <= 1e-3);

  // the decay fit has one point per realized scale and a positive exponent
  auto fit = eta_fit(prof.beta, {0.0, 0.0}, 1.0, {1.0, 0.5, 0.25, 0.125, 0.0625});
  CHECK(fit.points.size() == 5);
  CHECK(fit.eta > 0.0);
  CHECK(fit.residual >= 0.0);
}

TEST_CASE("beta norm responds to the coefficient structure") {
  auto g = HalfSpaceGrid::build(1, 0.05, 4.0, 4.0);
  Point pole{{0.0, 0.0}, 2.0};
  auto ws = DyadicWindowSet::build(g, 0.5, 2, 1.0);
  auto norm_of = [&](const EllipticMatrixField& A) {
    auto op = AssembledOperator::assemble(A, g);
    auto green = green_function(op, pole);
    auto prof = beta_carleson_profile(green.G, ws, pole);
    return prof.beta.norm_on({0.0, 0.0}, 1.0);
  };

  double flat = norm_of(make_identity_field(1));
  CHECK(flat > 0.0);

  // t-only perturbations barely move the norm (they can lower it: pumping
  // vertical conductivity near the bottom flattens the horizontal profile)
  for (double eps : {0.05, 0.2}) {
    double ratio = norm_of(make_dkp_sqrt_field(1, eps)) / flat;
    CHECK(ratio > 0.5);
    CHECK(ratio < 2.0);
  }

  // y-oscillating coefficients force extra horizontal energy into the flow
  CHECK(norm_of(make_sin_offdiag_field(1, 0.4, 2.0)) > 1.2 * flat);
}

TEST_CASE("smoothed-measure probe on a trivial flow") {
  auto g = HalfSpaceGrid::build(1, 0.05, 4.0, 4.0);
  auto u = fill(g, [](const Point& p) { return p.t; }, "flow");
  auto omega = weight_from_density(g, [](const BPoint&) { return 1.0; });
  auto A = make_identity_field(1);
  auto phi = Mollifier::bump(1);
  auto ws = DyadicWindowSet::build(g, 0.5, 2, 1.0);
  Point pole{{0.0, 0.0}, 1e6};

  auto tab = claim_4_2_probe(A, u, omega, pole, phi, ws);
  REQUIRE(tab.rows.size() == ws.size());
  for (const auto& row : tab.rows) {
    // flat weight: the smoothed gradient cancels to rounding dust
    CHECK(row.lhs <= 1e-20);
    CHECK(row.nu_density <= 1e-20);
    // identity coefficients and vertical flow: the bound side is exactly zero
    CHECK(row.rhs == 0.0);
    CHECK(row.rhs_norm == 0.0);
  }
}

TEST_CASE("smoothed-measure probe against a real green function") {
  auto g = HalfSpaceGrid::build(1, 0.05, 8.0, 8.0);
  Point pole{{0.0, 0.0}, 4.0};
  auto A = make_identity_field(1);
  auto op = AssembledOperator::assemble(A, g);
  auto green = green_function(op, pole);
  auto phi = Mollifier::bump(1);
  auto ws = DyadicWindowSet::build(g, 1.0, 2, 1.5);
  REQUIRE(ws.size() > 3);

  auto tab = claim_4_2_probe(A, green.G, green.kappa, pole, phi, ws);
  for (const auto& row : tab.rows) {
    CHECK(row.lhs >= 0.0);
    CHECK(row.rhs > 0.0);
    CHECK(std::isfinite(row.ratio));
    CHECK(std::isfinite(row.ratio_norm));
  }
  CHECK(tab.max_ratio > 0.0);
  CHECK(tab.max_ratio < 100.0);
  CHECK(tab.max_ratio_norm > 0.0);
  CHECK(tab.max_ratio_norm < 100.0);

  // a pole close to a window trips the separation guard
  auto low = DyadicWindowSet::build(g, 1.0, 1, 1.5);
  CHECK_THROWS_AS(claim_4_2_probe(A, green.G, green.kappa, Point{{0.0, 0.0}, 2.0}, phi, low),
                  std::invalid_argument);
}
