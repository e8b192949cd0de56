#include "doctest.h"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "dkplab/solver.hpp"
#include "dkplab/weights.hpp"

using namespace dkplab;

namespace {
constexpr double kPi = std::numbers::pi;

BoundaryWeight step_weight(const HalfSpaceGrid& g, double jump) {
  return weight_from_density(g, [jump](const BPoint& y) { return y[0] < 0.0 ? 1.0 : 1.0 + jump; });
}
}  // namespace

TEST_CASE("mollifier profiles") {
  auto b = Mollifier::bump(1);
  CHECK(b.phi({0.0, 0.0}) == 1.0);
  CHECK(b.phi({0.3, 0.0}) == 1.0);
  CHECK(b.phi({1.0, 0.0}) == 0.0);
  CHECK(b.phi({1.7, 0.0}) == 0.0);
  CHECK(b.psi({0.0, 0.0})[0] == 0.0);
  CHECK(b.psi({0.7, 0.0})[0] < 0.0);   // falling flank
  CHECK(b.psi({-0.7, 0.0})[0] > 0.0);  // odd
  CHECK(b.psi({0.7, 0.0})[0] == -b.psi({-0.7, 0.0})[0]);

  auto g2 = Mollifier::gauss(2);
  CHECK(g2.phi({0.0, 0.0}) == doctest::Approx(1.0 / kPi).epsilon(1e-14));
  // phi_r keeps unit mass for the gaussian: lattice sum against Lebesgue
  auto grid = HalfSpaceGrid::build(1, 0.05, 4.0, 4.0);
  auto leb = weight_from_density(grid, [](const BPoint&) { return 1.0; });
  CHECK(convolve(leb, Mollifier::gauss(1), {0.0, 0.0}, 0.25) ==
        doctest::Approx(1.0).epsilon(1e-10));
  // the bump carries mass 3/2 in one dimension (plateau + two flanks)
  CHECK(convolve(leb, Mollifier::bump(1), {0.0, 0.0}, 1.0) ==
        doctest::Approx(1.5).epsilon(1e-6));
  CHECK_THROWS_AS(convolve(leb, b, {0.0, 0.0}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(Mollifier::bump(3), std::invalid_argument);
}

TEST_CASE("doubling constants of model weights") {
  auto g = HalfSpaceGrid::build(1, 0.05, 4.0, 4.0);
  auto ws = DyadicWindowSet::build(g, 0.5, 2, 3.0);

  auto leb = weight_from_density(g, [](const BPoint&) { return 1.0; });
  CHECK(doubling_constant(leb, ws) == doctest::Approx(2.0).epsilon(1e-12));

  // |y|^{1/2}: mass(r) = (4/3) r^{3/2} around the tip, so doubling 2^{3/2}
  auto root = weight_from_density(g, [](const BPoint& y) { return std::sqrt(std::abs(y[0])); });
  CHECK(doubling_constant(root, ws) == doctest::Approx(std::pow(2.0, 1.5)).epsilon(0.02));

  // balls pushed against the truncation edge are refused
  auto tight = DyadicWindowSet::build(g, 0.5, 1, 4.0);
  CHECK_THROWS_AS(doubling_constant(leb, tight), std::invalid_argument);

  // a weight that dies on a queried ball has no doubling constant
  auto off = weight_from_density(g, [](const BPoint& y) { return y[0] > 2.0 ? 1.0 : 0.0; });
  CHECK_THROWS_AS(doubling_constant(off, ws), std::runtime_error);
}

TEST_CASE("doubling in two horizontal dimensions") {
  auto g = HalfSpaceGrid::build(2, 0.05, 4.0, 4.0);
  auto leb = weight_from_density(g, [](const BPoint&) { return 1.0; });
  // single coarse level so the lattice circle is well resolved
  auto ws = DyadicWindowSet::build(g, 1.6, 1, 2.4);
  REQUIRE(ws.size() > 0);
  CHECK(doubling_constant(leb, ws) == doctest::Approx(4.0).epsilon(0.02));
}

TEST_CASE("a-infinity and reverse holder flag the step, pass the constant") {
  auto g = HalfSpaceGrid::build(1, 0.05, 8.0, 8.0);
  auto ws = DyadicWindowSet::build(g, 3.2, 1, 8.0);

  auto flat = weight_from_density(g, [](const BPoint&) { return 0.37; });
  CHECK(a_infinity_constant(flat, ws) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(reverse_holder_ratio(flat, 2.0, ws) == doctest::Approx(1.0).epsilon(1e-12));

  auto step = step_weight(g, 1.0);
  // balanced split between 1 and 2: arithmetic 3/2 against geometric sqrt 2
  CHECK(a_infinity_constant(step, ws) == doctest::Approx(1.5 / std::sqrt(2.0)).epsilon(0.01));
  // and quadratic mean sqrt(5/2)
  CHECK(reverse_holder_ratio(step, 2.0, ws) ==
        doctest::Approx(std::sqrt(2.5) / 1.5).epsilon(0.01));

  // power means order the ratios
  double last = 1.0;
  for (double p : {1.5, 2.0, 3.0}) {
    double v = reverse_holder_ratio(step, p, ws);
    CHECK(v >= last);
    last = v;
  }

  auto dead = weight_from_density(g, [](const BPoint&) { return 0.0; });
  CHECK_THROWS_AS(a_infinity_constant(dead, ws), std::runtime_error);
  CHECK_THROWS_AS(reverse_holder_ratio(step, 1.0, ws), std::invalid_argument);
}

TEST_CASE("reverse holder profile settles for a smooth weight") {
  auto g = HalfSpaceGrid::build(1, 0.025, 4.0, 4.0);
  auto w = weight_from_density(g, [](const BPoint& y) { return 2.0 + std::sin(y[0]); });
  auto ws = DyadicWindowSet::build(g, 0.8, 3, 3.0);
  auto prof = reverse_holder_profile(w, 2.0, ws);
  REQUIRE(prof.size() == 3);
  // scales shrink front to back; the ratio decays toward 1 with them
  CHECK(prof.front().first > prof.back().first);
  CHECK(prof.back().second < prof.front().second);
  CHECK(prof.back().second >= 1.0);
  CHECK(prof.back().second < 1.005);
}

TEST_CASE("bmo and vmo profiles") {
  auto g = HalfSpaceGrid::build(1, 0.025, 4.0, 4.0);
  auto ws = DyadicWindowSet::build(g, 0.8, 3, 3.0);

  auto prof = bmo_vmo_profile(g, [](const BPoint&) { return 3.7; }, ws);
  CHECK(prof.bmo == 0.0);

  // a jump of height a oscillates a/2 at every scale
  double a = 0.8;
  auto step = bmo_vmo_profile(g, [a](const BPoint& y) { return y[0] < 0.0 ? 0.0 : a; }, ws);
  CHECK(step.bmo == doctest::Approx(0.5 * a).epsilon(0.02));
  REQUIRE(step.vmo.size() == 3);
  CHECK(step.vmo.back().second > 0.4 * a);  // no decay: the jump survives all scales

  // a smooth logarithm drains its oscillation as the scale falls
  auto smooth =
      bmo_vmo_profile(g, [](const BPoint& y) { return -std::log1p(y[0] * y[0]); }, ws);
  CHECK(smooth.vmo.back().second <= 0.5 * smooth.vmo.front().second);
  CHECK(smooth.vmo.back().second > 0.0);
}

TEST_CASE("vmo decay travels with the reverse holder slide") {
  // one fixture, both diagnostics: log w smooth => vmo falls and rh_2 -> 1
  auto g = HalfSpaceGrid::build(1, 0.025, 4.0, 4.0);
  auto w = weight_from_density(g, [](const BPoint& y) { return std::exp(0.3 * std::sin(y[0])); });
  auto ws = DyadicWindowSet::build(g, 0.8, 3, 3.0);
  auto osc = bmo_vmo_profile(g, [](const BPoint& y) { return 0.3 * std::sin(y[0]); }, ws);
  auto rh = reverse_holder_profile(w, 2.0, ws);
  CHECK(osc.vmo.back().second < 0.6 * osc.vmo.front().second);
  CHECK(rh.back().second - 1.0 < 0.5 * (rh.front().second - 1.0));
}

TEST_CASE("smoothed-measure densities of model weights") {
  auto g = HalfSpaceGrid::build(1, 0.05, 4.0, 4.0);
  auto ws = DyadicWindowSet::build(g, 0.5, 2, 1.0);
  auto phi = Mollifier::bump(1);

  // lebesgue smooths to a constant: the gradient is rounding dust
  auto leb = weight_from_density(g, [](const BPoint&) { return 1.0; });
  auto flat = fkp_measure(leb, phi, ws);
  for (double v : flat.measure.density) CHECK(v <= 1e-20);
  CHECK(flat.mollifier == "bump");
  CHECK(flat.source == "density");

  // scaling the weight leaves the density alone
  auto w = weight_from_density(g, [](const BPoint& y) { return 2.0 + std::tanh(y[0]); });
  auto w7 = weight_from_density(g, [](const BPoint& y) { return 7.0 * (2.0 + std::tanh(y[0])); });
  auto m1 = fkp_measure(w, phi, ws);
  auto m7 = fkp_measure(w7, phi, ws);
  for (std::size_t i = 0; i < ws.size(); ++i)
    CHECK(m7.measure.density[i] == doctest::Approx(m1.measure.density[i]).epsilon(1e-12));

  // a weight with a hole under some window has no finite density there
  auto off = weight_from_density(g, [](const BPoint& y) { return y[0] > 2.0 ? 1.0 : 0.0; });
  CHECK_THROWS_AS(fkp_measure(off, phi, ws), std::runtime_error);
}

TEST_CASE("step weight smoothed density is scale free") {
  auto g = HalfSpaceGrid::build(1, 0.0125, 2.0, 2.0);
  auto step = step_weight(g, 1.0);
  auto phi = Mollifier::bump(1);
  // nu(x, r) = |step * psi_r|^2 / |step * phi_r|^2 at the jump is
  // r-independent in the continuum; the lattice only dents it a little
  auto nu_at = [&](double r) {
    auto dv = convolve_grad(step, phi, {0.00625, 0.0}, r);
    double den = convolve(step, phi, {0.00625, 0.0}, r);
    return dv[0] * dv[0] / (den * den);
  };
  double coarse = nu_at(0.25);
  double fine = nu_at(0.125);
  CHECK(coarse > 0.0);
  CHECK(fine / coarse == doctest::Approx(1.0).epsilon(0.1));

  // power weight |y|^{1/2} is homogeneous, so nu is constant along rays
  // (x, r) -> (lambda x, lambda r); at the tip itself it cancels by symmetry
  auto root = weight_from_density(g, [](const BPoint& y) { return std::sqrt(std::abs(y[0])); });
  auto nu_root = [&](double x, double r) {
    auto dv = convolve_grad(root, phi, {x, 0.0}, r);
    double den = convolve(root, phi, {x, 0.0}, r);
    return dv[0] * dv[0] / (den * den);
  };
  CHECK(nu_root(0.5, 0.5) > 0.1);
  CHECK(nu_root(0.25, 0.25) / nu_root(0.5, 0.5) == doctest::Approx(1.0).epsilon(0.02));
  CHECK(nu_root(0.125, 0.125) / nu_root(0.25, 0.25) == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("smoothed density of an elliptic-measure weight decays with scale") {
  auto g = HalfSpaceGrid::build(1, 0.05, 4.0, 4.0);
  auto op = AssembledOperator::assemble(make_identity_field(1), g);
  auto green = green_function(op, Point{{0.0, 0.0}, 1.0});
  auto ws = DyadicWindowSet::build(g, 0.8, 3, 1.0);
  REQUIRE(ws.scale_r.size() == 3);
  auto fkp = fkp_measure(green.kappa, Mollifier::bump(1), ws);
  auto trace = fkp.measure.trace_profile();
  REQUIRE(trace.size() >= 2);
  // an analytic kernel is almost flat at small scales: normalized box masses
  // thin out toward the fine end of the sweep
  CHECK(trace.back().second < trace.front().second);
  CHECK(trace.front().second > 0.0);
}

TEST_CASE("heat extension of a point mass") {
  auto g = HalfSpaceGrid::build(1, 0.05, 2.0, 2.0);
  HeatFlow hf;
  hf.grid = g;
  hf.mass.assign(static_cast<std::size_t>(g.boundary_count()), 0.0);
  hf.mass[static_cast<std::size_t>(g.boundary_count() / 2)] = 1.0;  // node at y = 0
  hf.eps = {0.16};

  // peak value and conserved mass of the gaussian kernel
  CHECK(hf.u({0.0, 0.0}, 0.16) == doctest::Approx(std::pow(kPi * 0.16, -0.5)).epsilon(1e-12));
  CHECK(hf.smoothed_mass(0) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(hf.smoothed_density(0, {0.0, 0.0}) == hf.u({0.0, 0.0}, 0.16));
  // odd symmetry of the horizontal gradient
  CHECK(hf.grad_u({0.3, 0.0}, 0.16)[0] == doctest::Approx(-hf.grad_u({-0.3, 0.0}, 0.16)[0])
                                               .epsilon(1e-12));
  CHECK_THROWS_AS(hf.u({0.0, 0.0}, 0.0), std::invalid_argument);

  // translating the mass translates the extension exactly
  HeatFlow ht = hf;
  ht.mass.assign(ht.mass.size(), 0.0);
  ht.mass[static_cast<std::size_t>(g.boundary_count() / 2 + 8)] = 1.0;  // y = 0.4
  for (double x : {-0.3, 0.1, 0.75})
    CHECK(ht.u({x + 0.4, 0.0}, 0.09) == doctest::Approx(hf.u({x, 0.0}, 0.09)).epsilon(1e-12));
}

TEST_CASE("carleson functional of the heat extension") {
  auto g = HalfSpaceGrid::build(1, 0.05, 4.0, 4.0);
  auto step = step_weight(g, 1.0);

  std::vector<std::pair<BPoint, double>> queries;
  for (double c : {-1.0, -0.5, 0.0, 0.5, 1.0})
    for (double s : {0.5, 1.0, 2.0}) queries.push_back({{c, 0.0}, s});

  auto hf = heat_smooth_and_carleson(step, {0.04}, queries);
  CHECK(hf.C_u > 0.0);
  CHECK(std::isfinite(hf.C_u));

  // smoothing by eps never inflates the functional beyond the sqrt-2 box
  // factor once the ball beats the smoothing scale
  for (const auto& [x0, s] : queries) {
    if (s < std::sqrt(hf.eps[0])) continue;
    double sm = hf.smoothed_carleson_query(0, x0, s);
    CHECK(sm <= std::sqrt(2.0) * 1.05 * hf.C_u);
  }

  // a flat weight has no logarithmic gradient at all
  auto leb = weight_from_density(g, [](const BPoint&) { return 1.0; });
  auto calm = heat_smooth_and_carleson(leb, {0.04}, {{{0.0, 0.0}, 1.0}});
  CHECK(calm.C_u <= 1e-12 * hf.C_u);

  CHECK_THROWS_AS(heat_smooth_and_carleson(step, {1e-6}, queries), std::invalid_argument);
}
