#include "dkplab/weights.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dkplab/util.hpp"

namespace dkplab {

namespace {
constexpr double kPi = 3.14159265358979323846;

double radial(int n, const BPoint& z) {
  return (n == 2) ? std::sqrt(z[0] * z[0] + z[1] * z[1]) : std::abs(z[0]);
}
}  // namespace

double Mollifier::phi(const BPoint& z) const {
  double a = radial(n, z);
  if (gaussian) return std::pow(kPi, -0.5 * n) * std::exp(-a * a);
  return bump_profile(a);
}

std::array<double, 2> Mollifier::psi(const BPoint& z) const {
  double a = radial(n, z);
  std::array<double, 2> out{0.0, 0.0};
  if (gaussian) {
    double v = std::pow(kPi, -0.5 * n) * std::exp(-a * a);
    out[0] = -2.0 * z[0] * v;
    if (n == 2) out[1] = -2.0 * z[1] * v;
    return out;
  }
  double d = bump_profile_deriv(a);
  if (d == 0.0 || a < 1e-15) return out;
  out[0] = d * z[0] / a;
  if (n == 2) out[1] = d * z[1] / a;
  return out;
}

double Mollifier::phi_r(const BPoint& dz, double r) const {
  double s = std::pow(r, -n);
  return s * phi({dz[0] / r, dz[1] / r});
}

std::array<double, 2> Mollifier::psi_r(const BPoint& dz, double r) const {
  double s = std::pow(r, -n);
  auto v = psi({dz[0] / r, dz[1] / r});
  return {s * v[0], s * v[1]};
}

Mollifier Mollifier::bump(int n) {
  if (n != 1 && n != 2) throw std::invalid_argument("mollifier: n must be 1 or 2");
  return {n, false};
}

Mollifier Mollifier::gauss(int n) {
  if (n != 1 && n != 2) throw std::invalid_argument("mollifier: n must be 1 or 2");
  return {n, true};
}

namespace {
// reach of the support: exact for the bump, far tail cut for the gaussian
double support_reach(const Mollifier& m, double r) { return m.gaussian ? 12.0 * r : r; }
}  // namespace

double convolve(const BoundaryWeight& w, const Mollifier& m, const BPoint& x, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("convolve: scale must be positive");
  Kahan acc;
  for (long b : w.grid.boundary_nodes_in(x, support_reach(m, r))) {
    BPoint y = w.grid.boundary_point(b);
    acc.add(w.mass[static_cast<std::size_t>(b)] * m.phi_r({x[0] - y[0], x[1] - y[1]}, r));
  }
  return acc.value();
}

std::array<double, 2> convolve_grad(const BoundaryWeight& w, const Mollifier& m, const BPoint& x,
                                    double r) {
  if (!(r > 0.0)) throw std::invalid_argument("convolve: scale must be positive");
  Kahan a0, a1;
  for (long b : w.grid.boundary_nodes_in(x, support_reach(m, r))) {
    BPoint y = w.grid.boundary_point(b);
    auto v = m.psi_r({x[0] - y[0], x[1] - y[1]}, r);
    a0.add(w.mass[static_cast<std::size_t>(b)] * v[0]);
    a1.add(w.mass[static_cast<std::size_t>(b)] * v[1]);
  }
  return {a0.value(), a1.value()};
}

BoundaryWeight weight_from_density(const HalfSpaceGrid& g,
                                   const std::function<double(const BPoint&)>& w) {
  BoundaryWeight out;
  out.grid = g;
  out.mass.resize(static_cast<std::size_t>(g.boundary_count()));
  double hn = std::pow(g.h(), g.n());
  for (long b = 0; b < g.boundary_count(); ++b)
    out.mass[static_cast<std::size_t>(b)] = w(g.boundary_point(b)) * hn;
  out.provenance = "density";
  return out;
}

double doubling_constant(const BoundaryWeight& w, const DyadicWindowSet& ws) {
  const auto& g = w.grid;
  double sup = 0.0;
  for (const auto& win : ws.windows) {
    if (std::abs(win.x[0]) + 2.0 * win.r > g.x_max() + 1e-12 ||
        (g.n() == 2 && std::abs(win.x[1]) + 2.0 * win.r > g.x_max() + 1e-12))
      throw std::invalid_argument("doubling: doubled ball leaves the boundary");
    double m1 = w.ball_mass(win.x, win.r);
    if (!(m1 > 0.0)) throw std::runtime_error("doubling: zero mass on a queried ball");
    sup = std::max(sup, w.ball_mass(win.x, 2.0 * win.r) / m1);
  }
  return sup;
}

namespace {
template <typename F>
double sup_over_node_means(const BoundaryWeight& w, const DyadicWindowSet& ws, F&& stat) {
  const auto& g = w.grid;
  double hn = std::pow(g.h(), g.n());
  double sup = 0.0;
  for (const auto& win : ws.windows) {
    auto nodes = g.boundary_nodes_in(win.x, win.r);
    if (nodes.empty()) throw std::runtime_error("weight analytics: empty ball");
    std::vector<double> vals;
    vals.reserve(nodes.size());
    for (long b : nodes) vals.push_back(w.mass[static_cast<std::size_t>(b)] / hn);
    sup = std::max(sup, stat(vals));
  }
  return sup;
}
}  // namespace

double a_infinity_constant(const BoundaryWeight& w, const DyadicWindowSet& ws) {
  return sup_over_node_means(w, ws, [](const std::vector<double>& vals) {
    Kahan mean, logmean;
    for (double v : vals) {
      if (!(v > 0.0)) throw std::runtime_error("a-infinity: nonpositive weight on a ball");
      mean.add(v);
      logmean.add(std::log(v));
    }
    double cnt = static_cast<double>(vals.size());
    return (mean.value() / cnt) / std::exp(logmean.value() / cnt);
  });
}

double reverse_holder_ratio(const BoundaryWeight& w, double p, const DyadicWindowSet& ws) {
  if (!(p > 1.0)) throw std::invalid_argument("reverse holder: need p > 1");
  return sup_over_node_means(w, ws, [p](const std::vector<double>& vals) {
    Kahan mean, pmean;
    for (double v : vals) {
      mean.add(v);
      pmean.add(std::pow(v, p));
    }
    double cnt = static_cast<double>(vals.size());
    double m = mean.value() / cnt;
    if (!(m > 0.0)) throw std::runtime_error("reverse holder: zero mean on a ball");
    return std::pow(pmean.value() / cnt, 1.0 / p) / m;
  });
}

std::vector<std::pair<double, double>> reverse_holder_profile(const BoundaryWeight& w, double p,
                                                              const DyadicWindowSet& ws) {
  std::vector<std::pair<double, double>> out;
  for (double r0 : ws.scale_r) {
    DyadicWindowSet sub = ws;
    sub.windows.clear();
    for (const auto& win : ws.windows)
      if (win.r <= r0 * (1.0 + 1e-12)) sub.windows.push_back(win);
    out.emplace_back(r0, reverse_holder_ratio(w, p, sub));
  }
  return out;
}

OscillationProfile bmo_vmo_profile(const HalfSpaceGrid& g,
                                   const std::function<double(const BPoint&)>& f,
                                   const DyadicWindowSet& ws) {
  std::vector<double> osc(ws.size(), 0.0);
  parallel_for(ws.size(), [&](std::size_t i) {
    const Window& w = ws.windows[i];
    auto mids = g.boundary_midpoints_in(w.x, w.r);
    if (mids.empty()) return;
    Kahan mean;
    for (const auto& p : mids) mean.add(f(p));
    double mu = mean.value() / static_cast<double>(mids.size());
    Kahan dev;
    for (const auto& p : mids) dev.add(std::abs(f(p) - mu));
    osc[i] = dev.value() / static_cast<double>(mids.size());
  });
  OscillationProfile out;
  for (double v : osc) out.bmo = std::max(out.bmo, v);
  for (double r0 : ws.scale_r) {
    double sup = 0.0;
    for (std::size_t i = 0; i < ws.size(); ++i)
      if (ws.windows[i].r <= r0 * (1.0 + 1e-12)) sup = std::max(sup, osc[i]);
    out.vmo.emplace_back(r0, sup);
  }
  return out;
}

FKPMeasure fkp_measure(const BoundaryWeight& omega, const Mollifier& m,
                       const DyadicWindowSet& ws) {
  FKPMeasure out;
  out.measure.windows = ws;
  out.measure.density.assign(ws.size(), 0.0);
  out.mollifier = m.gaussian ? "gaussian" : "bump";
  out.source = omega.provenance;
  parallel_for(ws.size(), [&](std::size_t i) {
    const Window& w = ws.windows[i];
    double den = convolve(omega, m, w.x, w.r);
    if (!(den > 0.0)) throw std::runtime_error("fkp measure: vanishing smoothed weight");
    auto dv = convolve_grad(omega, m, w.x, w.r);
    double num = dv[0] * dv[0] + dv[1] * dv[1];
    out.measure.density[i] = num / (den * den);
  });
  return out;
}

// --- heat smoothing ----------------------------------------------------------

double HeatFlow::u(const BPoint& x, double t) const {
  if (!(t > 0.0)) throw std::invalid_argument("heat flow: time must be positive");
  const int n = grid.n();
  double norm = std::pow(kPi * t, -0.5 * n);
  Kahan acc;
  for (long b : grid.boundary_nodes_in(x, 12.0 * std::sqrt(t) + grid.h())) {
    BPoint y = grid.boundary_point(b);
    double d0 = x[0] - y[0], d1 = (n == 2) ? x[1] - y[1] : 0.0;
    acc.add(mass[static_cast<std::size_t>(b)] * norm * std::exp(-(d0 * d0 + d1 * d1) / t));
  }
  return acc.value();
}

std::array<double, 2> HeatFlow::grad_u(const BPoint& x, double t) const {
  if (!(t > 0.0)) throw std::invalid_argument("heat flow: time must be positive");
  const int n = grid.n();
  double norm = std::pow(kPi * t, -0.5 * n);
  Kahan a0, a1;
  for (long b : grid.boundary_nodes_in(x, 12.0 * std::sqrt(t) + grid.h())) {
    BPoint y = grid.boundary_point(b);
    double d0 = x[0] - y[0], d1 = (n == 2) ? x[1] - y[1] : 0.0;
    double k = mass[static_cast<std::size_t>(b)] * norm * std::exp(-(d0 * d0 + d1 * d1) / t);
    a0.add(k * (-2.0 * d0 / t));
    if (n == 2) a1.add(k * (-2.0 * d1 / t));
  }
  return {a0.value(), a1.value()};
}

double HeatFlow::smoothed_density(std::size_t i, const BPoint& x) const { return u(x, eps[i]); }

double HeatFlow::smoothed_mass(std::size_t i) const {
  double reach = 2.0 * grid.x_max();
  auto mids = grid.boundary_midpoints_in({0.0, 0.0}, reach);
  double hn = std::pow(grid.h(), grid.n());
  Kahan acc;
  for (const auto& p : mids) acc.add(u(p, eps[i]) * hn);
  return acc.value();
}

namespace {
double carleson_core(const HeatFlow& hf, const BPoint& x0, double s, double shift) {
  const auto& g = hf.grid;
  double t_lo = g.h() * g.h();
  double t_hi = s * s;
  if (t_hi <= t_lo) return 0.0;
  auto mids = g.boundary_midpoints_in(x0, s);
  double hn = std::pow(g.h(), g.n());
  Kahan acc;
  double hi = t_hi;
  while (hi > t_lo) {
    double lo = std::max(t_lo, hi / 2.0);
    double tm = std::sqrt(lo * hi) + shift;  // geometric midpoint of the shell
    Kahan slab;
    for (const auto& p : mids) {
      double uv = hf.u(p, tm);
      if (!(uv > 0.0)) continue;
      auto gv = hf.grad_u(p, tm);
      slab.add((gv[0] * gv[0] + gv[1] * gv[1]) / (uv * uv));
    }
    acc.add(slab.value() * hn * (hi - lo));
    hi = lo;
  }
  return acc.value() / std::pow(s, g.n());
}
}  // namespace

double HeatFlow::carleson_query(const BPoint& x0, double s) const {
  return carleson_core(*this, x0, s, 0.0);
}

double HeatFlow::smoothed_carleson_query(std::size_t i, const BPoint& x0, double s) const {
  return carleson_core(*this, x0, s, eps[i]);
}

HeatFlow heat_smooth_and_carleson(const BoundaryWeight& omega, std::vector<double> eps,
                                  const std::vector<std::pair<BPoint, double>>& queries) {
  HeatFlow hf;
  hf.grid = omega.grid;
  hf.mass = omega.mass;
  std::sort(eps.begin(), eps.end(), std::greater<double>());
  for (double e : eps)
    if (std::sqrt(e) < 2.0 * hf.grid.h())
      throw std::invalid_argument("heat flow: smoothing time below grid resolution");
  hf.eps = std::move(eps);
  for (const auto& [x0, s] : queries) hf.C_u = std::max(hf.C_u, hf.carleson_query(x0, s));
  return hf;
}

}  // namespace dkplab
