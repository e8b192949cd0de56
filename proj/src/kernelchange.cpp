#include "dkplab/kernelchange.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "dkplab/util.hpp"
#include "dkplab/weights.hpp"

namespace dkplab {

namespace {

void require_face_margin(const HalfSpaceGrid& g, const BPoint& c, double r) {
  double limit = g.x_max() - 2.0 * g.h() + 1e-12;
  if (std::abs(c[0]) + r > limit || (g.n() == 2 && std::abs(c[1]) + r > limit))
    throw std::invalid_argument("kernel function: window too close to the lateral faces");
}

double value_at(const DiscreteField& f, long bottom, long level) {
  return f.at(level * f.grid.hcount() + bottom);
}

// quotient of two fields along the window at one height, with positivity guard
std::vector<double> quotient_at(const DiscreteField& num, const DiscreteField& den,
                                const std::vector<long>& nodes, long level) {
  std::vector<double> out(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    double a = value_at(num, nodes[i], level);
    double b = value_at(den, nodes[i], level);
    if (!(a > 0.0) || !(b > 0.0))
      throw std::runtime_error("kernel function: nonpositive solution value in the window");
    out[i] = a / b;
  }
  return out;
}

void finish_band(KernelFunction& k) {
  double c = 1.0;
  for (std::size_t i = 0; i < k.H.size(); ++i)
    c = std::max({c, k.H[i] / k.ref[i], k.ref[i] / k.H[i]});
  k.c_emp = c;
  double rmin = *std::min_element(k.ref.begin(), k.ref.end());
  double rmax = *std::max_element(k.ref.begin(), k.ref.end());
  k.band_low = rmin / c;
  k.band_high = rmax * c;
}

double rh2_ball(const BoundaryWeight& w, const BPoint& x, double r) {
  auto nodes = w.grid.boundary_nodes_in(x, r);
  if (nodes.empty()) throw std::runtime_error("pole change: empty ball in the sweep");
  Kahan mean, sq;
  for (long b : nodes) {
    double v = w.mass[static_cast<std::size_t>(b)];
    mean.add(v);
    sq.add(v * v);
  }
  double cnt = static_cast<double>(nodes.size());
  double m = mean.value() / cnt;
  if (!(m > 0.0)) throw std::runtime_error("pole change: kernel vanishes on a ball");
  return std::sqrt(sq.value() / cnt) / m;
}

}  // namespace

double KernelFunction::min_H() const { return *std::min_element(H.begin(), H.end()); }
double KernelFunction::max_H() const { return *std::max_element(H.begin(), H.end()); }

KernelFunction kernel_function(const AssembledOperator& op, const Point& X0, const Point& X1,
                               const BPoint& xw, double rw) {
  const auto& g = op.grid();
  if (!(rw >= 4.0 * g.h()))
    throw std::invalid_argument("kernel function: window below the resolvable scale");
  require_face_margin(g, xw, rw);
  if (g.ct() < 4) throw std::invalid_argument("kernel function: box too shallow");

  auto green0 = green_function(op, X0);
  bool same_pole = g.nearest_node(X0) == g.nearest_node(X1);
  auto green1 = same_pole ? green0 : green_function(op, X1);

  for (const Point& p : {green0.pole, green1.pole}) {
    double d = bdist(g.n(), p.y, xw);
    if (d * d + p.t * p.t < 4.0 * rw * rw * (1.0 - 1e-12))
      throw std::invalid_argument("kernel function: pole inside the doubled window");
  }
  double tmin = std::min(green0.pole.t, green1.pole.t);
  if (tmin < 10.0 * g.h() * (1.0 - 1e-12))
    throw std::invalid_argument("kernel function: poles too low for the reference height");

  KernelFunction k;
  k.nodes = g.boundary_nodes_in(xw, rw);
  k.z.reserve(k.nodes.size());
  for (long b : k.nodes) k.z.push_back(g.boundary_point(b));
  k.delta = 2.0 * g.h();

  k.H = quotient_at(green0.G, green1.G, k.nodes, 2);
  auto coarse = quotient_at(green0.G, green1.G, k.nodes, 4);
  for (std::size_t i = 0; i < k.H.size(); ++i)
    k.richardson = std::max(k.richardson, std::abs(k.H[i] - coarse[i]) / k.H[i]);
  if (k.richardson > 0.05)
    throw std::runtime_error("kernel function: quotient not stabilized at the grid scale");

  long jref = std::clamp(std::lround(tmin / 10.0 / g.h()), 1l, g.ct() - 1);
  k.ref = quotient_at(green0.G, green1.G, k.nodes, jref);
  finish_band(k);
  return k;
}

KernelFunction kernel_function_infinity(const AssembledOperator& op, const InfinityResult& inf,
                                        const Point& X0, double kappa,
                                        std::optional<std::pair<BPoint, double>> window) {
  const auto& g = op.grid();
  if (!inf.converged)
    throw std::invalid_argument("kernel function: pole-at-infinity profile unavailable");
  if (!(kappa > 1.0)) throw std::invalid_argument("kernel function: kappa must exceed one");
  if (g.ct() < 4) throw std::invalid_argument("kernel function: box too shallow");

  auto green = green_function(op, X0);
  const Point pole = green.pole;
  if (pole.t < 4.0 * g.h() * (1.0 - 1e-12))
    throw std::invalid_argument("kernel function: pole too low for the reference height");

  BPoint c = pole.y;
  double rw;
  if (window) {
    c = window->first;
    rw = window->second;
    if (bdist(g.n(), c, pole.y) + rw > 5.0 * kappa * pole.t * (1.0 + 1e-12))
      throw std::invalid_argument("kernel function: window leaves the kappa reach");
  } else {
    rw = 5.0 * pole.t;
    double limit = g.x_max() - 2.0 * g.h();
    rw = std::min(rw, limit - std::abs(c[0]));
    if (g.n() == 2) rw = std::min(rw, limit - std::abs(c[1]));
  }
  if (!(rw >= 4.0 * g.h()))
    throw std::invalid_argument("kernel function: window below the resolvable scale");
  require_face_margin(g, c, rw);

  KernelFunction k;
  k.nodes = g.boundary_nodes_in(c, rw);
  k.z.reserve(k.nodes.size());
  for (long b : k.nodes) k.z.push_back(g.boundary_point(b));
  k.delta = 2.0 * g.h();

  k.H = quotient_at(green.G, inf.U, k.nodes, 2);
  auto coarse = quotient_at(green.G, inf.U, k.nodes, 4);
  for (std::size_t i = 0; i < k.H.size(); ++i)
    k.richardson = std::max(k.richardson, std::abs(k.H[i] - coarse[i]) / k.H[i]);
  if (k.richardson > 0.05)
    throw std::runtime_error("kernel function: quotient not stabilized at the grid scale");

  // constant reference G(X0, (x0, t0/4)) / U(X0)
  long jq = std::clamp(std::lround(pole.t / 4.0 / g.h()), 1l, g.ct() - 1);
  long bq = g.nearest_node(Point{pole.y, 0.0});  // bottom node under the pole
  double qnum = value_at(green.G, bq, jq);
  double qden = inf.U.at(g.nearest_node(pole));
  if (!(qnum > 0.0) || !(qden > 0.0))
    throw std::runtime_error("kernel function: degenerate band reference");
  k.ref.assign(k.H.size(), qnum / qden);
  finish_band(k);
  return k;
}

HolderFit holder_shape(const KernelFunction& k, double t0) {
  HolderFit fit;
  if (!(t0 > 0.0) || k.H.size() < 2) return fit;
  // cap the pair count: stride-subsample the window deterministically
  std::size_t stride = 1 + k.H.size() / 400;
  std::vector<std::size_t> pick;
  for (std::size_t i = 0; i < k.H.size(); i += stride) pick.push_back(i);

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::vector<std::pair<double, double>> logs;
  for (std::size_t a = 0; a < pick.size(); ++a) {
    for (std::size_t b = a + 1; b < pick.size(); ++b) {
      std::size_t i = pick[a], j = pick[b];
      double d = bdist(2, k.z[i], k.z[j]);
      if (!(d > 0.0) || d >= t0 / 4.0) continue;
      double diff = std::abs(k.H[i] - k.H[j]);
      if (!(diff > 0.0)) continue;
      logs.emplace_back(std::log(d / t0), std::log(diff));
    }
  }
  fit.pairs = static_cast<long>(logs.size());
  if (logs.size() < 2) return fit;
  for (auto [lx, ly] : logs) {
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  double m = static_cast<double>(logs.size());
  double det = m * sxx - sx * sx;
  if (det == 0.0) return fit;
  fit.gamma = (m * sxy - sx * sy) / det;
  double intercept = (sy * sxx - sx * sxy) / det;
  fit.c = std::exp(intercept);
  double rss = 0.0;
  for (auto [lx, ly] : logs) {
    double e = ly - (fit.gamma * lx + intercept);
    rss += e * e;
  }
  fit.residual = std::sqrt(rss / m);
  return fit;
}

std::vector<QuotientBand> comparison_bands(const DiscreteField& u, const DiscreteField& v,
                                           const DyadicWindowSet& ws) {
  const auto& g = u.grid;
  if (v.grid.node_count() != g.node_count())
    throw std::invalid_argument("comparison bands: fields on different grids");
  for (const auto& w : ws.windows) {
    if (std::abs(w.x[0]) + w.r > g.x_max() + 1e-12 ||
        (g.n() == 2 && std::abs(w.x[1]) + w.r > g.x_max() + 1e-12))
      throw std::invalid_argument("comparison bands: window leaves the box");
  }
  std::vector<QuotientBand> out(ws.size());
  parallel_for(ws.size(), [&](std::size_t i) {
    const Window& w = ws.windows[i];
    QuotientBand band;
    band.x = w.x;
    band.r = w.r;
    long ref_node = g.nearest_node(Point{w.x, w.r});
    double vr = v.at(ref_node);
    if (!(vr > 0.0)) throw std::runtime_error("comparison bands: corkscrew value vanishes");
    band.at_corkscrew = u.at(ref_node) / vr;
    auto cells = g.cells_in(Region::carleson(w.x, w.r));
    if (cells.empty()) throw std::invalid_argument("comparison bands: window resolves no cells");
    band.lo = std::numeric_limits<double>::infinity();
    band.hi = 0.0;
    for (long cid : cells) {
      double den = v.cell_value(cid);
      if (!(den > 0.0)) throw std::runtime_error("comparison bands: denominator vanishes");
      double q = u.cell_value(cid) / den;
      band.lo = std::min(band.lo, q);
      band.hi = std::max(band.hi, q);
    }
    band.c_emp = std::max(band.hi / band.at_corkscrew, band.at_corkscrew / band.lo);
    out[i] = band;
  });
  return out;
}

PoleChangeReport change_of_pole_vmo_check(const AssembledOperator& op, const InfinityResult& inf,
                                          const Point& X0, double R, double eps_target) {
  const auto& g = op.grid();
  if (!(eps_target > 0.0)) throw std::invalid_argument("pole change: need a positive target");
  if (!(R >= 4.0 * g.h())) throw std::invalid_argument("pole change: radius below grid scale");

  auto green = green_function(op, X0);
  const Point pole = green.pole;

  PoleChangeReport rep;
  rep.eps = eps_target;

  // kappa large enough that Delta(0, 10R) sits inside Delta(x0, kappa t0)
  double kappa = std::max(4.0, (bdist(g.n(), pole.y, {0.0, 0.0}) + 10.0 * R) / pole.t);
  double rw = std::min(10.0 * R, g.x_max() - 2.0 * g.h());
  auto H = kernel_function_infinity(op, inf, X0, kappa, std::make_pair(BPoint{0.0, 0.0}, rw));

  std::vector<double> Hn(static_cast<std::size_t>(g.boundary_count()),
                         std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < H.nodes.size(); ++i)
    Hn[static_cast<std::size_t>(H.nodes[i])] = H.H[i];

  auto ws = DyadicWindowSet::build(g, R, 16, R);

  // r1: the infinite-pole kernel profile must have settled to 1 + eps
  auto prof = reverse_holder_profile(inf.kinf, 2.0, ws);
  rep.r1 = 0.0;
  for (const auto& [rk, sup] : prof)
    if (sup <= 1.0 + eps_target) rep.r1 = std::max(rep.r1, rk);

  // r2: scale where the fitted oscillation modulus of H drops below eps
  rep.fit = holder_shape(H, pole.t);
  rep.r2 = 0.0;
  if (rep.fit.gamma > 0.0 && rep.fit.c > 0.0) {
    double rel = rep.fit.c / H.min_H();
    rep.r2 = 0.5 * pole.t * std::pow(eps_target / rel, 1.0 / rep.fit.gamma);
    rep.r2 = std::min(rep.r2, pole.t / 4.0);
  }
  rep.r0 = std::min({rep.r1, rep.r2, 9.0 * R});

  for (const auto& w : ws.windows) {
    if (w.r > rep.r0 * (1.0 + 1e-12)) continue;
    PoleChangeBall ball;
    ball.x = w.x;
    ball.r = w.r;
    ball.rh_pole = rh2_ball(green.kappa, w.x, w.r);
    ball.rh_inf = rh2_ball(inf.kinf, w.x, w.r);
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (long b : g.boundary_nodes_in(w.x, w.r)) {
      double v = Hn[static_cast<std::size_t>(b)];
      if (std::isnan(v)) throw std::runtime_error("pole change: sweep outside the kernel window");
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    ball.osc = hi / lo;
    rep.balls.push_back(ball);
    rep.sup_rh_pole = std::max(rep.sup_rh_pole, ball.rh_pole);
    rep.sup_rh_inf = std::max(rep.sup_rh_inf, ball.rh_inf);
    rep.sup_osc = std::max(rep.sup_osc, ball.osc);
    rep.worst_slack = std::max(rep.worst_slack, ball.rh_pole / (ball.osc * ball.rh_inf));
  }
  rep.goal_met = !rep.balls.empty() &&
                 rep.sup_rh_pole <= (1.0 + eps_target) * (1.0 + eps_target);
  return rep;
}

}  // namespace dkplab
