#include "dkplab/energies.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "dkplab/util.hpp"

namespace dkplab {

LocalEnergyRecord local_energies(const DiscreteField& u, const BPoint& x, double r) {
  const auto& g = u.grid;
  auto cells = g.cells_in(Region::carleson(x, r));
  if (cells.empty()) throw std::invalid_argument("local energies: window resolves to no cells");
  const double cnt = static_cast<double>(cells.size());
  const int n = g.n();

  Kahan e0, e1, tsq, tsum;
  for (long cid : cells) {
    auto gr = u.cell_gradient(cid);
    e0.add(gr[0] * gr[0]);
    if (n == 2) e1.add(gr[1] * gr[1]);
    tsq.add(gr[2] * gr[2]);
    tsum.add(gr[2]);
  }
  LocalEnergyRecord rec;
  rec.x = x;
  rec.r = r;
  rec.lambda = tsum.value() / cnt;
  rec.E_i[0] = e0.value() / cnt;
  rec.E_i[1] = (n == 2) ? e1.value() / cnt : 0.0;
  rec.E = rec.E_i[0] + rec.E_i[1] + tsq.value() / cnt;
  if (!(rec.E > 0.0)) throw std::runtime_error("local energies: constant state on the window");

  Kahan dev;
  for (long cid : cells) {
    double d = u.cell_gradient(cid)[2] - rec.lambda;
    dev.add(d * d);
  }
  // summing the nonnegative pieces keeps J >= E_i, hence beta_i <= beta,
  // exactly in floating point
  rec.J = rec.E_i[0] + rec.E_i[1] + dev.value() / cnt;
  rec.beta = rec.J / rec.E;
  rec.beta_i[0] = rec.E_i[0] / rec.E;
  rec.beta_i[1] = rec.E_i[1] / rec.E;
  return rec;
}

namespace {
void require_window_fits(const HalfSpaceGrid& g, const BPoint& x, double r,
                         const std::optional<Point>& pole, double pole_factor) {
  if (std::abs(x[0]) + r > g.x_max() + 1e-12 ||
      (g.n() == 2 && std::abs(x[1]) + r > g.x_max() + 1e-12))
    throw std::invalid_argument("window sweep: window leaves the box");
  if (pole) {
    double pd = bdist(g.n(), pole->y, x);
    double rr = pole_factor * r;
    if (pd * pd + pole->t * pole->t < rr * rr)
      throw std::invalid_argument("window sweep: window touches the pole");
  }
}
}  // namespace

BetaProfile beta_carleson_profile(const DiscreteField& u, const DyadicWindowSet& ws,
                                  std::optional<Point> pole) {
  const auto& g = u.grid;
  const int n = g.n();
  BetaProfile out;
  out.beta.windows = ws;
  out.beta.density.assign(ws.size(), 0.0);
  out.beta_i.assign(static_cast<std::size_t>(n), out.beta);
  for (const auto& w : ws.windows) require_window_fits(g, w.x, w.r, pole, 4.0);
  parallel_for(ws.size(), [&](std::size_t i) {
    const Window& w = ws.windows[i];
    auto rec = local_energies(u, w.x, w.r);
    out.beta.density[i] = rec.beta;
    for (int k = 0; k < n; ++k)
      out.beta_i[static_cast<std::size_t>(k)].density[i] = rec.beta_i[static_cast<std::size_t>(k)];
  });
  return out;
}

EtaFit eta_fit(const DyadicCarlesonMeasure& m, const BPoint& c0, double R,
               const std::vector<double>& taus) {
  EtaFit fit;
  std::vector<std::pair<double, double>> logs;
  for (double tau : taus) {
    double norm = m.norm_on(c0, tau * R);
    fit.points.emplace_back(tau, norm);
    if (norm > 0.0) logs.emplace_back(std::log(tau), std::log(norm));
  }
  if (logs.size() < 2) return fit;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (auto [lx, ly] : logs) {
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  double m_ = static_cast<double>(logs.size());
  double det = m_ * sxx - sx * sx;
  if (det == 0.0) return fit;
  fit.eta = (m_ * sxy - sx * sy) / det;
  fit.intercept = (sy * sxx - sx * sxy) / det;
  double rss = 0.0;
  for (auto [lx, ly] : logs) {
    double e = ly - (fit.eta * lx + fit.intercept);
    rss += e * e;
  }
  fit.residual = std::sqrt(rss / m_);
  return fit;
}

Claim42Table claim_4_2_probe(const EllipticMatrixField& A, const DiscreteField& G,
                             const BoundaryWeight& omega, const Point& pole,
                             const Mollifier& phi, const DyadicWindowSet& ws) {
  const auto& g = G.grid;
  const int n = g.n();
  for (const auto& w : ws.windows)
    require_window_fits(g, w.x, 2.0 * w.r, std::optional<Point>(pole), 2.0);
  Claim42Table tab;
  tab.rows.assign(ws.size(), Claim42Row{});
  parallel_for(ws.size(), [&](std::size_t i) {
    const Window& w = ws.windows[i];
    Claim42Row row;
    row.x = w.x;
    row.r = w.r;
    auto rec = local_energies(G, w.x, 2.0 * w.r);
    double gamma = oscillation(A, g, w.x, 2.0 * w.r).gamma;

    auto dv = convolve_grad(omega, phi, w.x, w.r);
    double den = convolve(omega, phi, w.x, w.r);
    if (!(den > 0.0)) throw std::runtime_error("claim probe: vanishing smoothed weight");
    row.lhs = dv[0] * dv[0] + (n == 2 ? dv[1] * dv[1] : 0.0);
    row.rhs = gamma * gamma * rec.E + rec.E_i[0] + rec.E_i[1];
    row.ratio = row.rhs > 0.0 ? row.lhs / row.rhs
                              : (row.lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    row.nu_density = row.lhs / (den * den);
    row.rhs_norm = gamma * gamma + rec.beta_i[0] + rec.beta_i[1];
    row.ratio_norm =
        row.rhs_norm > 0.0
            ? row.nu_density / row.rhs_norm
            : (row.nu_density > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    tab.rows[i] = row;
  });
  for (const auto& row : tab.rows) {
    tab.max_ratio = std::max(tab.max_ratio, row.ratio);
    tab.max_ratio_norm = std::max(tab.max_ratio_norm, row.ratio_norm);
  }
  return tab;
}

}  // namespace dkplab
