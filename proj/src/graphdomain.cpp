#include "dkplab/graphdomain.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "dkplab/util.hpp"

namespace dkplab {

namespace {

constexpr double kGradCap = 1e8;

double norm2(const BPoint& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1]); }

// ascending geometric lag lattice, 8 per octave, anchored at the extent
std::vector<double> lag_lattice(double extent, double floor_lag) {
  std::vector<double> lags;
  for (double r = extent; r >= floor_lag * (1.0 - 1e-9); r *= std::pow(2.0, -0.125))
    lags.push_back(r);
  std::reverse(lags.begin(), lags.end());
  return lags;
}

// running-max modulus on the 1d lattice: pairs are lag multiples of the pitch
std::vector<double> modulus_1d(const std::vector<double>& gsamp, double pitch,
                               const std::vector<double>& lags) {
  std::vector<double> theta(lags.size(), 0.0);
  double running = 0.0;
  std::size_t k = 1;
  const std::size_t npts = gsamp.size();
  for (std::size_t j = 0; j < lags.size(); ++j) {
    while (k < npts && static_cast<double>(k) * pitch <= lags[j] * (1.0 + 1e-12)) {
      for (std::size_t i = 0; i + k < npts; ++i)
        running = std::max(running, std::abs(gsamp[i + k] - gsamp[i]));
      ++k;
    }
    theta[j] = running;
  }
  return theta;
}

std::vector<double> modulus_2d(const std::vector<double>& g0, const std::vector<double>& g1,
                               long m, double pitch, const std::vector<double>& lags) {
  struct Offset {
    double d;
    long dx, dy;
  };
  std::vector<Offset> offs;
  long kmax = m - 1;
  for (long dy = 0; dy <= kmax; ++dy)
    for (long dx = (dy == 0 ? 1 : -kmax); dx <= kmax; ++dx) {
      double d = pitch * std::hypot(static_cast<double>(dx), static_cast<double>(dy));
      if (d <= lags.back() * (1.0 + 1e-12)) offs.push_back({d, dx, dy});
    }
  std::sort(offs.begin(), offs.end(), [](const Offset& a, const Offset& b) { return a.d < b.d; });

  std::vector<double> theta(lags.size(), 0.0);
  double running = 0.0;
  std::size_t next = 0;
  for (std::size_t j = 0; j < lags.size(); ++j) {
    while (next < offs.size() && offs[next].d <= lags[j] * (1.0 + 1e-12)) {
      const auto& o = offs[next++];
      long x0 = std::max<long>(0, -o.dx), x1 = std::min(m - 1, m - 1 - o.dx);
      for (long iy = 0; iy + o.dy < m; ++iy)
        for (long ix = x0; ix <= x1; ++ix) {
          std::size_t a = static_cast<std::size_t>(iy * m + ix);
          std::size_t b = static_cast<std::size_t>((iy + o.dy) * m + ix + o.dx);
          double d0 = g0[b] - g0[a], d1 = g1[b] - g1[a];
          running = std::max(running, d0 * d0 + d1 * d1);
        }
    }
    theta[j] = running;
  }
  for (double& t : theta) t = std::sqrt(t);
  return theta;
}

// trapezoid in log space plus a power-law estimate of the truncated part
void dini_quadrature(GraphFunction& gf) {
  double acc = 0.0;
  for (std::size_t j = 0; j + 1 < gf.lag.size(); ++j)
    acc += std::log(gf.lag[j + 1] / gf.lag[j]) *
           0.5 * (gf.theta[j] * gf.theta[j] + gf.theta[j + 1] * gf.theta[j + 1]);
  gf.dini = acc;

  double t0 = gf.theta.front();
  if (t0 <= 0.0) {
    gf.dini_tail = 0.0;
    return;
  }
  std::size_t oct = std::min<std::size_t>(8, gf.theta.size() - 1);
  double a_est = std::log2(gf.theta[oct] / t0) / (static_cast<double>(oct) / 8.0);
  gf.dini_tail = a_est > 0.05 ? t0 * t0 / (2.0 * a_est)
                              : std::numeric_limits<double>::infinity();
}

void build_modulus(GraphFunction& gf) {
  if (!(gf.extent > 0.0)) throw std::invalid_argument("graph function: extent must be positive");
  if (!(gf.floor_lag > 0.0) || gf.floor_lag > gf.extent / 4.0 ||
      gf.floor_lag < gf.extent / 4096.0)
    throw std::invalid_argument("graph function: floor lag outside [extent/4096, extent/4]");

  gf.lag = lag_lattice(gf.extent, gf.floor_lag);
  if (gf.n == 1) {
    double pitch = gf.floor_lag / 32.0;
    long k = std::lround(gf.extent / pitch);
    pitch = gf.extent / static_cast<double>(k);
    std::vector<double> gs(static_cast<std::size_t>(2 * k + 1));
    double bound = 0.0;
    for (long i = -k; i <= k; ++i) {
      BPoint y{static_cast<double>(i) * pitch, 0.0};
      BPoint gv = gf.grad(y);
      if (!std::isfinite(gv[0]) || std::abs(gv[0]) > kGradCap)
        throw std::invalid_argument("graph function: unbounded gradient sample");
      gs[static_cast<std::size_t>(i + k)] = gv[0];
      bound = std::max(bound, std::abs(gv[0]));
    }
    gf.grad_bound = bound;
    gf.theta = modulus_1d(gs, pitch, gf.lag);
  } else if (gf.n == 2) {
    double pitch = gf.floor_lag / 2.0;
    long k = std::lround(gf.extent / pitch);
    pitch = gf.extent / static_cast<double>(k);
    long m = 2 * k + 1;
    std::vector<double> g0(static_cast<std::size_t>(m * m)), g1(g0.size());
    double bound = 0.0;
    for (long iy = 0; iy < m; ++iy)
      for (long ix = 0; ix < m; ++ix) {
        BPoint y{static_cast<double>(ix - k) * pitch, static_cast<double>(iy - k) * pitch};
        BPoint gv = gf.grad(y);
        double mag = norm2(gv);
        if (!std::isfinite(mag) || mag > kGradCap)
          throw std::invalid_argument("graph function: unbounded gradient sample");
        g0[static_cast<std::size_t>(iy * m + ix)] = gv[0];
        g1[static_cast<std::size_t>(iy * m + ix)] = gv[1];
        bound = std::max(bound, mag);
      }
    gf.grad_bound = bound;
    gf.theta = modulus_2d(g0, g1, m, pitch, gf.lag);
  } else {
    throw std::invalid_argument("graph function: n must be 1 or 2");
  }
  dini_quadrature(gf);
}

Mat3 matmul(const Mat3& L, const Mat3& R, int d) {
  Mat3 out;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      double s = 0.0;
      for (int k = 0; k < d; ++k) s += L(i, k) * R(k, j);
      out(i, j) = s;
    }
  return out;
}

}  // namespace

double GraphFunction::theta_at(double r) const {
  if (theta.empty()) return 0.0;
  auto it = std::lower_bound(lag.begin(), lag.end(), r * (1.0 - 1e-12));
  if (it == lag.end()) return theta.back();
  return theta[static_cast<std::size_t>(it - lag.begin())];
}

GraphFunction GraphFunction::normalized() const {
  GraphFunction out = *this;
  double p0 = phi({0.0, 0.0});
  BPoint g0 = grad({0.0, 0.0});
  out.phi = [f = phi, p0, g0](const BPoint& y) {
    return f(y) - p0 - g0[0] * y[0] - g0[1] * y[1];
  };
  out.grad = [f = grad, g0](const BPoint& y) {
    BPoint gv = f(y);
    return BPoint{gv[0] - g0[0], gv[1] - g0[1]};
  };
  out.grad_bound = grad_bound + norm2(g0);
  return out;
}

GraphFunction make_graph_function(int n, std::function<double(const BPoint&)> phi,
                                  std::function<BPoint(const BPoint&)> grad, double extent,
                                  double floor_lag, std::string family) {
  GraphFunction gf;
  gf.n = n;
  gf.phi = std::move(phi);
  gf.grad = std::move(grad);
  gf.family = std::move(family);
  gf.extent = extent;
  gf.floor_lag = floor_lag;
  double p0 = gf.phi({0.0, 0.0});
  BPoint g0 = gf.grad({0.0, 0.0});
  if (p0 != 0.0 || g0[0] != 0.0 || g0[1] != 0.0) {
    GraphFunction raw = gf;
    GraphFunction flat = raw.normalized();
    gf.phi = flat.phi;
    gf.grad = flat.grad;
  }
  build_modulus(gf);
  return gf;
}

GraphFunction make_flat_graph(int n, double extent) {
  return make_graph_function(
      n, [](const BPoint&) { return 0.0; }, [](const BPoint&) { return BPoint{0.0, 0.0}; },
      extent, extent / 64.0, "flat");
}

GraphFunction make_tilt_graph(int n, const BPoint& slope, double extent) {
  GraphFunction gf;
  gf.n = n;
  gf.family = "tilt";
  gf.extent = extent;
  gf.floor_lag = extent / 64.0;
  gf.phi = [slope, n](const BPoint& y) {
    return slope[0] * y[0] + (n == 2 ? slope[1] * y[1] : 0.0);
  };
  gf.grad = [slope, n](const BPoint&) { return BPoint{slope[0], n == 2 ? slope[1] : 0.0}; };
  build_modulus(gf);
  return gf;
}

GraphFunction make_parabola_graph(int n, double curv, double extent) {
  return make_graph_function(
      n,
      [curv, n](const BPoint& y) {
        return 0.5 * curv * (y[0] * y[0] + (n == 2 ? y[1] * y[1] : 0.0));
      },
      [curv, n](const BPoint& y) {
        return BPoint{curv * y[0], n == 2 ? curv * y[1] : 0.0};
      },
      extent, extent / 64.0, "parabola");
}

GraphFunction make_power_modulus_graph(double a, double extent, double floor_lag) {
  if (!(a > 0.0)) throw std::invalid_argument("graph function: exponent must be positive");
  double e = extent;
  return make_graph_function(
      1,
      [a, e](const BPoint& y) { return std::pow(y[0] + e, a + 1.0) / (a + 1.0); },
      [a, e](const BPoint& y) {
        return BPoint{y[0] + e >= 0.0 ? std::pow(y[0] + e, a) : 0.0, 0.0};
      },
      extent, floor_lag, "power-modulus");
}

FlattenedOperator flatten(const GraphFunction& phi, const EllipticMatrixField& A) {
  if (phi.n != A.n) throw std::invalid_argument("flatten: dimension mismatch");
  if (!std::isfinite(phi.grad_bound) || phi.grad_bound > kGradCap)
    throw std::invalid_argument("flatten: unbounded gradient");

  FlattenedOperator out;
  out.phi = phi;
  out.source = A;

  const int n = A.n;
  const int d = n + 1;
  auto phif = phi.phi;
  auto gradf = phi.grad;
  auto Af = A.eval;
  out.B = A;
  out.B.family = "flattened:" + A.family;
  out.B.grad_norm = nullptr;
  out.B.eval = [phif, gradf, Af, n, d](const Point& p) {
    BPoint y{p.y[0], p.y[1]};
    BPoint gv = gradf(y);
    Mat3 a = Af({p.y, p.t + phif(y)});
    Mat3 jl = Mat3::identity(d);
    Mat3 jr = Mat3::identity(d);
    for (int i = 0; i < n; ++i) {
      jl(n, i) = -gv[i == 0 ? 0 : 1];
      jr(i, n) = -gv[i == 0 ? 0 : 1];
    }
    return matmul(jl, matmul(a, jr, d), d);
  };

  // ellipticity figures over the certified strip |y| <= extent
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  double entry = 0.0;
  const long ny = (n == 1) ? 64 : 16;
  for (long i0 = -ny; i0 <= ny; ++i0) {
    for (long i1 = (n == 2 ? -ny : 0); i1 <= (n == 2 ? ny : 0); ++i1) {
      BPoint y{phi.extent * static_cast<double>(i0) / static_cast<double>(ny),
               phi.extent * static_cast<double>(i1) / static_cast<double>(ny)};
      for (int kk = -8; kk <= 6; ++kk) {
        Point p{y, phi.extent * std::pow(2.0, kk)};
        Mat3 b = out.B.eval(p);
        Eigen::MatrixXd M(d, d);
        for (int r = 0; r < d; ++r)
          for (int c = 0; c < d; ++c) {
            M(r, c) = b(r, c);
            entry = std::max(entry, std::abs(b(r, c)));
          }
        Eigen::MatrixXd S = 0.5 * (M + M.transpose());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
        lo = std::min(lo, es.eigenvalues().minCoeff());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> sv(M.transpose() * M);
        hi = std::max(hi, std::sqrt(std::max(0.0, sv.eigenvalues().maxCoeff())));
      }
    }
  }
  if (!(lo > 0.0)) throw std::runtime_error("flatten: pullback lost ellipticity");
  out.lambda_min = lo;
  out.lambda_max = hi;
  out.B.lambda = 1.05 * std::max({1.0 / lo, hi, entry});
  return out;
}

bool graph_whitney_contains(const GraphFunction& phi, const BPoint& x, double r,
                            const Point& ambient) {
  BPoint y{ambient.y[0], ambient.y[1]};
  Point flat{ambient.y, ambient.t - phi.phi(y)};
  return Region::whitney(x, r).contains(phi.n, flat);
}

PullbackReport pullback_oscillation_check(const EllipticMatrixField& A, const GraphFunction& phi,
                                          const HalfSpaceGrid& g, const DyadicWindowSet& ws) {
  auto flat = flatten(phi, A);
  EllipticMatrixField graph_side = A;
  graph_side.family = "graph-side:" + A.family;
  graph_side.grad_norm = nullptr;
  graph_side.eval = [phif = phi.phi, Af = A.eval](const Point& p) {
    return Af({p.y, p.t + phif({p.y[0], p.y[1]})});
  };

  PullbackReport rep;
  rep.rows.assign(ws.size(), PullbackWindowRow{});
  parallel_for(ws.size(), [&](std::size_t i) {
    const Window& w = ws.windows[i];
    PullbackWindowRow row;
    row.x = w.x;
    row.r = w.r;
    double ab = oscillation(flat.B, g, w.x, w.r).alpha2;
    double aa = oscillation(graph_side, g, w.x, w.r).alpha2;
    double th = phi.theta_at(w.r);
    row.alpha_B2 = ab * ab;
    row.alpha_A2 = aa * aa;
    row.theta2 = th * th;
    // an rms below 1e-13 is rounding noise from the cell means, not signal;
    // without the floor a constant pullback divides one ulp by an exact zero
    constexpr double kNoise = 1e-26;
    double den = row.alpha_A2 + row.theta2;
    if (row.alpha_B2 <= kNoise && den <= kNoise)
      row.ratio = 0.0;
    else if (den == 0.0)
      row.ratio = std::numeric_limits<double>::infinity();
    else
      row.ratio = row.alpha_B2 / den;
    rep.rows[i] = row;
  });
  for (const auto& row : rep.rows) rep.max_ratio = std::max(rep.max_ratio, row.ratio);
  return rep;
}

SurfaceKernel surface_kernel(const BoundaryWeight& k, const GraphFunction& phi) {
  SurfaceKernel out;
  out.k_omega = k;
  out.k_omega.provenance = "surface:" + k.provenance;
  out.correction.resize(k.mass.size());
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (long b = 0; b < k.grid.boundary_count(); ++b) {
    BPoint gv = phi.grad(k.grid.boundary_point(b));
    double corr = std::sqrt(1.0 + gv[0] * gv[0] + gv[1] * gv[1]);
    out.correction[static_cast<std::size_t>(b)] = corr;
    out.k_omega.mass[static_cast<std::size_t>(b)] /= corr;
    lo = std::min(lo, corr);
    hi = std::max(hi, corr);
  }
  out.correction_osc = std::log(hi) - std::log(lo);
  return out;
}

}  // namespace dkplab
