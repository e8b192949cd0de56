#include "dkplab/coefficients.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>

#include "dkplab/util.hpp"

namespace dkplab {

Mat3 Mat3::identity(int d) {
  Mat3 m;
  for (int i = 0; i < d; ++i) m(i, i) = 1.0;
  return m;
}

double frob_dist(const Mat3& A, const Mat3& B, int d) {
  double s = 0.0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      double dv = A(i, j) - B(i, j);
      s += dv * dv;
    }
  return std::sqrt(s);
}

double quad_form(const Mat3& A, const std::array<double, 3>& xi, int d) {
  double s = 0.0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) s += xi[static_cast<std::size_t>(i)] * A(i, j) * xi[static_cast<std::size_t>(j)];
  return s;
}

EllipticMatrixField EllipticMatrixField::transposed() const {
  EllipticMatrixField t = *this;
  auto base = eval;
  int d = n + 1;
  t.eval = [base, d](const Point& p) {
    Mat3 m = base(p);
    Mat3 out;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) out(i, j) = m(j, i);
    return out;
  };
  t.family = family + "-transposed";
  return t;
}

std::vector<std::array<double, 3>> ellipticity_test_vectors(int dim) {
  std::vector<std::array<double, 3>> out;
  int count = 8 * dim;
  if (dim == 2) {
    for (int k = 0; k < count; ++k) {
      double a = 2.0 * std::numbers::pi * k / count;
      out.push_back({std::cos(a), std::sin(a), 0.0});
    }
  } else {
    // eight directions in each coordinate plane
    for (int plane = 0; plane < 3; ++plane)
      for (int k = 0; k < 8; ++k) {
        double a = 2.0 * std::numbers::pi * k / 8 + 0.2;  // offset avoids duplicate axes
        std::array<double, 3> v{0.0, 0.0, 0.0};
        v[static_cast<std::size_t>(plane)] = std::cos(a);
        v[static_cast<std::size_t>((plane + 1) % 3)] = std::sin(a);
        out.push_back(v);
      }
  }
  return out;
}

void EllipticMatrixField::check_at(const Point& p,
                                   const std::vector<std::array<double, 3>>& xis) const {
  Mat3 m = eval(p);
  int d = n + 1;
  double bound = lambda * (1.0 + 1e-9);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      if (!(std::abs(m(i, j)) <= bound))
        throw std::runtime_error("ellipticity: entry bound violated for family " + family);
  double floor = (1.0 - 1e-9) / lambda;
  for (const auto& xi : xis)
    if (!(quad_form(m, xi, d) >= floor))
      throw std::runtime_error("ellipticity: coercivity violated for family " + family);
}

void EllipticMatrixField::validate(const HalfSpaceGrid& g) const {
  if (!eval) throw std::runtime_error("ellipticity: field has no evaluator");
  if (!(lambda >= 1.0)) throw std::runtime_error("ellipticity: lambda must be >= 1");
  auto xis = ellipticity_test_vectors(n + 1);
  for (long id = 0; id < g.node_count(); ++id) check_at(g.node_point(id), xis);
  for (long cid = 0; cid < g.cell_count(); ++cid) check_at(g.cell_center(cid), xis);
}

EllipticMatrixField make_identity_field(int n) {
  EllipticMatrixField f;
  f.n = n;
  f.lambda = 1.0;
  f.family = "identity";
  Mat3 id = Mat3::identity(n + 1);
  f.eval = [id](const Point&) { return id; };
  f.grad_norm = [](const Point&) { return 0.0; };
  return f;
}

EllipticMatrixField make_constant_field(int n, const Mat3& A0) {
  EllipticMatrixField f;
  f.n = n;
  f.family = "constant";
  int d = n + 1;
  double top = 1.0;
  bool sym = true;
  Eigen::Matrix3d s = Eigen::Matrix3d::Identity();
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      top = std::max(top, std::abs(A0(i, j)));
      if (std::abs(A0(i, j) - A0(j, i)) > 0.0) sym = false;
      s(i, j) = 0.5 * (A0(i, j) + A0(j, i));
    }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(s);
  double mineig = es.eigenvalues().minCoeff();
  if (!(mineig > 0.0)) throw std::invalid_argument("constant field is not elliptic");
  f.lambda = std::max(top, 1.0 / mineig);
  f.symmetric = sym;
  f.eval = [A0](const Point&) { return A0; };
  f.grad_norm = [](const Point&) { return 0.0; };
  return f;
}

EllipticMatrixField make_dkp_sqrt_field(int n, double eps, double t_cap) {
  if (eps < 0.0) throw std::invalid_argument("dkp-sqrt: eps must be nonnegative");
  EllipticMatrixField f;
  f.n = n;
  f.lambda = 1.0 + eps * std::sqrt(std::max(1.0, t_cap));
  f.family = "dkp-sqrt";
  f.params = "{\"eps\":" + fmt_g17(eps) + "}";
  int d = n + 1;
  f.eval = [eps, d](const Point& p) {
    Mat3 m = Mat3::identity(d);
    m(0, 0) += eps * std::sqrt(std::max(0.0, p.t));
    return m;
  };
  f.grad_norm = [eps](const Point& p) {
    return p.t > 0.0 ? std::abs(eps) * 0.5 / std::sqrt(p.t) : std::numeric_limits<double>::infinity();
  };
  return f;
}

EllipticMatrixField make_dkp_log_field(int n, double eps, double s_floor) {
  if (!(std::abs(eps) < 1.0))
    throw std::invalid_argument("dkp-log: |eps| must be < 1 to stay elliptic");
  EllipticMatrixField f;
  f.n = n;
  // the (0,0) entry dips to 1 - |eps|
  f.lambda = 1.0 / (1.0 - std::abs(eps));
  f.family = "dkp-log";
  f.params = "{\"eps\":" + fmt_g17(eps) + ",\"s_floor\":" + fmt_g17(s_floor) + "}";
  int d = n + 1;
  f.eval = [eps, s_floor, d](const Point& p) {
    Mat3 m = Mat3::identity(d);
    m(0, 0) += eps * std::sin(std::log(1.0 / std::max(p.t, s_floor)));
    return m;
  };
  f.grad_norm = [eps, s_floor](const Point& p) {
    double s = std::max(p.t, s_floor);
    return std::abs(eps) / s;
  };
  return f;
}

EllipticMatrixField make_sin_offdiag_field(int n, double amp, double freq) {
  if (!(std::abs(amp) < 1.0))
    throw std::invalid_argument("sin-offdiag: |amp| must be < 1 to stay elliptic");
  EllipticMatrixField f;
  f.n = n;
  // eigenvalues of the symmetric part are 1 +- amp/2
  f.lambda = 1.0 / (1.0 - 0.5 * std::abs(amp));
  f.symmetric = false;
  f.family = "sin-offdiag";
  f.params = "{\"amp\":" + fmt_g17(amp) + ",\"freq\":" + fmt_g17(freq) + "}";
  int d = n + 1;
  f.eval = [amp, freq, d](const Point& p) {
    Mat3 m = Mat3::identity(d);
    m(0, 1) += amp * std::sin(freq * p.y[0]);
    return m;
  };
  f.grad_norm = [amp, freq](const Point& p) { return std::abs(amp * freq * std::cos(freq * p.y[0])); };
  return f;
}

EllipticMatrixField make_s_linear_field(int n, double c, double t_cap) {
  if (c < 0.0) throw std::invalid_argument("s-linear: c must be nonnegative");
  EllipticMatrixField f;
  f.n = n;
  f.lambda = 1.0 + c * std::max(1.0, t_cap);
  f.family = "s-linear";
  f.params = "{\"c\":" + fmt_g17(c) + "}";
  int d = n + 1;
  f.eval = [c, d](const Point& p) {
    Mat3 m = Mat3::identity(d);
    m(0, 0) += c * p.t;
    return m;
  };
  f.grad_norm = [c](const Point&) { return std::abs(c); };
  return f;
}

EllipticMatrixField make_field(int n, const std::string& family,
                               const std::map<std::string, double>& params) {
  auto get = [&](const std::string& key, double dflt) {
    auto it = params.find(key);
    return it == params.end() ? dflt : it->second;
  };
  if (family == "identity") return make_identity_field(n);
  if (family == "constant") {
    Mat3 m = Mat3::identity(n + 1);
    m(0, 0) = get("a00", 1.0);
    m(1, 1) = get("a11", 1.0);
    if (n == 2) m(2, 2) = get("a22", 1.0);
    m(0, 1) = get("a01", 0.0);
    m(1, 0) = get("a10", 0.0);
    return make_constant_field(n, m);
  }
  if (family == "dkp-sqrt") return make_dkp_sqrt_field(n, get("eps", 0.1), get("t_cap", 64.0));
  if (family == "dkp-log") return make_dkp_log_field(n, get("eps", 0.1), get("s_floor", 1e-12));
  if (family == "sin-offdiag") return make_sin_offdiag_field(n, get("amp", 0.3), get("freq", 10.0));
  if (family == "s-linear") return make_s_linear_field(n, get("c", 1.0), get("t_cap", 64.0));
  throw std::invalid_argument("unknown coefficient family: " + family);
}

namespace {
Mat3 mean_over_cells(const EllipticMatrixField& A, const HalfSpaceGrid& g,
                     const std::vector<long>& cells) {
  int d = A.n + 1;
  std::array<std::array<Kahan, 3>, 3> acc;
  for (long cid : cells) {
    Mat3 m = A.eval(g.cell_center(cid));
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) acc[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].add(m(i, j));
  }
  Mat3 out;
  double inv = 1.0 / static_cast<double>(cells.size());
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) out(i, j) = acc[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].value() * inv;
  return out;
}

double rms_dev(const EllipticMatrixField& A, const HalfSpaceGrid& g,
               const std::vector<long>& cells, const Mat3& ref) {
  int d = A.n + 1;
  Kahan acc;
  for (long cid : cells) {
    double dv = frob_dist(A.eval(g.cell_center(cid)), ref, d);
    acc.add(dv * dv);
  }
  return std::sqrt(acc.value() / static_cast<double>(cells.size()));
}
}  // namespace

Mat3 best_constant_matrix(const EllipticMatrixField& A, const HalfSpaceGrid& g, const Region& reg) {
  auto cells = g.cells_in(reg);
  if (cells.empty()) throw std::runtime_error("best_constant_matrix: region resolves to no cells");
  return mean_over_cells(A, g, cells);
}

OscillationReport oscillation(const EllipticMatrixField& A, const HalfSpaceGrid& g,
                              const BPoint& x, double r) {
  OscillationReport rep;
  rep.x = x;
  rep.r = r;
  auto wcells = g.cells_in(Region::whitney(x, r));
  auto tcells = g.cells_in(Region::carleson(x, r));
  if (wcells.empty() || tcells.empty())
    throw std::runtime_error("oscillation: window unresolvable at this mesh (need r >= 4h)");
  int d = A.n + 1;
  rep.best_const = mean_over_cells(A, g, wcells);
  rep.alpha2 = rms_dev(A, g, wcells, rep.best_const);
  double worst = 0.0;
  for (long cid : wcells)
    worst = std::max(worst, frob_dist(A.eval(g.cell_center(cid)), rep.best_const, d));
  rep.alpha_inf = worst;
  Mat3 tmean = mean_over_cells(A, g, tcells);
  rep.gamma = rms_dev(A, g, tcells, tmean);
  if (A.grad_norm) {
    double sup = 0.0;
    for (long cid : wcells) sup = std::max(sup, A.grad_norm(g.cell_center(cid)));
    rep.alpha_tilde = r * sup;
  }
  return rep;
}

double surface_measure(int n, double r) {
  return (n == 1) ? 2.0 * r : std::numbers::pi * r * r;
}

double DyadicCarlesonMeasure::box_mass(const BPoint& c, double rho) const {
  Kahan acc;
  double ln2 = std::numbers::ln2;
  for (std::size_t w = 0; w < windows.size(); ++w) {
    const Window& win = windows.windows[w];
    double d = bdist(windows.n, win.x, c);
    if (d * d + win.r * win.r < rho * rho) {
      double pitch = windows.scale_pitch[static_cast<std::size_t>(win.level)];
      double cellmeas = (windows.n == 1) ? pitch : pitch * pitch;
      acc.add(density[w] * cellmeas * ln2);
    }
  }
  return acc.value();
}

double DyadicCarlesonMeasure::norm_on(const BPoint& c0, double rho0) const {
  double best = box_mass(c0, rho0) / surface_measure(windows.n, rho0);
  for (const Window& q : windows.windows) {
    if (bdist(windows.n, q.x, c0) + q.r > rho0 * (1.0 + 1e-12)) continue;
    double v = box_mass(q.x, q.r) / surface_measure(windows.n, q.r);
    best = std::max(best, v);
  }
  return best;
}

std::vector<std::pair<double, double>> DyadicCarlesonMeasure::trace_profile() const {
  std::vector<std::pair<double, double>> out;
  if (windows.scale_r.size() < 2) return out;
  // the finest level is omitted: balls at that radius contain no windows at
  // all (windows only land strictly inside coarser balls)
  for (std::size_t k = 0; k + 1 < windows.scale_r.size(); ++k) {
    double r0 = windows.scale_r[k];
    // centers at this level, evaluated in deterministic slots
    std::vector<const Window*> centers;
    for (const Window& w : windows.windows)
      if (w.level == static_cast<int>(k)) centers.push_back(&w);
    std::vector<double> vals(centers.size(), 0.0);
    parallel_for(centers.size(), [&](std::size_t i) { vals[i] = norm_on(centers[i]->x, r0); });
    double sup = 0.0;
    for (double v : vals) sup = std::max(sup, v);
    out.emplace_back(r0, sup);
  }
  return out;
}

DkpMeasureReport dkp_measure(const EllipticMatrixField& A, const HalfSpaceGrid& g,
                             const DyadicWindowSet& ws) {
  DkpMeasureReport rep;
  rep.alpha2_sq.windows = ws;
  rep.gamma_sq.windows = ws;
  rep.tilde_sq.windows = ws;
  rep.has_tilde = static_cast<bool>(A.grad_norm);
  std::size_t m = ws.size();
  rep.alpha2_sq.density.assign(m, 0.0);
  rep.gamma_sq.density.assign(m, 0.0);
  rep.tilde_sq.density.assign(m, 0.0);
  parallel_for(m, [&](std::size_t i) {
    auto rec = oscillation(A, g, ws.windows[i].x, ws.windows[i].r);
    rep.alpha2_sq.density[i] = rec.alpha2 * rec.alpha2;
    rep.gamma_sq.density[i] = rec.gamma * rec.gamma;
    if (rep.has_tilde) rep.tilde_sq.density[i] = rec.alpha_tilde * rec.alpha_tilde;
  });
  return rep;
}

double gamma_vs_alpha2_ratio(const DkpMeasureReport& rep, const BPoint& c0, double rho0) {
  double num = rep.gamma_sq.norm_on(c0, rho0);
  double den = rep.alpha2_sq.norm_on(c0, 3.0 * rho0);
  if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return num / den;
}

EllipticMatrixField extend_coefficients(const EllipticMatrixField& A, const BPoint& x0,
                                        double r0, double c, ExtensionReport* report) {
  if (!(c > 0.0) || !(r0 > 0.0))
    throw std::invalid_argument("extend_coefficients: c and r0 must be positive");
  double R = 2.0 * c * r0;
  // best constant for the microscopic region T(x0, 50R): the region is far
  // below any realistic mesh, so sample the callable directly
  int n = A.n;
  double rr = 50.0 * R;
  const long K = 64;
  std::array<std::array<Kahan, 3>, 3> acc;
  long hits = 0;
  int d = n + 1;
  auto sample = [&](double u0, double u1, double t) {
    double dd = u0 * u0 + u1 * u1 + t * t;
    if (!(t > 0.0) || dd >= rr * rr) return;
    Point p;
    p.y[0] = x0[0] + u0;
    p.y[1] = (n == 2) ? x0[1] + u1 : 0.0;
    p.t = t;
    Mat3 m = A.eval(p);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) acc[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].add(m(i, j));
    ++hits;
  };
  double step = 2.0 * rr / K;
  for (long kt = 0; kt < K / 2; ++kt) {
    double t = (kt + 0.5) * step;
    for (long k0 = 0; k0 < K; ++k0) {
      double u0 = -rr + (k0 + 0.5) * step;
      if (n == 1) {
        sample(u0, 0.0, t);
      } else {
        for (long k1 = 0; k1 < K; ++k1) sample(u0, -rr + (k1 + 0.5) * step, t);
      }
    }
  }
  if (hits == 0) throw std::runtime_error("extend_coefficients: empty sampling region");
  Mat3 outer;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      outer(i, j) = acc[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].value() / static_cast<double>(hits);

  if (report) {
    report->c = c;
    report->R = R;
    report->outer = outer;
  }

  EllipticMatrixField out = A;
  out.family = A.family + "+extension";
  out.grad_norm = nullptr;
  auto base = A.eval;
  BPoint cx = x0;
  int nn = n;
  out.eval = [base, outer, cx, R, nn](const Point& p) {
    double a = bdist(nn, p.y, cx);
    bool inside = (a < R) && (p.t > 0.0) && (p.t < R);
    if (!inside) return outer;
    double f = (2.0 * a / R) - 1.0;
    if (f <= 0.0) return base(p);  // untouched core, bit-exact
    if (f > 1.0) f = 1.0;
    Mat3 m = base(p);
    Mat3 blend;
    int d2 = nn + 1;
    for (int i = 0; i < d2; ++i)
      for (int j = 0; j < d2; ++j) blend(i, j) = (1.0 - f) * m(i, j) + f * outer(i, j);
    return blend;
  };
  return out;
}

}  // namespace dkplab
