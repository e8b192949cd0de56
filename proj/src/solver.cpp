#include "dkplab/solver.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dkplab/util.hpp"

namespace dkplab {

namespace {
constexpr long kDirectLimit = 200000;

double harm_mean(double a, double b) { return 2.0 * a * b / (a + b); }

int sigma(int corner, int axis) { return (corner >> axis) & 1 ? 1 : -1; }
}  // namespace

struct AssembledOperator::Cache {
  std::unique_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>> lu;
  std::unique_ptr<Eigen::ConjugateGradient<Eigen::SparseMatrix<double>,
                                           Eigen::Lower | Eigen::Upper,
                                           Eigen::IncompleteCholesky<double>>>
      cg;
  std::unique_ptr<Eigen::SparseMatrix<double>> mt;  // transpose, for bicgstab
  std::unique_ptr<Eigen::BiCGSTAB<Eigen::SparseMatrix<double>, Eigen::IncompleteLUT<double>>> bicg;
  std::unique_ptr<Eigen::BiCGSTAB<Eigen::SparseMatrix<double>, Eigen::IncompleteLUT<double>>> bicg_t;
};

AssembledOperator AssembledOperator::assemble(const EllipticMatrixField& A,
                                              const HalfSpaceGrid& g) {
  if (A.n != g.n()) throw std::invalid_argument("assemble: field and grid dimensions differ");
  if (!A.eval) throw std::invalid_argument("assemble: field has no evaluator");
  AssembledOperator op;
  op.grid_ = g;
  op.field_ = A;
  op.cache_ = std::make_shared<Cache>();
  const int d = g.dim();
  const long N = g.node_count();
  const int corners = 1 << d;
  auto xis = ellipticity_test_vectors(d);

  op.row_of_.assign(static_cast<std::size_t>(N), -1);
  op.col_of_.assign(static_cast<std::size_t>(N), -1);
  for (long id = 0; id < N; ++id) {
    if (g.is_interior(id)) {
      op.row_of_[static_cast<std::size_t>(id)] = static_cast<long>(op.interior_nodes_.size());
      op.interior_nodes_.push_back(id);
    } else {
      op.col_of_[static_cast<std::size_t>(id)] = static_cast<long>(op.face_nodes_.size());
      op.face_nodes_.push_back(id);
    }
  }

  // diagonal coefficients at nodes (ellipticity checked as we sample)
  std::vector<std::array<double, 3>> diag(static_cast<std::size_t>(N));
  for (long id = 0; id < N; ++id) {
    Point p = g.node_point(id);
    A.check_at(p, xis);
    Mat3 m = A.eval(p);
    diag[static_cast<std::size_t>(id)] = {m(0, 0), m(1, 1), m(2, 2)};
  }

  std::vector<Eigen::Triplet<double>> t_ii, t_if;
  auto push = [&](long row_node, long col_node, double v) {
    long r = op.row_of_[static_cast<std::size_t>(row_node)];
    if (r < 0) return;
    long c = op.row_of_[static_cast<std::size_t>(col_node)];
    if (c >= 0)
      t_ii.emplace_back(static_cast<int>(r), static_cast<int>(c), v);
    else
      t_if.emplace_back(static_cast<int>(r),
                        static_cast<int>(op.col_of_[static_cast<std::size_t>(col_node)]), v);
  };

  const double hpow = std::pow(g.h(), d - 2);
  // axis couplings: harmonic mean transmissibility per node pair
  const long e1 = (d == 3) ? 1 : 0;
  for (long id = 0; id < N; ++id) {
    auto [i0, i1, j] = g.node_index(id);
    auto couple = [&](long nb, int axis) {
      double tau = harm_mean(diag[static_cast<std::size_t>(id)][static_cast<std::size_t>(axis)],
                             diag[static_cast<std::size_t>(nb)][static_cast<std::size_t>(axis)]) *
                   hpow;
      push(id, id, tau);
      push(id, nb, -tau);
      push(nb, nb, tau);
      push(nb, id, -tau);
    };
    if (i0 + 1 < g.nx()) couple(g.node_id(i0 + 1, i1, j), 0);
    if (e1 && i1 + 1 < g.nx()) couple(g.node_id(i0, i1 + 1, j), 1);
    if (j + 1 < g.nt()) couple(g.node_id(i0, i1, j + 1), d - 1);
  }

  // mixed couplings: per-cell quadrature of corner-difference gradients.
  // The weak form puts a_pq against (test direction p) x (solution
  // direction q); row corners carry sigma_p, column corners sigma_q, and the
  // assembled matrix of the transposed field is exactly the transpose.
  const double qscale = hpow / std::pow(4.0, d - 1);
  bool symmetric = true;
  for (long cid = 0; cid < g.cell_count(); ++cid) {
    Point c = g.cell_center(cid);
    A.check_at(c, xis);
    Mat3 m = A.eval(c);
    double off = 0.0, asym = 0.0;
    for (int p = 0; p < d; ++p)
      for (int q = 0; q < d; ++q)
        if (p != q) {
          off = std::max(off, std::abs(m(p, q)));
          asym = std::max(asym, std::abs(m(p, q) - m(q, p)));
        }
    if (asym > 1e-14) symmetric = false;
    if (off == 0.0) continue;
    auto ids = g.cell_corners(cid);
    for (int kr = 0; kr < corners; ++kr)
      for (int kc = 0; kc < corners; ++kc) {
        double w = 0.0;
        for (int p = 0; p < d; ++p)
          for (int q = 0; q < d; ++q)
            if (p != q && m(p, q) != 0.0) w += m(p, q) * sigma(kr, p) * sigma(kc, q);
        if (w != 0.0) push(ids[static_cast<std::size_t>(kr)], ids[static_cast<std::size_t>(kc)], w * qscale);
      }
  }
  op.symmetric_ = symmetric;

  long ni = op.interior_count();
  long nf = op.face_count();
  op.m_ii_.resize(ni, ni);
  op.m_if_.resize(ni, nf);
  op.m_ii_.setFromTriplets(t_ii.begin(), t_ii.end());
  op.m_if_.setFromTriplets(t_if.begin(), t_if.end());
  op.m_ii_.makeCompressed();
  op.m_if_.makeCompressed();

  // maximum-principle structure: all off-diagonal couplings nonpositive
  double worst = 0.0;
  for (int k = 0; k < op.m_ii_.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(op.m_ii_, k); it; ++it)
      if (it.row() != it.col()) worst = std::max(worst, it.value());
  for (int k = 0; k < op.m_if_.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(op.m_if_, k); it; ++it)
      worst = std::max(worst, it.value());
  op.m_matrix_ = worst <= 1e-12 * hpow;
  return op;
}

Eigen::VectorXd AssembledOperator::solve(const Eigen::VectorXd& b, bool transposed,
                                         SolveStats* stats) const {
  const long N = m_ii_.rows();
  if (b.size() != N) throw std::invalid_argument("solve: right-hand side has the wrong length");
  Eigen::VectorXd x;
  std::string method;
  int iterations = 0;
  if (N < kDirectLimit) {
    method = "sparse-lu";
    if (!cache_->lu) {
      cache_->lu = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
      cache_->lu->compute(m_ii_);
      if (cache_->lu->info() != Eigen::Success) {
        cache_->lu.reset();
        throw std::runtime_error("solver: sparse LU factorization failed");
      }
    }
    if (transposed)
      x = cache_->lu->transpose().solve(b);
    else
      x = cache_->lu->solve(b);
  } else if (symmetric_) {
    method = "cg-ic";
    if (!cache_->cg) {
      cache_->cg = std::make_unique<
          Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                                   Eigen::IncompleteCholesky<double>>>();
      cache_->cg->setTolerance(1e-12);
      cache_->cg->setMaxIterations(20000);
      cache_->cg->compute(m_ii_);
      if (cache_->cg->info() != Eigen::Success)
        throw std::runtime_error("solver: incomplete-Cholesky setup failed");
    }
    x = cache_->cg->solve(b);
    iterations = static_cast<int>(cache_->cg->iterations());
  } else {
    method = "bicgstab-ilut";
    auto& slot = transposed ? cache_->bicg_t : cache_->bicg;
    if (!slot) {
      if (transposed && !cache_->mt)
        cache_->mt = std::make_unique<Eigen::SparseMatrix<double>>(m_ii_.transpose());
      slot = std::make_unique<
          Eigen::BiCGSTAB<Eigen::SparseMatrix<double>, Eigen::IncompleteLUT<double>>>();
      slot->setTolerance(1e-12);
      slot->setMaxIterations(20000);
      slot->compute(transposed ? *cache_->mt : m_ii_);
      if (slot->info() != Eigen::Success)
        throw std::runtime_error("solver: ILUT setup failed");
    }
    x = slot->solve(b);
    iterations = static_cast<int>(slot->iterations());
  }

  double bn = b.norm();
  double rn = transposed ? (m_ii_.transpose() * x - b).norm() : (m_ii_ * x - b).norm();
  double rel = bn > 0.0 ? rn / bn : rn;
  if (!(rel <= 1e-10))
    throw std::runtime_error("solver: " + method + " residual " + fmt_g17(rel) +
                             " exceeds the 1e-10 gate");
  if (stats) {
    stats->method = method;
    stats->iterations = iterations;
    stats->rel_residual = rel;
    stats->unknowns = N;
  }
  return x;
}

DiscreteField solve_dirichlet(const AssembledOperator& op,
                              const std::function<double(const Point&)>& data,
                              SolveStats* stats) {
  const auto& g = op.grid();
  Eigen::VectorXd f(op.face_count());
  double fmin = std::numeric_limits<double>::infinity(), fmax = -fmin;
  for (long c = 0; c < op.face_count(); ++c) {
    double v = data(g.node_point(op.face_node_of_col(c)));
    f[c] = v;
    fmin = std::min(fmin, v);
    fmax = std::max(fmax, v);
  }
  Eigen::VectorXd b = -(op.face_matrix() * f);
  Eigen::VectorXd x = op.solve(b, false, stats);
  DiscreteField u(g, "dirichlet");
  for (long c = 0; c < op.face_count(); ++c) u.at(op.face_node_of_col(c)) = f[c];
  for (long r = 0; r < op.interior_count(); ++r) u.at(op.node_of_row(r)) = x[r];
  if (stats) {
    double range = fmax - fmin;
    double over = std::max(x.maxCoeff() - fmax, fmin - x.minCoeff());
    stats->max_principle_excess = std::max(0.0, over) / (range > 0.0 ? range : 1.0);
  }
  return u;
}

double BoundaryWeight::total() const {
  Kahan acc;
  for (double v : mass) acc.add(v);
  return acc.value();
}

double BoundaryWeight::density(long b) const {
  double hn = std::pow(grid.h(), grid.n());
  return mass[static_cast<std::size_t>(b)] / hn;
}

double BoundaryWeight::ball_mass(const BPoint& c, double r) const {
  Kahan acc;
  for (long b : grid.boundary_nodes_in(c, r)) acc.add(mass[static_cast<std::size_t>(b)]);
  return acc.value();
}

namespace {
// kappa = -(M_IF)^T g, distributed over bottom nodes / artificial faces
void flux_pairing(const AssembledOperator& op, const Eigen::VectorXd& g_vec, double scale,
                  BoundaryWeight& kappa, std::vector<double>* face_mass) {
  const auto& g = op.grid();
  Eigen::VectorXd w = -(op.face_matrix().transpose() * g_vec) * scale;
  kappa.grid = g;
  kappa.mass.assign(static_cast<std::size_t>(g.boundary_count()), 0.0);
  kappa.escaped = 0.0;
  Kahan esc;
  for (long c = 0; c < op.face_count(); ++c) {
    long node = op.face_node_of_col(c);
    if (g.is_bottom(node))
      kappa.mass[static_cast<std::size_t>(node)] = w[c];
    else
      esc.add(w[c]);
  }
  kappa.escaped = esc.value();
  if (face_mass) face_mass->assign(w.data(), w.data() + w.size());
}
}  // namespace

GreenResult green_function(const AssembledOperator& op, const Point& pole) {
  const auto& g = op.grid();
  long node = g.nearest_node(pole);
  if (!g.is_interior(node))
    throw std::invalid_argument("green_function: pole must land on an interior node");
  GreenResult out;
  out.pole = g.node_point(node);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(op.interior_count());
  e[op.row_of(node)] = 1.0;
  Eigen::VectorXd gv = op.solve(e, /*transposed=*/true, &out.stats);
  out.G = DiscreteField(g, "green");
  for (long r = 0; r < op.interior_count(); ++r) out.G.at(op.node_of_row(r)) = gv[r];
  flux_pairing(op, gv, 1.0, out.kappa, &out.face_mass);
  out.kappa.provenance = "pole(" + fmt_g17(out.pole.y[0]) +
                         (g.n() == 2 ? "," + fmt_g17(out.pole.y[1]) : std::string()) + ";" +
                         fmt_g17(out.pole.t) + ")";
  return out;
}

BoundaryWeight elliptic_measure_many_solve(const AssembledOperator& op, const Point& pole) {
  const auto& g = op.grid();
  long pnode = g.nearest_node(pole);
  if (!g.is_interior(pnode))
    throw std::invalid_argument("many-solve measure: pole must land on an interior node");
  long prow = op.row_of(pnode);
  BoundaryWeight out;
  out.grid = g;
  out.mass.assign(static_cast<std::size_t>(g.boundary_count()), 0.0);
  out.provenance = "many-solve";
  Kahan esc;
  for (long c = 0; c < op.face_count(); ++c) {
    Eigen::VectorXd b = -op.face_matrix().col(c);
    double v = op.solve(b)[prow];
    long node = op.face_node_of_col(c);
    if (g.is_bottom(node))
      out.mass[static_cast<std::size_t>(node)] = v;
    else
      esc.add(v);
  }
  out.escaped = esc.value();
  return out;
}

InfinityResult green_at_infinity(const AssembledOperator& op, double tol) {
  const auto& g = op.grid();
  double X = g.x_max(), T = g.t_max();
  int kmax = static_cast<int>(std::floor(std::log2(T / 4.0) + 1e-12));
  int kmin = static_cast<int>(std::ceil(std::log2(std::max(1.0, X / 2.0)) - 1e-12));
  if (kmin > kmax)
    throw std::invalid_argument("green_at_infinity: box too short to climb poles (need t_max >= 2 x_max)");
  long norm_node = g.nearest_node({{0.0, 0.0}, 1.0});
  if (!g.is_interior(norm_node))
    throw std::invalid_argument("green_at_infinity: normalization point (0,1) not resolvable");

  std::vector<long> obs;
  for (long id = 0; id < g.node_count(); ++id) {
    if (!g.is_interior(id)) continue;
    Point p = g.node_point(id);
    double ay = std::max(std::abs(p.y[0]), std::abs(p.y[1]));
    if (ay <= X / 4.0 + 1e-12 && p.t >= g.h() - 1e-12 && p.t <= X / 4.0 + 1e-12)
      obs.push_back(id);
  }
  if (obs.empty()) throw std::runtime_error("green_at_infinity: empty observation window");

  InfinityResult out;
  Eigen::VectorXd prev;
  Eigen::VectorXd u;
  double c_final = 1.0;
  Eigen::VectorXd g_final;
  for (int k = kmin; k <= kmax; ++k) {
    long pnode = g.nearest_node({{0.0, 0.0}, std::pow(2.0, k)});
    if (!g.is_interior(pnode)) throw std::runtime_error("green_at_infinity: pole left the grid");
    Eigen::VectorXd e = Eigen::VectorXd::Zero(op.interior_count());
    e[op.row_of(pnode)] = 1.0;
    Eigen::VectorXd gv = op.solve(e, /*transposed=*/true);
    double c = gv[op.row_of(norm_node)];
    if (!(c > 0.0)) throw std::runtime_error("green_at_infinity: normalization value not positive");
    u = gv / c;
    out.pole_exponent = k;
    g_final.swap(gv);
    c_final = c;
    if (prev.size()) {
      double worst = 0.0;
      for (long id : obs) {
        long r = op.row_of(id);
        double ref = std::abs(prev[r]);
        if (ref <= 0.0) ref = 1e-300;
        worst = std::max(worst, std::abs(u[r] - prev[r]) / ref);
      }
      out.history.push_back(worst);
      if (worst <= tol) {
        out.converged = true;
        break;
      }
    }
    prev = u;
  }
  out.achieved = out.history.empty() ? std::numeric_limits<double>::infinity() : out.history.back();
  out.U = DiscreteField(g, "green-at-infinity");
  for (long r = 0; r < op.interior_count(); ++r) out.U.at(op.node_of_row(r)) = u[r];
  flux_pairing(op, g_final, 1.0 / c_final, out.kinf, nullptr);
  out.kinf.provenance = "infinity";
  return out;
}

std::vector<TestPair> standard_test_suite(int n) {
  auto radial = [n](const BPoint& c, double a) {
    return [c, a, n](const Point& p) {
      double d0 = p.y[0] - c[0];
      double d1 = (n == 2) ? p.y[1] - c[1] : 0.0;
      return std::sqrt(d0 * d0 + d1 * d1) / a;
    };
  };
  auto make = [n, radial](const std::string& name, BPoint c, double ay, double at) {
    TestPair tp;
    tp.name = name;
    auto rho = radial(c, ay);
    tp.F = [rho, at](const Point& p) { return bump_profile(rho(p)) * bump_profile(p.t / at); };
    tp.grad = [rho, c, ay, at, n](const Point& p) {
      std::array<double, 3> out{0.0, 0.0, 0.0};
      double r = rho(p);
      double bt = bump_profile(p.t / at);
      double dbr = bump_profile_deriv(r);
      if (dbr != 0.0 && r > 1e-15) {
        double d0 = p.y[0] - c[0];
        double d1 = (n == 2) ? p.y[1] - c[1] : 0.0;
        double len = std::sqrt(d0 * d0 + d1 * d1);
        out[0] = dbr * bt * d0 / (len * ay);
        if (n == 2) out[1] = dbr * bt * d1 / (len * ay);
      }
      out[2] = bump_profile(r) * bump_profile_deriv(p.t / at) / at;
      return out;
    };
    return tp;
  };
  std::vector<TestPair> suite;
  suite.push_back(make("wide", {0.0, 0.0}, 1.5, 1.5));
  suite.push_back(make("offset", {0.7, 0.0}, 1.0, 1.0));
  suite.push_back(make("tall", {0.0, 0.0}, 2.0, 3.0));
  return suite;
}

namespace {
double mean_grad_sq(const DiscreteField& u, const Region& reg) {
  auto cells = u.grid.cells_in(reg);
  if (cells.empty()) return 0.0;
  Kahan acc;
  for (long cid : cells) {
    auto gr = u.cell_gradient(cid);
    acc.add(gr[0] * gr[0] + gr[1] * gr[1] + gr[2] * gr[2]);
  }
  return acc.value() / static_cast<double>(cells.size());
}

Mat3 transpose_mat(const Mat3& m, int d) {
  Mat3 out;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) out(i, j) = m(j, i);
  return out;
}

// quadrature side of the pairing identity: -(A^T grad G, grad F)
double flux_quadrature(const AssembledOperator& op, const DiscreteField& G,
                       const TestPair& tp) {
  const auto& g = op.grid();
  const int d = g.dim();
  double vol = g.cell_volume();
  // grid gradients are (y0, y1, t); matrices index (y0[, y1], t)
  auto to_axes = [d](const std::array<double, 3>& v) {
    return (d == 3) ? v : std::array<double, 3>{v[0], v[2], 0.0};
  };
  Kahan acc;
  for (long cid = 0; cid < g.cell_count(); ++cid) {
    Point c = g.cell_center(cid);
    auto gf = to_axes(tp.grad(c));
    if (gf[0] == 0.0 && gf[1] == 0.0 && gf[2] == 0.0) continue;
    auto gv = to_axes(G.cell_gradient(cid));
    Mat3 at = transpose_mat(op.field().eval(c), d);
    double dot = 0.0;
    for (int i = 0; i < d; ++i) {
      double row = 0.0;
      for (int j = 0; j < d; ++j) row += at(i, j) * gv[static_cast<std::size_t>(j)];
      dot += row * gf[static_cast<std::size_t>(i)];
    }
    acc.add(dot * vol);
  }
  return -acc.value();
}
}  // namespace

double riesz_residual(const AssembledOperator& op, const GreenResult& green,
                      const std::vector<TestPair>& suite) {
  const auto& g = op.grid();
  double worst = 0.0;
  for (const auto& tp : suite) {
    Kahan lhs;
    Kahan scale;
    for (long c = 0; c < op.face_count(); ++c) {
      double fv = tp.F(g.node_point(op.face_node_of_col(c)));
      double term = green.face_mass[static_cast<std::size_t>(c)] * fv;
      lhs.add(term);
      scale.add(std::abs(term));
    }
    double fpole = tp.F(green.pole);
    double left = lhs.value() - fpole;
    double right = flux_quadrature(op, green.G, tp);
    double denom = std::max(scale.value() + std::abs(fpole), 1e-30);
    worst = std::max(worst, std::abs(left - right) / denom);
  }
  return worst;
}

double riesz_residual_infinity(const AssembledOperator& op, const InfinityResult& inf,
                               const std::vector<TestPair>& suite) {
  const auto& g = op.grid();
  double worst = 0.0;
  for (const auto& tp : suite) {
    Kahan lhs;
    Kahan scale;
    for (long b = 0; b < g.boundary_count(); ++b) {
      double fv = tp.F(g.node_point(b));
      double term = inf.kinf.mass[static_cast<std::size_t>(b)] * fv;
      lhs.add(term);
      scale.add(std::abs(term));
    }
    double right = flux_quadrature(op, inf.U, tp);
    double denom = std::max(scale.value(), 1e-30);
    worst = std::max(worst, std::abs(lhs.value() - right) / denom);
  }
  return worst;
}

ComparabilityReport comparability_report(const AssembledOperator& op, const GreenResult& green,
                                         const DyadicWindowSet& ws) {
  const auto& g = op.grid();
  const Point pole = green.pole;
  std::vector<ComparabilityRow> rows(ws.size());
  std::vector<char> keep(ws.size(), 0);
  parallel_for(ws.size(), [&](std::size_t i) {
    const Window& w = ws.windows[i];
    double pd = bdist(g.n(), pole.y, w.x);
    if (pd * pd + pole.t * pole.t < 16.0 * w.r * w.r) return;  // pole inside T(x, 4r)
    if (std::abs(w.x[0]) + 2.0 * w.r > g.x_max() + 1e-12) return;
    if (g.n() == 2 && std::abs(w.x[1]) + 2.0 * w.r > g.x_max() + 1e-12) return;
    double mass = green.kappa.ball_mass(w.x, w.r);
    double mass2 = green.kappa.ball_mass(w.x, 2.0 * w.r);
    if (!(mass > 0.0)) return;
    long corkscrew = g.nearest_node({{w.x[0], w.x[1]}, w.r});
    double gval = green.G.at(corkscrew);
    double density = mass / surface_measure(g.n(), w.r);
    double energy = mean_grad_sq(green.G, Region::carleson(w.x, w.r));
    ComparabilityRow row;
    row.x = w.x;
    row.r = w.r;
    row.measure_vs_green = density / (gval / w.r);
    row.measure_vs_energy = energy > 0.0 ? density / std::sqrt(energy) : 0.0;
    row.doubling = mass2 / mass;
    double ref = gval / w.r;
    row.interior_energy = ref > 0.0 ? energy / (ref * ref) : 0.0;
    rows[i] = row;
    keep[i] = 1;
  });
  ComparabilityReport rep;
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (keep[i]) rep.rows.push_back(rows[i]);
  if (!rep.rows.empty()) {
    rep.min_measure_vs_green = rep.max_measure_vs_green = rep.rows.front().measure_vs_green;
    rep.min_doubling = rep.max_doubling = rep.rows.front().doubling;
    for (const auto& r : rep.rows) {
      rep.min_measure_vs_green = std::min(rep.min_measure_vs_green, r.measure_vs_green);
      rep.max_measure_vs_green = std::max(rep.max_measure_vs_green, r.measure_vs_green);
      rep.min_doubling = std::min(rep.min_doubling, r.doubling);
      rep.max_doubling = std::max(rep.max_doubling, r.doubling);
    }
  }
  return rep;
}

}  // namespace dkplab
