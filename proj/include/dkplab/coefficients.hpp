#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "dkplab/grid.hpp"

namespace dkplab {

// Dense (n+1)x(n+1) coefficient matrix stored in a fixed 3x3 block.
struct Mat3 {
  std::array<std::array<double, 3>, 3> a{};

  double& operator()(int i, int j) { return a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]; }
  double operator()(int i, int j) const { return a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]; }

  static Mat3 identity(int d);
};

double frob_dist(const Mat3& A, const Mat3& B, int d);
double quad_form(const Mat3& A, const std::array<double, 3>& xi, int d);

// Matrix-valued coefficient field A(y,s) on the half space, elliptic with
// constant lambda: <A xi, xi> >= |xi|^2 / lambda and |a_ij| <= lambda.
// Fields are plain callables; grids only enter when sampling.
struct EllipticMatrixField {
  int n = 1;
  double lambda = 1.0;
  bool symmetric = true;  // declared; assembly re-checks sampled values
  std::string family = "user";
  std::string params = "{}";
  std::function<Mat3(const Point&)> eval;
  // optional: pointwise sup-norm of the full derivative tensor, for the
  // gradient-based oscillation number
  std::function<double(const Point&)> grad_norm;

  EllipticMatrixField transposed() const;
  // samples every node and cell center against a fixed set of 8(n+1) unit
  // vectors; throws std::runtime_error on an ellipticity violation
  void validate(const HalfSpaceGrid& g) const;
  // single-point version of the same check (assembly runs this inline)
  void check_at(const Point& p, const std::vector<std::array<double, 3>>& xis) const;
};

// Test vectors used by validate(); exposed so callers can reproduce checks.
std::vector<std::array<double, 3>> ellipticity_test_vectors(int dim);

// --- families --------------------------------------------------------------
EllipticMatrixField make_identity_field(int n);
EllipticMatrixField make_constant_field(int n, const Mat3& A0);
// I + eps*sqrt(s) E_{11}; t_cap bounds the box heights the field will see
EllipticMatrixField make_dkp_sqrt_field(int n, double eps, double t_cap = 64.0);
// I + eps*sin(log(1/max(s, s_floor))) E_{11}
EllipticMatrixField make_dkp_log_field(int n, double eps, double s_floor = 1e-12);
// I + amp*sin(freq*y_1) E_{12}: nonsymmetric
EllipticMatrixField make_sin_offdiag_field(int n, double amp, double freq);
// I + c*s E_{11}: simple polynomial fixture
EllipticMatrixField make_s_linear_field(int n, double c, double t_cap = 64.0);
// by name, for configs: identity|constant|dkp-sqrt|dkp-log|sin-offdiag|s-linear
EllipticMatrixField make_field(int n, const std::string& family,
                               const std::map<std::string, double>& params);

// --- oscillation numbers ----------------------------------------------------
struct OscillationReport {
  BPoint x{0.0, 0.0};
  double r = 0.0;
  double alpha2 = 0.0;    // rms Frobenius deviation from the W(x,r) mean
  double alpha_inf = 0.0; // max Frobenius deviation over W(x,r)
  double gamma = 0.0;     // rms deviation from the T(x,r) mean
  double alpha_tilde = -1.0;  // r * sup |DA| over W(x,r); -1 when unavailable
  Mat3 best_const;        // the W(x,r) mean matrix
};

// cellwise mean matrix over an arbitrary region
Mat3 best_constant_matrix(const EllipticMatrixField& A, const HalfSpaceGrid& g, const Region& reg);
OscillationReport oscillation(const EllipticMatrixField& A, const HalfSpaceGrid& g,
                              const BPoint& x, double r);

// --- discretized Carleson measures ------------------------------------------
// Weighted window family: window w at scale k carries point mass
// density[w] * pitch_k^n * ln 2, the cell measure of one dyadic window.
struct DyadicCarlesonMeasure {
  DyadicWindowSet windows;
  std::vector<double> density;

  // mass of the Carleson box over the ball Delta(c, rho): windows with
  // |x_w - c|^2 + r_w^2 < rho^2
  double box_mass(const BPoint& c, double rho) const;
  // localized norm on Delta(c0, rho0): sup over query balls contained in it
  // (every window ball plus the base ball itself) of mass / |Delta|
  double norm_on(const BPoint& c0, double rho0) const;
  // trace r0 -> sup_x ||.||_{C(Delta(x, r0))} with x running over the level
  // centers at scale r0; pairs (r0, value), coarse to fine
  std::vector<std::pair<double, double>> trace_profile() const;
};

double surface_measure(int n, double r);  // |Delta(x,r)|: 2r or pi r^2

struct DkpMeasureReport {
  DyadicCarlesonMeasure alpha2_sq;
  DyadicCarlesonMeasure gamma_sq;
  DyadicCarlesonMeasure tilde_sq;
  bool has_tilde = false;
};

DkpMeasureReport dkp_measure(const EllipticMatrixField& A, const HalfSpaceGrid& g,
                             const DyadicWindowSet& ws);
// ratio of the gamma^2 norm on Delta(c0, rho0) to the alpha2^2 norm on the
// tripled ball; finite iff the two quantities are equivalent
double gamma_vs_alpha2_ratio(const DkpMeasureReport& rep, const BPoint& c0, double rho0);

// --- boundary-localized extension -------------------------------------------
struct ExtensionReport {
  double c = 0.0;
  double R = 0.0;       // 2 c R0
  Mat3 outer;           // constant matrix used outside Gamma(x0, R)
};

// Replaces A outside the cylinder Gamma(x0, 2cR0) by the best constant for
// the microscopic region T(x0, 50 R) and blends linearly in |y - x0| across
// (R/2, R]; the field is untouched on Gamma(x0, cR0).
EllipticMatrixField extend_coefficients(const EllipticMatrixField& A, const BPoint& x0,
                                        double r0, double c = 1e-11,
                                        ExtensionReport* report = nullptr);

}  // namespace dkplab
