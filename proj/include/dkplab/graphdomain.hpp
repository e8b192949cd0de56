#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dkplab/coefficients.hpp"
#include "dkplab/solver.hpp"

namespace dkplab {

// Graph function over the boundary hyperplane, normalized so phi(0) = 0 and
// grad(0) = 0. The gradient modulus theta(r) = sup_{|x-y|<=r} |grad(x)-grad(y)|
// is taken over a sample lattice and tabulated on a geometric lag lattice
// (8 lags per octave), so theta is nondecreasing by construction. The
// square-Dini integral of theta(r)^2 dr/r is a log-space trapezoid over
// [floor_lag, extent]; the part below floor_lag is estimated from the decay
// rate fitted to the bottom octave and reported separately, so truncation
// stays visible.
struct GraphFunction {
  int n = 1;
  std::function<double(const BPoint&)> phi;
  std::function<BPoint(const BPoint&)> grad;
  std::string family = "custom";
  double extent = 1.0;
  double floor_lag = 0.0;
  std::vector<double> lag;    // ascending geometric lattice
  std::vector<double> theta;  // modulus per lag
  double grad_bound = 0.0;    // sup |grad| over the sample lattice
  double dini = 0.0;
  double dini_tail = 0.0;  // 0 when theta vanishes, +inf when theta does not decay

  // smallest tabulated lag >= r, clamped to the table ends
  double theta_at(double r) const;

  // the normalization pass as a value: subtracts phi(0) and the tangent
  // grad(0) . y, so the result has phi(0) = 0 and grad(0) = 0; the modulus
  // is unchanged and is copied as-is
  GraphFunction normalized() const;
};

// Samples the gradient on a lattice of pitch floor_lag/32 (n = 1) or
// floor_lag/2 (n = 2) over [-extent, extent]^n and applies the normalization
// pass. Throws std::invalid_argument on a non-finite or unbounded gradient
// sample, or lags that the lattice cannot resolve.
GraphFunction make_graph_function(int n, std::function<double(const BPoint&)> phi,
                                  std::function<BPoint(const BPoint&)> grad, double extent,
                                  double floor_lag, std::string family = "custom");

GraphFunction make_flat_graph(int n, double extent = 1.0);
// kept deliberately un-normalized: the slope at the origin is the fixture
GraphFunction make_tilt_graph(int n, const BPoint& slope, double extent = 1.0);
// phi = curv |y|^2 / 2; for n = 1 the modulus is exactly theta(r) = curv * r
GraphFunction make_parabola_graph(int n, double curv, double extent = 1.0);
// n = 1 fixture with theta(r) = r^a exactly: a concave increasing gradient
// puts the extreme increment at the left end of the lattice
GraphFunction make_power_modulus_graph(double a, double extent = 1.0,
                                       double floor_lag = 1.0 / 64.0);

// Flattening pullback B(y,s) = (I,0; -grad^T,1) A(y, s+phi(y)) (I,-grad; 0,1).
// The ellipticity figures are sampled on |y| <= extent and a geometric ladder
// of heights; certify grids no wider than the graph's extent.
struct FlattenedOperator {
  GraphFunction phi;
  EllipticMatrixField source;
  EllipticMatrixField B;
  double lambda_min = 0.0;  // smallest sampled eigenvalue of the symmetric part
  double lambda_max = 0.0;  // largest sampled operator norm
};

FlattenedOperator flatten(const GraphFunction& phi, const EllipticMatrixField& A);

// Membership in the image of the Whitney box under the flattening map:
// (y, t) lands in Phi(W(x, r)) iff (y, t - phi(y)) lies in W(x, r).
bool graph_whitney_contains(const GraphFunction& phi, const BPoint& x, double r,
                            const Point& ambient);

// Oscillation comparison across the flattening, window by window: the
// pullback oscillation against the graph-side oscillation plus the gradient
// modulus at the window scale.
struct PullbackWindowRow {
  BPoint x{0.0, 0.0};
  double r = 0.0;
  double alpha_B2 = 0.0;
  double alpha_A2 = 0.0;
  double theta2 = 0.0;
  double ratio = 0.0;  // alpha_B2 / (alpha_A2 + theta2); values below the
                       // rounding floor (rms 1e-13) on both sides count as 0
};

struct PullbackReport {
  std::vector<PullbackWindowRow> rows;
  double max_ratio = 0.0;
};

PullbackReport pullback_oscillation_check(const EllipticMatrixField& A, const GraphFunction& phi,
                                          const HalfSpaceGrid& g, const DyadicWindowSet& ws);

// Boundary kernel carried to the graph: density k(x) / sqrt(1 + |grad(x)|^2)
// sampled at the lattice projection. density() of the result is the surface
// density; the log-correction spread bounds how far the two VMO profiles can
// drift apart.
struct SurfaceKernel {
  BoundaryWeight k_omega;
  std::vector<double> correction;  // sqrt(1 + |grad|^2) per bottom node
  double correction_osc = 0.0;     // sup - inf of log correction
};

SurfaceKernel surface_kernel(const BoundaryWeight& k, const GraphFunction& phi);

}  // namespace dkplab
