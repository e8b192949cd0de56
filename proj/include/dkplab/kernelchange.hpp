#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "dkplab/solver.hpp"

namespace dkplab {

// Boundary kernel function: a quotient of two vanishing positive solutions,
// realized at height delta = 2h with a Richardson drift check at 2*delta.
// The comparability band is anchored to the reference quotient and widened by
// the measured constant, so band_low <= min H <= max H <= band_high by
// construction; c_emp is the number worth reading.
struct KernelFunction {
  std::vector<long> nodes;  // bottom nodes of the evaluation window
  std::vector<BPoint> z;
  std::vector<double> H;    // stabilized quotient, positive
  std::vector<double> ref;  // reference quotient per point (constant for the
                            // infinite-pole variant)
  double delta = 0.0;
  double richardson = 0.0;  // max relative drift between delta and 2*delta
  double c_emp = 1.0;       // empirical comparability constant, >= 1
  double band_low = 0.0;
  double band_high = 0.0;

  double min_H() const;
  double max_H() const;
};

// H(X0, X1, z) on Delta(xw, rw) as the ratio of the two Green functions.
// pre: both poles clear T(xw, 2 rw); min{t0, t1} >= 10 h so the reference
// height t' = min{t0, t1} / 10 resolves; window two cells clear of the
// lateral faces. Throws std::runtime_error when the quotient drifts more
// than 5% between the two evaluation heights.
KernelFunction kernel_function(const AssembledOperator& op, const Point& X0, const Point& X1,
                               const BPoint& xw, double rw);

// H_infty(X0, z) against the pole-at-infinity profile. The window defaults to
// Delta(x0, 5 t0) clipped to the box and must stay inside Delta(x0, 5 kappa
// t0); the band reference is the constant G(X0, (x0, t0/4)) / U(X0).
KernelFunction kernel_function_infinity(const AssembledOperator& op, const InfinityResult& inf,
                                        const Point& X0, double kappa = 4.0,
                                        std::optional<std::pair<BPoint, double>> window =
                                            std::nullopt);

// log-log regression of |H(z) - H(z')| against |z - z'| / t0 over pairs
// closer than t0 / 4. The exponent is an estimate with a residual, nothing
// more; exact-tie pairs are skipped.
struct HolderFit {
  double gamma = 0.0;
  double c = 0.0;         // multiplier, e^intercept
  double residual = 0.0;  // rms in log space
  long pairs = 0;
};

HolderFit holder_shape(const KernelFunction& k, double t0);

// Quotient comparability: u/v sampled at cell centers of T(x, r) against the
// corkscrew value (u/v)(x, r), one row per window.
struct QuotientBand {
  BPoint x{0.0, 0.0};
  double r = 0.0;
  double at_corkscrew = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double c_emp = 0.0;  // max(hi / ref, ref / lo)
};

std::vector<QuotientBand> comparison_bands(const DiscreteField& u, const DiscreteField& v,
                                           const DyadicWindowSet& ws);

// Change of pole: the p = 2 reverse-Holder profile of the finite-pole kernel
// factored through the oscillation of H_infty times the profile of the
// infinite-pole kernel, ball by ball below the admissible scale r0.
struct PoleChangeBall {
  BPoint x{0.0, 0.0};
  double r = 0.0;
  double rh_pole = 0.0;  // reverse-Holder ratio of the finite-pole kernel
  double rh_inf = 0.0;   // same for the infinite-pole kernel
  double osc = 0.0;      // sup H_infty / inf H_infty over the ball
};

struct PoleChangeReport {
  double eps = 0.0;
  double r0 = 0.0, r1 = 0.0, r2 = 0.0;  // realized cut, profile cut, modulus cut
  HolderFit fit;                        // modulus regression behind r2
  std::vector<PoleChangeBall> balls;
  double sup_rh_pole = 0.0;
  double sup_rh_inf = 0.0;
  double sup_osc = 0.0;
  double worst_slack = 0.0;  // max of rh_pole / (osc * rh_inf)
  bool goal_met = false;     // sup_rh_pole <= (1 + eps)^2
};

// Sweeps balls centered in Delta(0, R) with radii at most
// r0 = min{r1, r2, 9R}, where r1 comes from the infinite-pole profile
// reaching 1 + eps and r2 from the fitted oscillation modulus.  The
// pole-at-infinity profile is passed in so the caller can reuse one solve
// and pick the convergence tolerance it can afford.
PoleChangeReport change_of_pole_vmo_check(const AssembledOperator& op, const InfinityResult& inf,
                                          const Point& X0, double R, double eps_target);

}  // namespace dkplab
