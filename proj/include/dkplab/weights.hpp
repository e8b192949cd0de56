#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "dkplab/coefficients.hpp"
#include "dkplab/grid.hpp"
#include "dkplab/solver.hpp"

namespace dkplab {

// Radial approximate identity on the boundary, phi_r(z) = r^{-n} phi(z/r);
// the vector profile psi = grad phi scales the same way. The bump variant is
// 1 on B(0,1/2), quintic-smoothstep down to 0 at |z| = 1; the gaussian
// variant is pi^{-n/2} exp(-|z|^2) with unit mass.
struct Mollifier {
  int n = 1;
  bool gaussian = false;

  double phi(const BPoint& z) const;
  std::array<double, 2> psi(const BPoint& z) const;
  double phi_r(const BPoint& dz, double r) const;
  std::array<double, 2> psi_r(const BPoint& dz, double r) const;

  static Mollifier bump(int n);
  static Mollifier gauss(int n);
};

// Node-sum convolutions against a gridded boundary weight: (w * phi_r)(x)
// and (w * psi_r)(x). Supports are clipped at the truncation edge; callers
// that need edge transparency keep |x| + r inside the box.
double convolve(const BoundaryWeight& w, const Mollifier& m, const BPoint& x, double r);
std::array<double, 2> convolve_grad(const BoundaryWeight& w, const Mollifier& m, const BPoint& x,
                                    double r);

// Gridded weight with node masses w(y) h^n.
BoundaryWeight weight_from_density(const HalfSpaceGrid& g,
                                   const std::function<double(const BPoint&)>& w);

// sup over windows of w(Delta(x,2r)) / w(Delta(x,r)); throws on zero mass.
double doubling_constant(const BoundaryWeight& w, const DyadicWindowSet& ws);
// sup over windows of (node mean of w) / exp(node mean of log w); >= 1.
// Throws where the weight is nonpositive on a queried ball.
double a_infinity_constant(const BoundaryWeight& w, const DyadicWindowSet& ws);
// sup over windows of (node mean of w^p)^{1/p} / (node mean of w), p > 1.
double reverse_holder_ratio(const BoundaryWeight& w, double p, const DyadicWindowSet& ws);
// cumulative small-scale profile: (r_k, sup over windows with r <= r_k),
// coarse to fine.
std::vector<std::pair<double, double>> reverse_holder_profile(const BoundaryWeight& w, double p,
                                                              const DyadicWindowSet& ws);

struct OscillationProfile {
  double bmo = 0.0;                            // sup_w mean |f - mean f|
  std::vector<std::pair<double, double>> vmo;  // cumulative sup, coarse to fine
};

// f sampled at bottom-cell midpoints; oscillations are integral means.
OscillationProfile bmo_vmo_profile(const HalfSpaceGrid& g,
                                   const std::function<double(const BPoint&)>& f,
                                   const DyadicWindowSet& ws);

// |w * psi_r(x)|^2 / |w * phi_r(x)|^2 against dx dr / r.
struct FKPMeasure {
  DyadicCarlesonMeasure measure;
  std::string mollifier;  // bump | gaussian
  std::string source;
};

// Throws std::runtime_error on a vanishing denominator (boundary gaps).
FKPMeasure fkp_measure(const BoundaryWeight& omega, const Mollifier& m,
                       const DyadicWindowSet& ws);

// Heat extension u(x,t) of a boundary weight and its smoothed snapshots
// w_i = u(., eps_i). The Carleson functional uses the horizontal gradient:
// the vertical part of the heat extension is not scale-invariant and would
// make the functional resolution-dependent. The t-integral runs over dyadic
// shells sampled at geometric midpoints and is cut at t = h^2, the scale
// below which gridded masses stop looking like a density.
struct HeatFlow {
  HalfSpaceGrid grid;
  std::vector<double> mass;  // per bottom node
  std::vector<double> eps;   // decreasing smoothing times
  double C_u = 0.0;          // sup of carleson_query over the build queries

  double u(const BPoint& x, double t) const;
  std::array<double, 2> grad_u(const BPoint& x, double t) const;  // horizontal
  double smoothed_density(std::size_t i, const BPoint& x) const;
  double smoothed_mass(std::size_t i) const;  // midpoint quadrature over the bottom
  // s^{-n} int_0^{s^2} int_{Delta(x0,s)} |grad u|^2 / u^2, with the smoothed
  // variant evaluating u at t + eps_i (the semigroup shift, exact here)
  double carleson_query(const BPoint& x0, double s) const;
  double smoothed_carleson_query(std::size_t i, const BPoint& x0, double s) const;
};

// Throws when some sqrt(eps_i) < 2h (below grid resolution).
HeatFlow heat_smooth_and_carleson(const BoundaryWeight& omega, std::vector<double> eps,
                                  const std::vector<std::pair<BPoint, double>>& queries);

}  // namespace dkplab
