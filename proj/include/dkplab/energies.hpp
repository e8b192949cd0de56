#pragma once

#include <optional>
#include <vector>

#include "dkplab/coefficients.hpp"
#include "dkplab/grid.hpp"
#include "dkplab/solver.hpp"
#include "dkplab/weights.hpp"

namespace dkplab {

// Window-local energy statistics of a discrete solution over T(x,r).
struct LocalEnergyRecord {
  BPoint x{0.0, 0.0};
  double r = 0.0;
  double E = 0.0;                      // mean |grad u|^2
  std::array<double, 2> E_i{0.0, 0.0}; // horizontal component means (n used)
  double lambda = 0.0;                 // mean d_t u
  double J = 0.0;                      // mean |grad u - lambda e_t|^2
  double beta = 0.0;                   // J / E
  std::array<double, 2> beta_i{0.0, 0.0};
};

// Cell-center membership over the discrete half ball, corner-difference
// gradients (one-sided in t at the bottom row, preserving the vanishing
// trace). J is accumulated as sum_i E_i + mean (d_t u - lambda)^2, which
// keeps beta_i <= beta exact in floating point; J = E - lambda^2 then holds
// to rounding. Throws if T(x,r) resolves to no cells or u is constant
// there (E = 0).
LocalEnergyRecord local_energies(const DiscreteField& u, const BPoint& x, double r);

struct BetaProfile {
  DyadicCarlesonMeasure beta;
  std::vector<DyadicCarlesonMeasure> beta_i;  // one per horizontal direction
};

// Densities beta(x,r) / beta_i(x,r) against dx dr / r over the sweep.
// Windows must keep T(x,r) inside the box; with a pole given, windows whose
// T(x, 4r) contains it are rejected.
BetaProfile beta_carleson_profile(const DiscreteField& u, const DyadicWindowSet& ws,
                                  std::optional<Point> pole = std::nullopt);

// least-squares exponent of a localized-norm profile: log norm_on(c0, tau R)
// against log tau; reported with the fit residual, never asserted.
struct EtaFit {
  double eta = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // rms of the log-log fit
  std::vector<std::pair<double, double>> points;  // (tau, norm)
};

EtaFit eta_fit(const DyadicCarlesonMeasure& m, const BPoint& c0, double R,
               const std::vector<double>& taus = {1.0, 0.5, 0.25, 0.125, 0.0625});

// Window-wise probe of the mollified-derivative density bound: lhs tests the
// horizontal derivatives of the boundary measure at scale r, rhs the doubled
// window energies of the interior solution; the normalized pair divides the
// measure side by |omega * phi_r|^2 and the energy side by E.
struct Claim42Row {
  BPoint x{0.0, 0.0};
  double r = 0.0;
  double lhs = 0.0;         // sum_i |omega * (d_i phi)_r (x)|^2
  double rhs = 0.0;         // gamma(x,2r)^2 E(x,2r) + sum_l E_l(x,2r)
  double ratio = 0.0;
  double nu_density = 0.0;  // |omega * psi_r|^2 / |omega * phi_r|^2
  double rhs_norm = 0.0;    // gamma(x,2r)^2 + sum_i beta_i(x,2r)
  double ratio_norm = 0.0;
};

struct Claim42Table {
  std::vector<Claim42Row> rows;
  double max_ratio = 0.0;
  double max_ratio_norm = 0.0;
};

// G and omega must come from the same pole; windows whose T(x,4r) contains
// the pole, or whose doubled window leaves the box, throw.
Claim42Table claim_4_2_probe(const EllipticMatrixField& A, const DiscreteField& G,
                             const BoundaryWeight& omega, const Point& pole,
                             const Mollifier& phi, const DyadicWindowSet& ws);

}  // namespace dkplab
