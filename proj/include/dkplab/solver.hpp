#pragma once

#include <Eigen/Sparse>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dkplab/coefficients.hpp"
#include "dkplab/grid.hpp"

namespace dkplab {

struct SolveStats {
  std::string method;        // sparse-lu | cg-ic | bicgstab-ilut
  int iterations = 0;        // 0 for direct solves
  double rel_residual = 0.0; // verified post-solve
  long unknowns = 0;
  // worst overshoot of the discrete solution beyond the boundary data range,
  // relative to that range (meaningful for Dirichlet solves)
  double max_principle_excess = 0.0;
};

// Vertex-centered finite-volume discretization of L = -div(A grad .) on the
// grid, Dirichlet on all faces. Diagonal couplings use harmonic face means;
// mixed couplings use per-cell quadrature of the corner-difference gradients,
// which makes the assembled matrix of A^T exactly the transpose of the matrix
// of A. Rows are kept for interior nodes; couplings to face nodes are stored
// separately for boundary-data right-hand sides and flux pairings.
class AssembledOperator {
 public:
  static AssembledOperator assemble(const EllipticMatrixField& A, const HalfSpaceGrid& g);

  const HalfSpaceGrid& grid() const { return grid_; }
  const EllipticMatrixField& field() const { return field_; }
  long interior_count() const { return static_cast<long>(interior_nodes_.size()); }
  long face_count() const { return static_cast<long>(face_nodes_.size()); }
  // mixed couplings agreed with their mirrors at every sampled cell center
  bool numerically_symmetric() const { return symmetric_; }
  // nonpositive off-diagonal couplings (discrete maximum principle holds)
  bool m_matrix() const { return m_matrix_; }

  long row_of(long node) const { return row_of_[static_cast<std::size_t>(node)]; }
  long node_of_row(long row) const { return interior_nodes_[static_cast<std::size_t>(row)]; }
  long col_of(long node) const { return col_of_[static_cast<std::size_t>(node)]; }
  long face_node_of_col(long col) const { return face_nodes_[static_cast<std::size_t>(col)]; }

  const Eigen::SparseMatrix<double>& interior_matrix() const { return m_ii_; }
  const Eigen::SparseMatrix<double>& face_matrix() const { return m_if_; }

  // Solve M_II x = b (or the transposed system). Factorizations are cached;
  // throws std::runtime_error if the verified residual exceeds 1e-10.
  Eigen::VectorXd solve(const Eigen::VectorXd& b, bool transposed = false,
                        SolveStats* stats = nullptr) const;

 private:
  HalfSpaceGrid grid_;
  EllipticMatrixField field_;
  Eigen::SparseMatrix<double> m_ii_;
  Eigen::SparseMatrix<double> m_if_;
  std::vector<long> interior_nodes_;
  std::vector<long> face_nodes_;
  std::vector<long> row_of_;
  std::vector<long> col_of_;
  bool symmetric_ = false;
  bool m_matrix_ = false;
  struct Cache;
  std::shared_ptr<Cache> cache_;
};

// Dirichlet data is one callable over the whole topological boundary: bottom
// nodes have t = 0, the artificial faces are sampled where they sit.
DiscreteField solve_dirichlet(const AssembledOperator& op,
                              const std::function<double(const Point&)>& data,
                              SolveStats* stats = nullptr);

// Elliptic measure of the pole, one mass per bottom node (flux pairing
// against the transposed Green solve; escaped mass sits on the artificial
// faces). density(b) = mass(b) / h^n.
struct BoundaryWeight {
  HalfSpaceGrid grid;
  std::vector<double> mass;
  double escaped = 0.0;
  std::string provenance;

  double total() const;
  double density(long b) const;
  // sum of node masses over Delta(c, r)
  double ball_mass(const BPoint& c, double r) const;
};

struct GreenResult {
  DiscreteField G;                // continuum-normalized values, zero on faces
  BoundaryWeight kappa;           // bottom masses
  std::vector<double> face_mass;  // every face column, for exact identities
  Point pole;                     // snapped to the nearest interior node
  SolveStats stats;
};

GreenResult green_function(const AssembledOperator& op, const Point& pole);

// Oracle for the flux pairing: one Dirichlet solve per bottom node.
// Quadratic cost; small grids only.
BoundaryWeight elliptic_measure_many_solve(const AssembledOperator& op, const Point& pole);

// Normalized pole-at-infinity profile: transposed solves with poles climbing
// dyadically, each normalized at the node nearest (0,1), iterated until the
// sup relative difference over the observation window
// {|y| <= x_max/4, h <= t <= x_max/4} drops below tol or the box is exhausted.
struct InfinityResult {
  DiscreteField U;
  BoundaryWeight kinf;
  std::vector<double> history;  // successive window differences
  bool converged = false;
  double achieved = 0.0;
  int pole_exponent = 0;  // final pole height was 2^pole_exponent
};

InfinityResult green_at_infinity(const AssembledOperator& op, double tol = 1e-3);

// Smooth test pair: F on the closed half space together with its gradient.
// Gradient slots follow the grid convention (d/dy0, d/dy1, d/dt), slot 1
// identically zero when n = 1.
struct TestPair {
  std::string name;
  std::function<double(const Point&)> F;
  std::function<std::array<double, 3>(const Point&)> grad;
};

std::vector<TestPair> standard_test_suite(int n);

// Compares the exact discrete pairing sum_b kappa(b) F(b) - F(pole) against
// an independent quadrature of -(A^T grad G, grad F); returns the worst
// relative residual over the suite.
double riesz_residual(const AssembledOperator& op, const GreenResult& green,
                      const std::vector<TestPair>& suite);
// Same at infinity: sum_b kinf(b) F(b) vs -(A^T grad U, grad F); no pole term.
double riesz_residual_infinity(const AssembledOperator& op, const InfinityResult& inf,
                               const std::vector<TestPair>& suite);

// Windowed comparability diagnostics for a positive solution with pole X0.
struct ComparabilityRow {
  BPoint x{0.0, 0.0};
  double r = 0.0;
  double measure_vs_green = 0.0;   // [omega(D)/|D|] / [G(x, r)/r]
  double measure_vs_energy = 0.0;  // [omega(D)/|D|] / sqrt(mean |grad G|^2 over T)
  double doubling = 0.0;           // omega(2D)/omega(D)
  double interior_energy = 0.0;    // mean |grad G|^2 over T vs (G(x,r)/r)^2
};

struct ComparabilityReport {
  std::vector<ComparabilityRow> rows;
  double min_measure_vs_green = 0.0, max_measure_vs_green = 0.0;
  double min_doubling = 0.0, max_doubling = 0.0;
};

// Windows where the pole clears T(x, 4r) and the doubled ball stays in the
// box are evaluated; everything else is skipped.
ComparabilityReport comparability_report(const AssembledOperator& op, const GreenResult& green,
                                         const DyadicWindowSet& ws);

}  // namespace dkplab
