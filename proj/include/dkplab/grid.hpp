#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace dkplab {

// Point in the closed upper half space R^n x [0, inf): horizontal part y
// (first n entries used), height t.
struct Point {
  std::array<double, 2> y{0.0, 0.0};
  double t = 0.0;
};

// Boundary point (t = 0).
using BPoint = std::array<double, 2>;

inline double bdist(int n, const BPoint& a, const BPoint& b) {
  double d0 = a[0] - b[0];
  double d1 = (n == 2) ? a[1] - b[1] : 0.0;
  return std::sqrt(d0 * d0 + d1 * d1);
}

enum class RegionKind { SurfaceBall, Whitney, Carleson, Cylinder };

// The four regions attached to a boundary point x and scale r:
//   SurfaceBall  Delta(x,r) = {|y-x| < r, t = 0}
//   Whitney      W(x,r)     = Delta(x,r) x (r/2, r]
//   Carleson     T(x,r)     = {|y-x|^2 + t^2 < r^2, t > 0}
//   Cylinder     Gamma(x,r) = Delta(x,r) x (0, r)
// Membership is evaluated in plain double arithmetic; the conventions above
// (strict lateral, half-open Whitney slab) are part of the contract.
struct Region {
  RegionKind kind = RegionKind::Carleson;
  BPoint x{0.0, 0.0};
  double r = 0.0;

  static Region surface_ball(BPoint x, double r) { return {RegionKind::SurfaceBall, x, r}; }
  static Region whitney(BPoint x, double r) { return {RegionKind::Whitney, x, r}; }
  static Region carleson(BPoint x, double r) { return {RegionKind::Carleson, x, r}; }
  static Region cylinder(BPoint x, double r) { return {RegionKind::Cylinder, x, r}; }

  bool contains(int n, const Point& p) const;
};

// Tensor lattice on [-x_max, x_max]^n x [0, t_max], n in {1,2}. Vertex
// centered: nodes sit on multiples of h including the boundary t = 0; primal
// cells live between nodes with centers on the half-offset lattice. The box
// extents are snapped to whole cells, so cell volumes tile the realized box
// exactly. Cheap value type: copies are just a few scalars.
class HalfSpaceGrid {
 public:
  HalfSpaceGrid() = default;

  // Throws std::invalid_argument on non-positive h / extents, n outside
  // {1,2}, more than 4096 cells along an axis, or t_max < x_max (tall boxes
  // are required so poles can be placed far from the observation scales).
  static HalfSpaceGrid build(int n, double h, double x_max, double t_max);

  int n() const { return n_; }
  int dim() const { return n_ + 1; }
  double h() const { return h_; }
  double x_max() const { return mx_ * h_; }
  double t_max() const { return mt_ * h_; }

  // --- nodes -------------------------------------------------------------
  long nx() const { return 2 * mx_ + 1; }  // nodes per horizontal axis
  long nt() const { return mt_ + 1; }      // node levels t = 0 .. t_max
  long hcount() const { return hcount_; }  // nx^n
  long node_count() const { return hcount_ * nt(); }
  long boundary_count() const { return hcount_; }

  long node_id(long i0, long i1, long j) const { return j * hcount_ + i1 * nx() + i0; }
  // (i0, i1, j); i1 = 0 when n = 1
  std::array<long, 3> node_index(long id) const;
  Point node_point(long id) const;
  bool is_bottom(long id) const { return id < hcount_; }
  // true on the lateral faces or the top lid (zero Dirichlet truncation data)
  bool on_artificial_face(long id) const;
  bool is_interior(long id) const { return !is_bottom(id) && !on_artificial_face(id); }
  BPoint boundary_point(long b) const;  // b in [0, hcount)
  // nearest node to an arbitrary point of the box
  long nearest_node(const Point& p) const;

  // --- cells -------------------------------------------------------------
  long cx() const { return 2 * mx_; }  // cells per horizontal axis
  long ct() const { return mt_; }
  long chcount() const { return chcount_; }
  long cell_count() const { return chcount_ * mt_; }
  double cell_volume() const;  // h^{n+1}

  long cell_id(long c0, long c1, long cj) const { return cj * chcount_ + c1 * cx() + c0; }
  std::array<long, 3> cell_index(long cid) const;
  Point cell_center(long cid) const;
  // the 2^{n+1} node ids at the cell corners
  std::array<long, 8> cell_corners(long cid) const;

  // --- region iteration ----------------------------------------------------
  // ids of cells whose centers lie in the region (volume regions only)
  std::vector<long> cells_in(const Region& reg) const;
  // bottom node ids with |y - x| < r
  std::vector<long> boundary_nodes_in(const BPoint& x, double r) const;
  // midpoints of bottom cells (half-offset lattice) with center in the ball;
  // integral averages of boundary densities use these
  std::vector<BPoint> boundary_midpoints_in(const BPoint& x, double r) const;

  // --- quadrature ----------------------------------------------------------
  // Midpoint rule over the cells of a volume region, exact for multilinear
  // integrands. Throws if the region resolves to no cells.
  double region_average(const Region& reg, const std::function<double(const Point&)>& f) const;
  // Same for a boundary ball, integrand sampled at bottom-cell midpoints.
  double boundary_average(const BPoint& x, double r, const std::function<double(const BPoint&)>& f) const;

 private:
  int n_ = 1;
  double h_ = 0.0;
  long mx_ = 0;       // cells from 0 to x_max along each horizontal axis
  long mt_ = 0;       // cells from 0 to t_max
  long hcount_ = 0;   // nx^n
  long chcount_ = 0;  // (2 mx)^n
};

// Nodal scalar field over a grid.
struct DiscreteField {
  HalfSpaceGrid grid;
  std::vector<double> values;
  std::string label;

  DiscreteField() = default;
  DiscreteField(HalfSpaceGrid g, std::string lab = "")
      : grid(g), values(static_cast<std::size_t>(g.node_count()), 0.0), label(std::move(lab)) {}

  double at(long node) const { return values[static_cast<std::size_t>(node)]; }
  double& at(long node) { return values[static_cast<std::size_t>(node)]; }

  // mean of the 2^{n+1} corner values; exact at the center for multilinears
  double cell_value(long cid) const;
  // corner-difference gradient at the cell center, components (d/dy0, d/dy1, d/dt)
  std::array<double, 3> cell_gradient(long cid) const;
  // average of the interpolated field over a volume region (midpoint rule)
  double region_average(const Region& reg) const;
};

// Boundary window (= surface ball with bookkeeping) used by all sweeps.
struct Window {
  BPoint x{0.0, 0.0};
  double r = 0.0;
  int level = 0;
};

// Dyadic family of windows: levels k = 0,1,... carry radius r_k ~ r0 2^{-k}
// snapped to whole cells (levels finer than 4h are dropped), centers on the
// half-offset lattice with pitch ~ r_k/2, kept while the closed ball fits in
// [-extent, extent]^n. Half-offset centers make symmetric cancellations and
// the doubling counts exact on lattice data.
struct DyadicWindowSet {
  std::vector<Window> windows;
  std::vector<double> scale_r;      // realized r_k per level
  std::vector<double> scale_pitch;  // center pitch per level
  int n = 1;
  double extent = 0.0;

  static DyadicWindowSet build(const HalfSpaceGrid& g, double r0, int levels, double extent);
  std::size_t size() const { return windows.size(); }
};

}  // namespace dkplab
