#include "dkplab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dkplab/util.hpp"

namespace dkplab {

namespace {
constexpr long kAxisCap = 4096;  // cells per axis

long clamp_long(long v, long lo, long hi) { return std::max(lo, std::min(hi, v)); }
}  // namespace

bool Region::contains(int n, const Point& p) const {
  switch (kind) {
    case RegionKind::SurfaceBall:
      return p.t == 0.0 && bdist(n, p.y, x) < r;
    case RegionKind::Whitney:
      return p.t > 0.5 * r && p.t <= r && bdist(n, p.y, x) < r;
    case RegionKind::Carleson: {
      double d = bdist(n, p.y, x);
      return p.t > 0.0 && d * d + p.t * p.t < r * r;
    }
    case RegionKind::Cylinder:
      return p.t > 0.0 && p.t < r && bdist(n, p.y, x) < r;
  }
  return false;
}

HalfSpaceGrid HalfSpaceGrid::build(int n, double h, double x_max, double t_max) {
  if (n != 1 && n != 2) throw std::invalid_argument("grid: n must be 1 or 2");
  if (!(h > 0.0)) throw std::invalid_argument("grid: h must be positive");
  if (!(x_max > 0.0) || !(t_max > 0.0))
    throw std::invalid_argument("grid: box extents must be positive");
  if (t_max < x_max * (1.0 - 1e-12))
    throw std::invalid_argument("grid: t_max must be at least x_max");
  HalfSpaceGrid g;
  g.n_ = n;
  g.h_ = h;
  g.mx_ = std::lround(x_max / h);
  g.mt_ = std::lround(t_max / h);
  if (g.mx_ < 1 || g.mt_ < 1)
    throw std::invalid_argument("grid: box must span at least one cell per axis");
  if (2 * g.mx_ > kAxisCap || g.mt_ > kAxisCap)
    throw std::invalid_argument("grid: more than 4096 cells along an axis");
  g.hcount_ = g.nx();
  g.chcount_ = g.cx();
  if (n == 2) {
    g.hcount_ *= g.nx();
    g.chcount_ *= g.cx();
  }
  return g;
}

std::array<long, 3> HalfSpaceGrid::node_index(long id) const {
  long j = id / hcount_;
  long f = id % hcount_;
  long i1 = (n_ == 2) ? f / nx() : 0;
  long i0 = (n_ == 2) ? f % nx() : f;
  return {i0, i1, j};
}

Point HalfSpaceGrid::node_point(long id) const {
  auto [i0, i1, j] = node_index(id);
  Point p;
  p.y[0] = (i0 - mx_) * h_;
  p.y[1] = (n_ == 2) ? (i1 - mx_) * h_ : 0.0;
  p.t = j * h_;
  return p;
}

bool HalfSpaceGrid::on_artificial_face(long id) const {
  auto [i0, i1, j] = node_index(id);
  if (j == mt_) return true;
  if (i0 == 0 || i0 == nx() - 1) return true;
  if (n_ == 2 && (i1 == 0 || i1 == nx() - 1)) return true;
  return false;
}

BPoint HalfSpaceGrid::boundary_point(long b) const {
  Point p = node_point(b);
  return p.y;
}

long HalfSpaceGrid::nearest_node(const Point& p) const {
  long i0 = clamp_long(std::lround(p.y[0] / h_) + mx_, 0, nx() - 1);
  long i1 = (n_ == 2) ? clamp_long(std::lround(p.y[1] / h_) + mx_, 0, nx() - 1) : 0;
  long j = clamp_long(std::lround(p.t / h_), 0, mt_);
  return node_id(i0, i1, j);
}

double HalfSpaceGrid::cell_volume() const {
  double v = h_ * h_;
  if (n_ == 2) v *= h_;
  return v;
}

std::array<long, 3> HalfSpaceGrid::cell_index(long cid) const {
  long cj = cid / chcount_;
  long f = cid % chcount_;
  long c1 = (n_ == 2) ? f / cx() : 0;
  long c0 = (n_ == 2) ? f % cx() : f;
  return {c0, c1, cj};
}

Point HalfSpaceGrid::cell_center(long cid) const {
  auto [c0, c1, cj] = cell_index(cid);
  Point p;
  p.y[0] = (c0 - mx_ + 0.5) * h_;
  p.y[1] = (n_ == 2) ? (c1 - mx_ + 0.5) * h_ : 0.0;
  p.t = (cj + 0.5) * h_;
  return p;
}

std::array<long, 8> HalfSpaceGrid::cell_corners(long cid) const {
  auto [c0, c1, cj] = cell_index(cid);
  std::array<long, 8> ids{};
  int k = 0;
  long e1 = (n_ == 2) ? 1 : 0;
  for (long dj = 0; dj <= 1; ++dj)
    for (long d1 = 0; d1 <= e1; ++d1)
      for (long d0 = 0; d0 <= 1; ++d0) ids[k++] = node_id(c0 + d0, c1 + d1, cj + dj);
  while (k < 8) ids[k++] = -1;
  return ids;
}

std::vector<long> HalfSpaceGrid::cells_in(const Region& reg) const {
  if (reg.kind == RegionKind::SurfaceBall)
    throw std::invalid_argument("cells_in: surface balls have no volume cells");
  if (!(reg.r > 0.0)) throw std::invalid_argument("cells_in: scale must be positive");
  std::vector<long> out;
  // bounding index ranges keep the scan local
  auto range0 = [&](double lo, double hi) {
    long a = clamp_long(static_cast<long>(std::floor((lo + x_max()) / h_)), 0, cx() - 1);
    long b = clamp_long(static_cast<long>(std::ceil((hi + x_max()) / h_)), 0, cx() - 1);
    return std::pair<long, long>{a, b};
  };
  auto [a0, b0] = range0(reg.x[0] - reg.r, reg.x[0] + reg.r);
  long a1 = 0, b1 = 0;
  if (n_ == 2) std::tie(a1, b1) = range0(reg.x[1] - reg.r, reg.x[1] + reg.r);
  double tlo = (reg.kind == RegionKind::Whitney) ? 0.5 * reg.r : 0.0;
  long aj = clamp_long(static_cast<long>(std::floor(tlo / h_)), 0, mt_ - 1);
  long bj = clamp_long(static_cast<long>(std::ceil(reg.r / h_)), 0, mt_ - 1);
  for (long cj = aj; cj <= bj; ++cj)
    for (long c1 = a1; c1 <= b1; ++c1)
      for (long c0 = a0; c0 <= b0; ++c0) {
        long cid = cell_id(c0, c1, cj);
        if (reg.contains(n_, cell_center(cid))) out.push_back(cid);
      }
  return out;
}

std::vector<long> HalfSpaceGrid::boundary_nodes_in(const BPoint& x, double r) const {
  std::vector<long> out;
  Region ball = Region::surface_ball(x, r);
  auto scan = [&](long i0, long i1) {
    long b = node_id(i0, i1, 0);
    Point p = node_point(b);
    if (ball.contains(n_, p)) out.push_back(b);
  };
  long a0 = clamp_long(std::lround(std::floor((x[0] - r + x_max()) / h_)), 0, nx() - 1);
  long b0 = clamp_long(std::lround(std::ceil((x[0] + r + x_max()) / h_)), 0, nx() - 1);
  if (n_ == 1) {
    for (long i0 = a0; i0 <= b0; ++i0) scan(i0, 0);
  } else {
    long a1 = clamp_long(std::lround(std::floor((x[1] - r + x_max()) / h_)), 0, nx() - 1);
    long b1 = clamp_long(std::lround(std::ceil((x[1] + r + x_max()) / h_)), 0, nx() - 1);
    for (long i1 = a1; i1 <= b1; ++i1)
      for (long i0 = a0; i0 <= b0; ++i0) scan(i0, i1);
  }
  return out;
}

std::vector<BPoint> HalfSpaceGrid::boundary_midpoints_in(const BPoint& x, double r) const {
  std::vector<BPoint> out;
  long a0 = clamp_long(std::lround(std::floor((x[0] - r + x_max()) / h_)), 0, cx() - 1);
  long b0 = clamp_long(std::lround(std::ceil((x[0] + r + x_max()) / h_)), 0, cx() - 1);
  auto mid = [&](long c) { return (c - mx_ + 0.5) * h_; };
  if (n_ == 1) {
    for (long c0 = a0; c0 <= b0; ++c0) {
      BPoint m{mid(c0), 0.0};
      if (bdist(n_, m, x) < r) out.push_back(m);
    }
  } else {
    long a1 = clamp_long(std::lround(std::floor((x[1] - r + x_max()) / h_)), 0, cx() - 1);
    long b1 = clamp_long(std::lround(std::ceil((x[1] + r + x_max()) / h_)), 0, cx() - 1);
    for (long c1 = a1; c1 <= b1; ++c1)
      for (long c0 = a0; c0 <= b0; ++c0) {
        BPoint m{mid(c0), mid(c1)};
        if (bdist(n_, m, x) < r) out.push_back(m);
      }
  }
  return out;
}

double HalfSpaceGrid::region_average(const Region& reg,
                                     const std::function<double(const Point&)>& f) const {
  auto cells = cells_in(reg);
  if (cells.empty()) throw std::runtime_error("region_average: region resolves to no cells");
  Kahan acc;
  for (long cid : cells) acc.add(f(cell_center(cid)));
  return acc.value() / static_cast<double>(cells.size());
}

double HalfSpaceGrid::boundary_average(const BPoint& x, double r,
                                       const std::function<double(const BPoint&)>& f) const {
  auto mids = boundary_midpoints_in(x, r);
  if (mids.empty()) throw std::runtime_error("boundary_average: ball resolves to no cells");
  Kahan acc;
  for (const auto& m : mids) acc.add(f(m));
  return acc.value() / static_cast<double>(mids.size());
}

double DiscreteField::cell_value(long cid) const {
  auto corners = grid.cell_corners(cid);
  int cnt = 1 << grid.dim();
  double s = 0.0;
  for (int k = 0; k < cnt; ++k) s += values[static_cast<std::size_t>(corners[k])];
  return s / cnt;
}

std::array<double, 3> DiscreteField::cell_gradient(long cid) const {
  auto [c0, c1, cj] = grid.cell_index(cid);
  std::array<double, 3> g{0.0, 0.0, 0.0};
  double denom = grid.h() * ((grid.n() == 2) ? 4.0 : 2.0);  // 2^{d-1} h
  long e1 = (grid.n() == 2) ? 1 : 0;
  for (long dj = 0; dj <= 1; ++dj)
    for (long d1 = 0; d1 <= e1; ++d1)
      for (long d0 = 0; d0 <= 1; ++d0) {
        double v = values[static_cast<std::size_t>(grid.node_id(c0 + d0, c1 + d1, cj + dj))];
        g[0] += (d0 ? v : -v);
        if (e1) g[1] += (d1 ? v : -v);
        g[2] += (dj ? v : -v);
      }
  g[0] /= denom;
  g[1] /= denom;
  g[2] /= denom;
  return g;
}

double DiscreteField::region_average(const Region& reg) const {
  auto cells = grid.cells_in(reg);
  if (cells.empty()) throw std::runtime_error("region_average: region resolves to no cells");
  Kahan acc;
  for (long cid : cells) acc.add(cell_value(cid));
  return acc.value() / static_cast<double>(cells.size());
}

DyadicWindowSet DyadicWindowSet::build(const HalfSpaceGrid& g, double r0, int levels,
                                       double extent) {
  if (!(r0 > 0.0) || levels < 1)
    throw std::invalid_argument("window set: need positive top scale and at least one level");
  double ext = std::min(extent, g.x_max());
  DyadicWindowSet ws;
  ws.n = g.n();
  ws.extent = ext;
  double h = g.h();
  for (int k = 0; k < levels; ++k) {
    long rc = std::lround(r0 * std::pow(0.5, k) / h);
    if (rc < 4) break;  // unresolvable at this mesh
    double r = rc * h;
    long pc = std::max<long>(1, rc / 2);
    double pitch = pc * h;
    // centers p*pitch + h/2 with the closed ball inside [-ext, ext]^n
    long pmax = static_cast<long>(std::floor((ext - r - 0.5 * h) / pitch));
    long pmin = -static_cast<long>(std::floor((ext - r + 0.5 * h) / pitch));
    if (pmax < pmin) continue;
    ws.scale_r.push_back(r);
    ws.scale_pitch.push_back(pitch);
    int level = static_cast<int>(ws.scale_r.size()) - 1;
    if (g.n() == 1) {
      for (long p = pmin; p <= pmax; ++p)
        ws.windows.push_back({{p * pitch + 0.5 * h, 0.0}, r, level});
    } else {
      for (long q = pmin; q <= pmax; ++q)
        for (long p = pmin; p <= pmax; ++p)
          ws.windows.push_back({{p * pitch + 0.5 * h, q * pitch + 0.5 * h}, r, level});
    }
  }
  if (ws.windows.empty())
    throw std::runtime_error("window set: no resolvable windows (need r0 >= 4h inside the box)");
  return ws;
}

}  // namespace dkplab
