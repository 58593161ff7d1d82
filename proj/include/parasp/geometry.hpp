#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "parasp/grid.hpp"

namespace parasp {

// max(|x1 - x2|, sqrt(|t1 - t2|)) with the Euclidean norm in space.
inline double parabolic_distance(const Point& a, const Point& b) {
  double s2 = 0.0;
  for (std::size_t k = 0; k < a.x.size(); ++k) {
    double d = a.x[k] - b.x[k];
    s2 += d * d;
  }
  return std::max(std::sqrt(s2), std::sqrt(std::abs(a.t - b.t)));
}

enum class RegionKind { cube, rectangle, cylinder, half_cube, half_cylinder };
enum class HalfClip { space, time };  // {x_n > 0} or {t > 0}

inline std::string region_kind_name(RegionKind k) {
  switch (k) {
    case RegionKind::cube: return "cube";
    case RegionKind::rectangle: return "rectangle";
    case RegionKind::cylinder: return "cylinder";
    case RegionKind::half_cube: return "half_cube";
    case RegionKind::half_cylinder: return "half_cylinder";
  }
  return "?";
}

// Open region: spatial box or ball of the given radii around center, times
// the time interval (t - alpha*r_t^2, t + alpha*r_t^2). Half variants clip
// at the absolute hyperplane {x_n > 0} (or {t > 0}).
struct ParabolicRegion {
  RegionKind kind = RegionKind::cube;
  Point center;
  double r = 1.0;              // nominal radius
  std::vector<double> radii;   // n+1 per-axis radii; for cube/cylinder all equal r
  double alpha = 1.0;
  HalfClip clip = HalfClip::space;

  static ParabolicRegion cube(Point c, double r, double alpha = 1.0) {
    return make(RegionKind::cube, std::move(c), r, alpha);
  }
  static ParabolicRegion cylinder(Point c, double r, double alpha = 1.0) {
    return make(RegionKind::cylinder, std::move(c), r, alpha);
  }
  static ParabolicRegion half_cube(Point c, double r, double alpha = 1.0,
                                   HalfClip clip = HalfClip::space) {
    ParabolicRegion q = make(RegionKind::half_cube, std::move(c), r, alpha);
    q.clip = clip;
    return q;
  }
  static ParabolicRegion half_cylinder(Point c, double r, double alpha = 1.0,
                                       HalfClip clip = HalfClip::space) {
    ParabolicRegion q = make(RegionKind::half_cylinder, std::move(c), r, alpha);
    q.clip = clip;
    return q;
  }
  static ParabolicRegion rectangle(Point c, std::vector<double> radii, double nominal_r,
                                   double alpha = 1.0) {
    ParabolicRegion q;
    q.kind = RegionKind::rectangle;
    q.center = std::move(c);
    q.radii = std::move(radii);
    q.r = nominal_r;
    q.alpha = alpha;
    require(q.radii.size() == q.center.x.size() + 1, "rectangle: need n+1 radii");
    for (double ri : q.radii) require(ri > 0, "rectangle: radii must be positive");
    return q;
  }

  int n() const { return static_cast<int>(center.x.size()); }
  double time_half_height() const { return alpha * radii.back() * radii.back(); }
  bool is_half() const {
    return kind == RegionKind::half_cube || kind == RegionKind::half_cylinder;
  }
  bool is_ball_shaped() const {
    return kind == RegionKind::cylinder || kind == RegionKind::half_cylinder;
  }

  bool contains(const Point& z) const {
    const int d = n();
    if (is_ball_shaped()) {
      double s2 = 0.0;
      for (int k = 0; k < d; ++k) {
        double dd = z.x[k] - center.x[k];
        s2 += dd * dd;
      }
      if (s2 >= radii[0] * radii[0]) return false;
    } else {
      for (int k = 0; k < d; ++k)
        if (std::abs(z.x[k] - center.x[k]) >= radii[k]) return false;
    }
    if (std::abs(z.t - center.t) >= time_half_height()) return false;
    if (is_half()) {
      if (clip == HalfClip::space && !(z.x[d - 1] > 0.0)) return false;
      if (clip == HalfClip::time && !(z.t > 0.0)) return false;
    }
    return true;
  }

  // Full variant of a half region (same shape, radius, alpha).
  ParabolicRegion unclipped() const {
    ParabolicRegion q = *this;
    if (kind == RegionKind::half_cube) q.kind = RegionKind::cube;
    if (kind == RegionKind::half_cylinder) q.kind = RegionKind::cylinder;
    return q;
  }

 private:
  static ParabolicRegion make(RegionKind kind, Point c, double r, double alpha) {
    require(r > 0, "region radius must be positive");
    require(alpha > 0, "region alpha must be positive");
    ParabolicRegion q;
    q.kind = kind;
    q.center = std::move(c);
    q.r = r;
    q.radii.assign(q.center.x.size() + 1, r);
    q.alpha = alpha;
    return q;
  }
};

// Per-axis half-open candidate index ranges covering the region, clipped to
// the grid. Cylinder cross-sections still need the membership predicate.
inline std::vector<std::pair<Index, Index>> region_index_bounds(const Grid& g,
                                                                const ParabolicRegion& reg) {
  std::vector<std::pair<Index, Index>> b(g.n + 1);
  for (int k = 0; k <= g.n; ++k) {
    double c = k < g.n ? reg.center.x[k] : reg.center.t;
    double half = k < g.n ? (reg.is_ball_shaped() ? reg.radii[0] : reg.radii[k])
                          : reg.time_half_height();
    double a = c - half, z = c + half;
    if (reg.is_half()) {
      if (reg.clip == HalfClip::space && k == g.n - 1) a = std::max(a, 0.0);
      if (reg.clip == HalfClip::time && k == g.n) a = std::max(a, 0.0);
    }
    // center > a  <=>  i > (a - lo)/step - 1/2; one cell of slack, then filter
    double st = g.step(k);
    Index i0 = static_cast<Index>(std::floor((a - g.lo(k)) / st - 0.5)) - 1;
    Index i1 = static_cast<Index>(std::ceil((z - g.lo(k)) / st - 0.5)) + 2;
    b[k] = {std::max<Index>(0, i0), std::min(g.count(k), i1)};
  }
  return b;
}

// Sorted linear indices of the cells whose centers lie in the open region.
// Throws when the intersection with the grid is empty.
inline std::vector<Index> cells_of(const Grid& g, const ParabolicRegion& reg) {
  require(static_cast<int>(reg.center.x.size()) == g.n, "cells_of: dimension mismatch");
  auto b = region_index_bounds(g, reg);
  std::vector<Index> out;
  std::vector<Index> idx(g.n + 1);
  for (int k = 0; k <= g.n; ++k) {
    if (b[k].first >= b[k].second) {
      throw Error("cells_of: empty region (" + region_kind_name(reg.kind) + ")");
    }
    idx[k] = b[k].first;
  }
  Point z;
  z.x.resize(g.n);
  while (true) {
    for (int k = 0; k < g.n; ++k) z.x[k] = g.coord(k, idx[k]);
    z.t = g.coord(g.n, idx[g.n]);
    if (reg.contains(z)) out.push_back(g.linear(idx));
    int k = g.n;
    for (; k >= 0; --k) {
      if (++idx[k] < b[k].second) break;
      idx[k] = b[k].first;
    }
    if (k < 0) break;
  }
  if (out.empty()) throw Error("cells_of: empty region (" + region_kind_name(reg.kind) + ")");
  std::sort(out.begin(), out.end());
  return out;
}

inline double region_measure(const Grid& g, const ParabolicRegion& reg) {
  return double(cells_of(g, reg).size()) * g.cell_measure();
}

inline double mean(const ScalarField& f, const ParabolicRegion& reg) {
  auto cells = cells_of(f.grid, reg);
  double s = 0.0;
  for (Index c : cells) s += f.v[c];
  return s / double(cells.size());
}

inline double mean_over(const ScalarField& f, const std::vector<Index>& cells) {
  require(!cells.empty(), "mean_over: empty cell set");
  double s = 0.0;
  for (Index c : cells) s += f.v[c];
  return s / double(cells.size());
}

// Rectangle covering every cell of the grid.
inline ParabolicRegion domain_region(const Grid& g) {
  std::vector<double> radii = g.space_half;
  radii.push_back(std::sqrt(g.time_half));
  double nominal = *std::max_element(radii.begin(), radii.end());
  return ParabolicRegion::rectangle(Point(g.origin_x, g.origin_t), std::move(radii), nominal);
}

// The flat piece T_r = Q_r ∩ {x_n = 0}: grid faces on the plane, recorded by
// the adjacent cell on the positive side. Requires {x_n = 0} to be a face
// plane of the grid.
struct FlatBoundary {
  double r = 0.0;
  std::vector<Index> layer_cells;

  static FlatBoundary of(const Grid& g, const ParabolicRegion& region) {
    const int ax = g.n - 1;
    double q = (0.0 - g.lo(ax)) / g.h;
    Index k0 = static_cast<Index>(std::llround(q));
    require(std::abs(q - double(k0)) <= 1e-9 && k0 >= 0 && k0 < g.count(ax),
            "FlatBoundary: {x_n = 0} is not a face plane inside the grid");
    FlatBoundary tb;
    tb.r = region.r;
    auto b = region_index_bounds(g, region.unclipped());
    std::vector<Index> idx(g.n + 1);
    for (int k = 0; k <= g.n; ++k) idx[k] = b[k].first;
    idx[ax] = k0;  // first positive layer
    Point face;
    face.x.resize(g.n);
    while (true) {
      for (int k = 0; k < g.n; ++k) face.x[k] = g.coord(k, idx[k]);
      face.x[ax] = 0.0;
      face.t = g.coord(g.n, idx[g.n]);
      bool in = true;
      if (region.is_ball_shaped()) {
        double s2 = 0.0;
        for (int k = 0; k < g.n; ++k) {
          double d = face.x[k] - region.center.x[k];
          s2 += d * d;
        }
        in = s2 < region.radii[0] * region.radii[0];
      } else {
        for (int k = 0; k < g.n && in; ++k)
          in = std::abs(face.x[k] - region.center.x[k]) < region.radii[k];
      }
      in = in && std::abs(face.t - region.center.t) < region.time_half_height();
      if (in) tb.layer_cells.push_back(g.linear(idx));
      int k = g.n;
      for (; k >= 0; --k) {
        if (k == ax) continue;  // layer index fixed
        if (++idx[k] < b[k].second) break;
        idx[k] = b[k].first;
      }
      if (k < 0) break;
    }
    std::sort(tb.layer_cells.begin(), tb.layer_cells.end());
    return tb;
  }
};

}  // namespace parasp
