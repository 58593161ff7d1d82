#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "parasp/errors.hpp"

namespace parasp {

using Index = std::int64_t;

struct Point {
  std::vector<double> x;  // spatial coordinates, size n
  double t = 0.0;

  Point() = default;
  Point(std::vector<double> x_, double t_) : x(std::move(x_)), t(t_) {}
};

inline double ipow(double b, int e) {
  double p = 1.0;
  for (int i = 0; i < e; ++i) p *= b;
  return p;
}

// Uniform space-time lattice with parabolic scaling: the time step is h^2
// exactly, so parabolic cubes with radius m*h are unions of whole cells.
// Axis k in [0, n) is spatial, axis n is time. Cell centers sit at
// lo(k) + (i + 1/2) * step(k).
struct Grid {
  int n = 1;
  double h = 1.0;
  std::vector<double> space_half;  // size n, each a positive multiple of h
  double time_half = 1.0;          // positive multiple of h^2
  std::vector<double> origin_x;    // size n, domain center
  double origin_t = 0.0;
  std::vector<Index> counts;  // n+1 cell counts (spatial..., time)
  Index total = 0;

  Grid() = default;

  Grid(int n_, double h_, std::vector<double> space_half_, double time_half_,
       std::vector<double> origin_x_ = {}, double origin_t_ = 0.0)
      : n(n_),
        h(h_),
        space_half(std::move(space_half_)),
        time_half(time_half_),
        origin_x(std::move(origin_x_)),
        origin_t(origin_t_) {
    require(n >= 1, "Grid: spatial dimension must be >= 1");
    require(h > 0, "Grid: spatial step must be positive");
    require(static_cast<int>(space_half.size()) == n,
            "Grid: need one spatial half-width per axis");
    if (origin_x.empty()) origin_x.assign(n, 0.0);
    require(static_cast<int>(origin_x.size()) == n, "Grid: origin size mismatch");
    counts.resize(n + 1);
    for (int k = 0; k < n; ++k) counts[k] = axis_cells(2.0 * space_half[k], h, "space");
    counts[n] = axis_cells(2.0 * time_half, h * h, "time");
    total = 1;
    for (Index c : counts) total *= c;
  }

  static Index axis_cells(double width, double step, const char* what) {
    require(width > 0, std::string("Grid: ") + what + " extent must be positive");
    double q = width / step;
    Index m = static_cast<Index>(std::llround(q));
    require(m >= 1 && std::abs(q - double(m)) <= 1e-9 * std::max(1.0, q),
            std::string("Grid: ") + what + " extent must be an integer multiple of the step");
    return m;
  }

  int dims() const { return n + 1; }
  double step(int k) const { return k < n ? h : h * h; }
  Index count(int k) const { return counts[k]; }
  double lo(int k) const { return k < n ? origin_x[k] - space_half[k] : origin_t - time_half; }
  double hi(int k) const { return k < n ? origin_x[k] + space_half[k] : origin_t + time_half; }
  double coord(int k, Index i) const { return lo(k) + (double(i) + 0.5) * step(k); }
  double cell_measure() const { return ipow(h, n) * h * h; }

  Index linear(const std::vector<Index>& idx) const {
    Index lin = 0;
    for (int k = 0; k <= n; ++k) lin = lin * counts[k] + idx[k];
    return lin;
  }

  void unlinear(Index lin, std::vector<Index>& idx) const {
    idx.resize(n + 1);
    for (int k = n; k >= 0; --k) {
      idx[k] = lin % counts[k];
      lin /= counts[k];
    }
  }

  Point center(Index lin) const {
    std::vector<Index> idx;
    unlinear(lin, idx);
    Point z;
    z.x.resize(n);
    for (int k = 0; k < n; ++k) z.x[k] = coord(k, idx[k]);
    z.t = coord(n, idx[n]);
    return z;
  }

  bool operator==(const Grid& o) const {
    return n == o.n && h == o.h && space_half == o.space_half && time_half == o.time_half &&
           origin_x == o.origin_x && origin_t == o.origin_t;
  }
  bool operator!=(const Grid& o) const { return !(*this == o); }
};

struct ScalarField {
  Grid grid;
  std::vector<double> v;

  ScalarField() = default;
  explicit ScalarField(const Grid& g, double fill = 0.0) : grid(g), v(g.total, fill) {}

  double& operator[](Index i) { return v[i]; }
  double operator[](Index i) const { return v[i]; }

  double max_abs() const {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  }

  // f is evaluated at every cell center; the Point buffer is reused.
  template <class F>
  static ScalarField sample(const Grid& g, F&& f) {
    ScalarField out(g);
    std::vector<Index> idx(g.n + 1, 0);
    Point z;
    z.x.resize(g.n);
    for (Index lin = 0; lin < g.total; ++lin) {
      for (int k = 0; k < g.n; ++k) z.x[k] = g.coord(k, idx[k]);
      z.t = g.coord(g.n, idx[g.n]);
      out.v[lin] = f(z);
      // odometer increment, time axis fastest
      for (int k = g.n; k >= 0; --k) {
        if (++idx[k] < g.counts[k]) break;
        idx[k] = 0;
      }
    }
    return out;
  }
};

struct VectorField {
  std::vector<ScalarField> comp;  // n spatial components

  VectorField() = default;
  explicit VectorField(const Grid& g) : comp(g.n, ScalarField(g)) {}

  int size() const { return static_cast<int>(comp.size()); }
  const Grid& grid() const { return comp.at(0).grid; }

  double max_abs() const {
    double m = 0.0;
    for (const auto& c : comp) m = std::max(m, c.max_abs());
    return m;
  }

  // Euclidean norm of the vector value at cell lin.
  double norm_at(Index lin) const {
    double s = 0.0;
    for (const auto& c : comp) s += c.v[lin] * c.v[lin];
    return std::sqrt(s);
  }
};

}  // namespace parasp
