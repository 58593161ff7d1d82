#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "parasp/geometry.hpp"

namespace parasp {

namespace detail {
// Central differences along one axis, second-order one-sided at the ends.
inline ScalarField diff_axis(const ScalarField& u, int axis) {
  const Grid& g = u.grid;
  require(g.count(axis) >= 3, "derivative: need at least 3 cells per axis");
  ScalarField out(g);
  const double inv2 = 1.0 / (2.0 * g.step(axis));
  Index stride = 1;
  for (int k = g.n; k > axis; --k) stride *= g.count(k);
  const Index nk = g.count(axis);
  std::vector<Index> idx(g.n + 1, 0);
  for (Index lin = 0; lin < g.total; ++lin) {
    Index i = idx[axis];
    double d;
    if (i == 0)
      d = (-3.0 * u.v[lin] + 4.0 * u.v[lin + stride] - u.v[lin + 2 * stride]) * inv2;
    else if (i == nk - 1)
      d = (3.0 * u.v[lin] - 4.0 * u.v[lin - stride] + u.v[lin - 2 * stride]) * inv2;
    else
      d = (u.v[lin + stride] - u.v[lin - stride]) * inv2;
    out.v[lin] = d;
    for (int k = g.n; k >= 0; --k) {
      if (++idx[k] < g.counts[k]) break;
      idx[k] = 0;
    }
  }
  return out;
}
}  // namespace detail

inline VectorField spatial_gradient(const ScalarField& u) {
  VectorField out(u.grid);
  for (int k = 0; k < u.grid.n; ++k) out.comp[k] = detail::diff_axis(u, k);
  return out;
}

inline ScalarField time_derivative(const ScalarField& u) {
  return detail::diff_axis(u, u.grid.n);
}

// Row-major n x n matrix of second spatial derivatives.
inline std::vector<ScalarField> hessian(const ScalarField& u) {
  const int n = u.grid.n;
  std::vector<ScalarField> H;
  H.reserve(n * n);
  std::vector<ScalarField> first;
  for (int j = 0; j < n; ++j) first.push_back(detail::diff_axis(u, j));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) H.push_back(detail::diff_axis(first[j], i));
  return H;
}

// Compactly supported product of 1D polynomial bumps (1-s^2)^degree on a
// sub-box strictly inside the target region; derivatives are analytic.
struct TestFunction {
  Point center;
  std::vector<double> radii;  // n spatial half-widths, then the time half-height
  int degree = 3;

  double bump(double s) const { return std::abs(s) < 1.0 ? ipow(1.0 - s * s, degree) : 0.0; }
  double bump_d(double s) const {
    return std::abs(s) < 1.0 ? -2.0 * degree * s * ipow(1.0 - s * s, degree - 1) : 0.0;
  }

  double value(const Point& z) const {
    double v = bump((z.t - center.t) / radii.back());
    for (std::size_t k = 0; k < center.x.size(); ++k)
      v *= bump((z.x[k] - center.x[k]) / radii[k]);
    return v;
  }

  double dt(const Point& z) const {
    double v = bump_d((z.t - center.t) / radii.back()) / radii.back();
    for (std::size_t k = 0; k < center.x.size(); ++k)
      v *= bump((z.x[k] - center.x[k]) / radii[k]);
    return v;
  }

  double dx(const Point& z, int i) const {
    double v = bump((z.t - center.t) / radii.back());
    for (std::size_t k = 0; k < center.x.size(); ++k) {
      double s = (z.x[k] - center.x[k]) / radii[k];
      v *= (static_cast<int>(k) == i) ? bump_d(s) / radii[k] : bump(s);
    }
    return v;
  }

  bool supported_inside(const ParabolicRegion& reg) const {
    const int n = reg.n();
    if (std::abs(center.t - reg.center.t) + radii.back() > reg.time_half_height()) return false;
    if (reg.is_ball_shaped()) {
      double off = 0.0, diag = 0.0;
      for (int k = 0; k < n; ++k) {
        double d = center.x[k] - reg.center.x[k];
        off += d * d;
        diag += radii[k] * radii[k];
      }
      if (std::sqrt(off) + std::sqrt(diag) > reg.radii[0]) return false;
    } else {
      for (int k = 0; k < n; ++k)
        if (std::abs(center.x[k] - reg.center.x[k]) + radii[k] > reg.radii[k]) return false;
    }
    if (reg.is_half()) {
      if (reg.clip == HalfClip::space && center.x[n - 1] - radii[n - 1] < 0.0) return false;
      if (reg.clip == HalfClip::time && center.t - radii.back() < 0.0) return false;
    }
    return true;
  }
};

namespace detail {
// Deterministic uniform draws; the stdlib distributions are unspecified
// across implementations, this is not.
struct Rng {
  std::uint64_t s;
  explicit Rng(std::uint64_t seed) : s(seed ? seed : 0x9e3779b97f4a7c15ULL) {}
  std::uint64_t next() {
    // splitmix64
    s += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  double uniform(double a, double b) {
    double u = double(next() >> 11) * 0x1.0p-53;
    return a + (b - a) * u;
  }
  int uniform_int(int lo, int hi) {  // inclusive
    return lo + int(next() % std::uint64_t(hi - lo + 1));
  }
};

struct InnerBox {
  Point center;
  std::vector<double> half;  // n spatial + time half-height
};

// Axis-aligned box inside the region in which test-function supports are drawn.
inline InnerBox inner_box(const ParabolicRegion& reg) {
  const int n = reg.n();
  InnerBox box;
  box.center = reg.center;
  box.half.resize(n + 1);
  if (reg.is_ball_shaped()) {
    double s = 0.98 * reg.radii[0] / std::sqrt(double(n));
    for (int k = 0; k < n; ++k) box.half[k] = s;
  } else {
    for (int k = 0; k < n; ++k) box.half[k] = reg.radii[k];
  }
  box.half[n] = reg.time_half_height();
  if (reg.is_half()) {
    if (reg.clip == HalfClip::space) {
      double hi = box.center.x[n - 1] + box.half[n - 1];
      box.center.x[n - 1] = hi / 2.0;
      box.half[n - 1] = hi / 2.0;
    } else {
      double hi = box.center.t + box.half[n];
      box.center.t = hi / 2.0;
      box.half[n] = hi / 2.0;
    }
  }
  return box;
}
}  // namespace detail

// Fixed-seed battery of bump test functions supported strictly inside the
// region.
inline std::vector<TestFunction> test_battery(const ParabolicRegion& region, int count,
                                              std::uint64_t seed) {
  detail::Rng rng(seed);
  const int n = region.n();
  auto box = detail::inner_box(region);
  std::vector<TestFunction> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    TestFunction tf;
    tf.center.x.resize(n);
    tf.radii.resize(n + 1);
    for (int k = 0; k <= n; ++k) {
      double half = k < n ? box.half[k] : box.half[n];
      double rho = rng.uniform(0.3, 0.6) * half;
      double slack = (half - rho) * 0.98;
      double c = (k < n ? box.center.x[k] : box.center.t) + rng.uniform(-1.0, 1.0) * slack;
      tf.radii[k] = rho;
      if (k < n)
        tf.center.x[k] = c;
      else
        tf.center.t = c;
    }
    out.push_back(std::move(tf));
  }
  return out;
}

// Worst distributional residual of u_t = div G over the battery:
//   | sum u phi_t - sum G . D phi | * h^{n+2}
// normalized by the L1 mass of the test derivatives and the sup of the pair,
// so the result is invariant under scaling either the pair or phi.
inline double divergence_residual(const ScalarField& u, const VectorField& G,
                                  const ParabolicRegion& region,
                                  const std::vector<TestFunction>& battery) {
  const Grid& g = u.grid;
  auto rcells = cells_of(g, region);
  double scale = 0.0;
  for (Index c : rcells) {
    double gn = 0.0;
    for (const auto& gc : G.comp) gn += gc.v[c] * gc.v[c];
    scale = std::max(scale, std::abs(u.v[c]) + std::sqrt(gn));
  }
  if (scale == 0.0) return 0.0;

  const double meas = g.cell_measure();
  double worst = 0.0;
  std::vector<Index> idx(g.n + 1);
  Point z;
  z.x.resize(g.n);
  for (const auto& phi : battery) {
    require(phi.supported_inside(region), "divergence_residual: test function outside region");
    // support bounding box in cell indices
    std::vector<std::pair<Index, Index>> b(g.n + 1);
    for (int k = 0; k <= g.n; ++k) {
      double c = k < g.n ? phi.center.x[k] : phi.center.t;
      double half = phi.radii[k];
      double st = g.step(k);
      Index i0 = static_cast<Index>(std::floor((c - half - g.lo(k)) / st - 0.5));
      Index i1 = static_cast<Index>(std::ceil((c + half - g.lo(k)) / st + 0.5));
      b[k] = {std::max<Index>(0, i0), std::min(g.count(k), i1)};
    }
    double pairing = 0.0, mass = 0.0;
    for (int k = 0; k <= g.n; ++k) idx[k] = b[k].first;
    while (true) {
      for (int k = 0; k < g.n; ++k) z.x[k] = g.coord(k, idx[k]);
      z.t = g.coord(g.n, idx[g.n]);
      Index lin = g.linear(idx);
      double pt = phi.dt(z);
      double dot = 0.0, dsum = 0.0;
      for (int k = 0; k < g.n; ++k) {
        double pk = phi.dx(z, k);
        dot += G.comp[k].v[lin] * pk;
        dsum += std::abs(pk);
      }
      pairing += u.v[lin] * pt - dot;
      mass += std::abs(pt) + dsum;
      int k = g.n;
      for (; k >= 0; --k) {
        if (++idx[k] < b[k].second) break;
        idx[k] = b[k].first;
      }
      if (k < 0) break;
    }
    if (mass > 0.0) worst = std::max(worst, std::abs(pairing * meas) / (mass * meas * scale));
  }
  return worst;
}

namespace detail {
// Mirror cell index across the {x_n = 0} plane; the grid must straddle the
// plane symmetrically so reflections are exact cell swaps.
inline Index mirror_plane_index(const Grid& g) {
  const int ax = g.n - 1;
  require(std::abs(g.origin_x[ax]) <= 1e-12, "extension: grid not centered on {x_n = 0}");
  Index k0 = g.count(ax) / 2;
  require(2 * k0 == g.count(ax), "extension: need an even cell count across {x_n = 0}");
  return k0;
}

template <class Fold>
inline ScalarField reflect(const ScalarField& v, Fold&& fold) {
  const Grid& g = v.grid;
  const int ax = g.n - 1;
  Index k0 = mirror_plane_index(g);
  ScalarField out = v;
  std::vector<Index> idx(g.n + 1, 0);
  for (Index lin = 0; lin < g.total; ++lin) {
    if (idx[ax] < k0) {
      std::vector<Index> m = idx;
      m[ax] = 2 * k0 - 1 - idx[ax];
      out.v[lin] = fold(v.v[g.linear(m)]);
    }
    for (int k = g.n; k >= 0; --k) {
      if (++idx[k] < g.counts[k]) break;
      idx[k] = 0;
    }
  }
  return out;
}
}  // namespace detail

inline ScalarField odd_extension(const ScalarField& v) {
  return detail::reflect(v, [](double x) { return -x; });
}

inline ScalarField even_extension(const ScalarField& v) {
  return detail::reflect(v, [](double x) { return x; });
}

// G* = (odd g_1, ..., odd g_{n-1}, even g_n): the mix that preserves the
// divergence-form equation across the reflection.
inline VectorField extend_G_star(const VectorField& G) {
  VectorField out = G;
  const int n = G.size();
  for (int k = 0; k < n - 1; ++k) out.comp[k] = odd_extension(G.comp[k]);
  out.comp[n - 1] = even_extension(G.comp[n - 1]);
  return out;
}

// A distributional solution of u_t = div G on its region, with the measured
// residual gate recorded by the generator that produced it.
struct SolutionPair {
  ScalarField u;
  VectorField G;
  std::optional<VectorField> du;  // analytic spatial gradient when available
  ParabolicRegion region;
  std::string label;
  double declared_tol = 0.0;
  double measured_residual = 0.0;

  const VectorField& gradient() const {
    require(du.has_value(), "SolutionPair: analytic gradient not available");
    return *du;
  }
};

}  // namespace parasp
