#pragma once

#include <cmath>
#include <vector>

#include "parasp/geometry.hpp"
#include "parasp/parallel.hpp"
#include "parasp/summed_area.hpp"
#include "parasp/weights.hpp"

namespace parasp {

namespace detail {
// d^{-e} with integer exponents evaluated by repeated multiplication, so the
// parabolic rescaling identity of the kernel table is exact in floating point.
inline double inv_dist_power(double d, double e) {
  int ei = static_cast<int>(std::lround(e));
  if (std::abs(e - double(ei)) < 1e-12 && ei >= 0) {
    double p = 1.0;
    for (int i = 0; i < ei; ++i) p *= d;
    return 1.0 / p;
  }
  return std::pow(d, -e);
}
}  // namespace detail

// Tabulated values of d_p(0, offset)^{-(n+2-beta)} * h^{n+2} on the offset
// lattice. The zero offset holds the refined-quadrature cell integral of the
// kernel; the singularity is integrable since n+2-beta < n+2.
struct PotentialKernel {
  Grid grid;
  double beta = 1.0;
  std::vector<Index> dims;    // 2 N_k - 1 per axis
  std::vector<Index> stride;
  std::vector<double> table;

  PotentialKernel(const Grid& g, double beta_) : grid(g), beta(beta_) {
    require(beta > 0.0 && beta <= double(g.n + 2), "PotentialKernel: beta out of (0, n+2]");
    const int d = g.dims();
    const double expo = double(g.n + 2) - beta;
    dims.resize(d);
    stride.assign(d, 1);
    Index tot = 1;
    for (int k = d - 1; k >= 0; --k) {
      dims[k] = 2 * g.count(k) - 1;
      stride[k] = tot;
      tot *= dims[k];
    }
    table.assign(tot, 0.0);
    const double meas = g.cell_measure();
    std::vector<Index> o(d, 0);
    for (Index lin = 0; lin < tot; ++lin) {
      double s2 = 0.0;
      for (int k = 0; k < g.n; ++k) {
        double dx = double(o[k] - (g.count(k) - 1)) * g.h;
        s2 += dx * dx;
      }
      double dt = double(o[d - 1] - (g.count(d - 1) - 1)) * g.h * g.h;
      double dist = std::max(std::sqrt(s2), std::sqrt(std::abs(dt)));
      table[lin] = dist > 0.0 ? detail::inv_dist_power(dist, expo) * meas
                              : diagonal_integral(g, expo);
      for (int k = d - 1; k >= 0; --k) {
        if (++o[k] < dims[k]) break;
        o[k] = 0;
      }
    }
  }

  // offsets o_k in [-(N_k - 1), N_k - 1]
  double at_offset(const std::vector<Index>& o) const {
    Index pos = 0;
    for (int k = 0; k < grid.dims(); ++k) pos += (o[k] + grid.count(k) - 1) * stride[k];
    return table[pos];
  }

  // 16^{n+1}-point midpoint quadrature of the kernel over the diagonal cell
  static double diagonal_integral(const Grid& g, double expo) {
    const int q = 16;
    const int d = g.dims();
    std::vector<int> idx(d, 0);
    double sum = 0.0;
    const double subs = g.h / q, subt = g.h * g.h / q;
    while (true) {
      double s2 = 0.0;
      for (int k = 0; k < g.n; ++k) {
        double dx = (-0.5 + (idx[k] + 0.5) / q) * g.h;
        s2 += dx * dx;
      }
      double dt = (-0.5 + (idx[d - 1] + 0.5) / q) * g.h * g.h;
      double dist = std::max(std::sqrt(s2), std::sqrt(std::abs(dt)));
      sum += detail::inv_dist_power(dist, expo);
      int k = d - 1;
      for (; k >= 0; --k) {
        if (++idx[k] < q) break;
        idx[k] = 0;
      }
      if (k < 0) break;
    }
    return sum * ipow(subs, g.n) * subt;
  }
};

// I_beta f(z) = sum over cells of f * kernel(z - cell), f extended by zero
// outside the grid. Each output cell accumulates in fixed lattice order, so
// results are bit-identical for any thread count. Exact zeros of f are
// skipped; compactly supported inputs only pay for their support.
inline ScalarField caloric_riesz(const ScalarField& f, double beta, unsigned threads = 0) {
  const Grid& g = f.grid;
  PotentialKernel ker(g, beta);
  ScalarField out(g);
  const int d = g.dims();

  // gather the nonzero cells once, in lattice order
  std::vector<Index> nz;
  std::vector<Index> nz_multi;
  {
    std::vector<Index> idx(d, 0);
    for (Index lin = 0; lin < g.total; ++lin) {
      if (f.v[lin] != 0.0) {
        nz.push_back(lin);
        for (int k = 0; k < d; ++k) nz_multi.push_back(idx[k]);
      }
      for (int k = d - 1; k >= 0; --k) {
        if (++idx[k] < g.counts[k]) break;
        idx[k] = 0;
      }
    }
  }

  parallel_for(
      g.total,
      [&](Index b, Index e) {
        std::vector<Index> zi(d);
        for (Index lin = b; lin < e; ++lin) {
          g.unlinear(lin, zi);
          double acc = 0.0;
          for (std::size_t s = 0; s < nz.size(); ++s) {
            Index pos = 0;
            for (int k = 0; k < d; ++k)
              pos += (zi[k] - nz_multi[s * d + k] + g.count(k) - 1) * ker.stride[k];
            acc += f.v[nz[s]] * ker.table[pos];
          }
          out.v[lin] = acc;
        }
      },
      threads);
  return out;
}

// Centered parabolic maximal function: at each cell center the sup over
// radii s = m*h of the mean of |f| over Q_s, with f zero outside the grid.
// The m = 1 window is the cell itself, so Mf >= |f| pointwise.
inline ScalarField parabolic_maximal(const ScalarField& f, unsigned threads = 0) {
  const Grid& g = f.grid;
  SummedAreaTable sat(f, [](double x) { return std::abs(x); });
  ScalarField out(g);
  const int d = g.dims();
  Index m_max = 1;
  for (int k = 0; k < g.n; ++k) m_max = std::max(m_max, g.count(k));
  m_max = std::max(m_max, static_cast<Index>(std::ceil(std::sqrt(double(g.count(g.n))))) + 1);

  parallel_for(
      g.total,
      [&](Index b, Index e) {
        std::vector<Index> zi(d), lo(d), hi(d);
        for (Index lin = b; lin < e; ++lin) {
          g.unlinear(lin, zi);
          double best = 0.0;
          for (Index m = 1; m <= m_max; ++m) {
            for (int k = 0; k < g.n; ++k) {
              lo[k] = zi[k] - m + 1;
              hi[k] = zi[k] + m;
            }
            lo[g.n] = zi[g.n] - m * m + 1;
            hi[g.n] = zi[g.n] + m * m;
            double cnt = ipow(2.0 * double(m) - 1.0, g.n) * (2.0 * double(m) * double(m) - 1.0);
            best = std::max(best, sat.box(lo, hi) / cnt);
          }
          out.v[lin] = best;
        }
      },
      threads);
  return out;
}

inline double weighted_lp_norm(const ScalarField& f, const WeightField& w, double p,
                               const ParabolicRegion& region) {
  require(p >= 1.0, "weighted_lp_norm: requires p >= 1");
  require(f.grid == w.grid(), "weighted_lp_norm: field and weight on different grids");
  auto cells = cells_of(f.grid, region);
  double s = 0.0;
  for (Index c : cells) s += std::pow(std::abs(f.v[c]), p) * w.values.v[c];
  return std::pow(s * f.grid.cell_measure(), 1.0 / p);
}

inline double maximal_boundedness_ratio(const ScalarField& f, const WeightField& w, double p,
                                        unsigned threads = 0) {
  require(p > 1.0, "maximal_boundedness_ratio: requires p > 1");
  ParabolicRegion dom = domain_region(f.grid);
  double den = weighted_lp_norm(f, w, p, dom);
  require(den > 0.0, "maximal_boundedness_ratio: f vanishes identically");
  ScalarField mf = parabolic_maximal(f, threads);
  return weighted_lp_norm(mf, w, p, dom) / den;
}

}  // namespace parasp
