#pragma once

#include <vector>

#include "parasp/grid.hpp"

namespace parasp {

// (n+1)-dimensional summed-area table over the cell lattice. Entry at
// multi-index i holds the sum of all cells with index strictly below i on
// every axis, so any axis-aligned box sum is 2^(n+1) lookups.
struct SummedAreaTable {
  std::vector<Index> dims;    // cell counts per axis
  std::vector<Index> stride;  // strides of the (dims+1)-shaped table
  std::vector<double> s;

  SummedAreaTable() = default;

  template <class Transform>
  SummedAreaTable(const ScalarField& f, Transform&& tf) {
    build(f, std::forward<Transform>(tf));
  }

  explicit SummedAreaTable(const ScalarField& f) {
    build(f, [](double x) { return x; });
  }

  template <class Transform>
  void build(const ScalarField& f, Transform&& tf) {
    const Grid& g = f.grid;
    const int d = g.dims();
    dims = g.counts;
    stride.assign(d, 1);
    Index tot = 1;
    for (int k = d - 1; k >= 0; --k) {
      stride[k] = tot;
      tot *= dims[k] + 1;
    }
    s.assign(tot, 0.0);
    // scatter values into the interior (offset by one on every axis)
    std::vector<Index> idx(d, 0);
    for (Index lin = 0; lin < g.total; ++lin) {
      Index pos = 0;
      for (int k = 0; k < d; ++k) pos += (idx[k] + 1) * stride[k];
      s[pos] = tf(f.v[lin]);
      for (int k = d - 1; k >= 0; --k) {
        if (++idx[k] < dims[k]) break;
        idx[k] = 0;
      }
    }
    // prefix-sum along each axis in turn
    for (int k = 0; k < d; ++k) {
      Index nk = dims[k] + 1;
      Index outer = tot / nk;
      std::vector<Index> rest(d, 0);
      for (Index o = 0; o < outer; ++o) {
        // decode o over the remaining axes
        Index rem = o, base = 0;
        for (int j = d - 1; j >= 0; --j) {
          if (j == k) continue;
          Index nj = dims[j] + 1;
          base += (rem % nj) * stride[j];
          rem /= nj;
        }
        double acc = 0.0;
        for (Index i = 0; i < nk; ++i) {
          acc += s[base + i * stride[k]];
          s[base + i * stride[k]] = acc;
        }
      }
    }
  }

  // Sum of cells with index in [lo_k, hi_k) per axis; ranges are clipped to
  // the lattice, so boxes poking outside see an implicit zero extension.
  double box(const std::vector<Index>& lo, const std::vector<Index>& hi) const {
    const int d = static_cast<int>(dims.size());
    double total = 0.0;
    for (unsigned mask = 0; mask < (1u << d); ++mask) {
      Index pos = 0;
      int bits = 0;
      for (int k = 0; k < d; ++k) {
        Index a = std::max<Index>(0, std::min(lo[k], dims[k]));
        Index b = std::max<Index>(0, std::min(hi[k], dims[k]));
        if (b < a) b = a;
        if (mask & (1u << k)) {
          pos += b * stride[k];
          ++bits;
        } else {
          pos += a * stride[k];
        }
      }
      total += ((d - bits) % 2 == 0) ? s[pos] : -s[pos];
    }
    return total;
  }
};

}  // namespace parasp
