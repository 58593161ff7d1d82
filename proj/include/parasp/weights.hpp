#pragma once

#include <cmath>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "parasp/geometry.hpp"
#include "parasp/summed_area.hpp"

namespace parasp {

// Positive weight identified with the measure w(E) = sum of w over E's cells
// times the cell measure. Values are clamped at 1e-300 so w^{-1/(p-1)} stays
// finite.
struct WeightField {
  ScalarField values;
  std::string label;

  WeightField() = default;
  WeightField(ScalarField f, std::string label_) : values(std::move(f)), label(std::move(label_)) {
    for (double& x : values.v) {
      require(std::isfinite(x) && x >= 0.0, "WeightField: values must be finite and nonnegative");
      if (x < 1e-300) x = 1e-300;
    }
  }

  static WeightField constant(const Grid& g, double c = 1.0, std::string label = "const") {
    return WeightField(ScalarField::sample(g, [c](const Point&) { return c; }), std::move(label));
  }

  const Grid& grid() const { return values.grid; }
};

inline double weighted_measure(const WeightField& w, const ParabolicRegion& reg) {
  auto cells = cells_of(w.grid(), reg);
  double s = 0.0;
  for (Index c : cells) s += w.values.v[c];
  return s * w.grid().cell_measure();
}

inline double weighted_sum(const WeightField& w, const std::vector<Index>& cells) {
  double s = 0.0;
  for (Index c : cells) s += w.values.v[c];
  return s * w.grid().cell_measure();
}

// Grid-aligned parabolic cube: center on the vertex lattice, radius m*h, so
// the cube is an exact union of (2m)^n * 2m^2 cells.
struct CubeSpec {
  Point center;
  double r = 0.0;
};

struct ApReport {
  double p = 0.0;
  double value = 0.0;
  CubeSpec witness;
  Index cube_count = 0;
  std::string label;
};

// Enumerates every grid-aligned parabolic cube up to a radius cap and takes
// the sup of (mean w) * (mean w^{-1/(p-1)})^{p-1}. Summed-area tables make
// each cube O(2^{n+1}); tables are built once per exponent and cached.
class ApScanner {
 public:
  explicit ApScanner(WeightField w) : w_(std::move(w)), sat_w_(w_.values) {}

  const WeightField& weight() const { return w_; }

  double radius_cap() const {
    const Grid& g = w_.grid();
    double cap = g.space_half[0];
    for (double sh : g.space_half) cap = std::min(cap, sh);
    cap = std::min(cap, std::sqrt(g.time_half));
    return cap;
  }

  ApReport characteristic(double p, double max_radius) const {
    const Grid& g = w_.grid();
    require(p > 1.0, "ap_characteristic: requires p > 1");
    Index m_max = static_cast<Index>(std::floor(max_radius / g.h + 1e-9));
    require(m_max >= 1, "ap_characteristic: grid too small for any cube at this radius");
    const double dual_exp = -1.0 / (p - 1.0);
    const SummedAreaTable& sat_dual = pow_table(dual_exp);

    ApReport rep;
    rep.p = p;
    rep.label = w_.label;
    rep.value = 0.0;
    const int d = g.dims();
    std::vector<Index> lo(d), hi(d), vtx(d);
    for (Index m = 1; m <= m_max; ++m) {
      bool fits = 2 * m * m <= g.count(g.n);
      for (int k = 0; k < g.n && fits; ++k) fits = 2 * m <= g.count(k);
      if (!fits) continue;
      double cnt = ipow(2.0 * double(m), g.n) * (2.0 * double(m) * double(m));
      // vertex v on axis k admits the cube when m <= v <= N_k - m
      for (int k = 0; k < g.n; ++k) vtx[k] = m;
      vtx[g.n] = m * m;
      while (true) {
        for (int k = 0; k < g.n; ++k) {
          lo[k] = vtx[k] - m;
          hi[k] = vtx[k] + m;
        }
        lo[g.n] = vtx[g.n] - m * m;
        hi[g.n] = vtx[g.n] + m * m;
        double mw = sat_w_.box(lo, hi) / cnt;
        double md = sat_dual.box(lo, hi) / cnt;
        double prod = mw * std::pow(md, p - 1.0);
        ++rep.cube_count;
        if (prod > rep.value) {
          rep.value = prod;
          rep.witness.r = double(m) * g.h;
          rep.witness.center.x.resize(g.n);
          for (int k = 0; k < g.n; ++k)
            rep.witness.center.x[k] = g.lo(k) + double(vtx[k]) * g.h;
          rep.witness.center.t = g.lo(g.n) + double(vtx[g.n]) * g.h * g.h;
        }
        int k = g.n;
        for (; k >= 0; --k) {
          Index top = (k == g.n) ? g.count(g.n) - m * m : g.count(k) - m;
          Index bot = (k == g.n) ? m * m : m;
          if (++vtx[k] <= top) break;
          vtx[k] = bot;
        }
        if (k < 0) break;
      }
    }
    require(rep.cube_count > 0, "ap_characteristic: no admissible cube fits the grid");
    return rep;
  }

  // mean of w^e over a grid-aligned box, via the cached tables
  const SummedAreaTable& pow_table(double e) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = tables_.find(e);
    if (it == tables_.end()) {
      it = tables_.emplace(e, SummedAreaTable(w_.values, [e](double x) { return std::pow(x, e); }))
               .first;
    }
    return it->second;
  }

  const SummedAreaTable& w_table() const { return sat_w_; }

 private:
  WeightField w_;
  SummedAreaTable sat_w_;
  mutable std::map<double, SummedAreaTable> tables_;
  mutable std::mutex mu_;
};

inline ApReport ap_characteristic(const WeightField& w, double p, double max_radius) {
  return ApScanner(w).characteristic(p, max_radius);
}

struct DoublingReport {
  double worst_ratio = 0.0;
  double bound = 0.0;
  bool within_bound = true;
  CubeSpec worst;
};

// max over the sampled cubes of w(Q_{2r})/w(Q_r), compared against the
// characteristic-based bound [w]_p * 2^{p(n+2)}.
inline DoublingReport doubling_check(const WeightField& w, double p,
                                     const std::vector<CubeSpec>& cubes) {
  require(!cubes.empty(), "doubling_check: no cubes given");
  double max_r = 0.0;
  for (const auto& c : cubes) max_r = std::max(max_r, 2.0 * c.r);
  ApReport ap = ap_characteristic(w, p, max_r);
  DoublingReport rep;
  rep.bound = ap.value * std::pow(2.0, p * double(w.grid().n + 2));
  for (const auto& c : cubes) {
    double num = weighted_measure(w, ParabolicRegion::cube(c.center, 2.0 * c.r));
    double den = weighted_measure(w, ParabolicRegion::cube(c.center, c.r));
    double ratio = num / den;
    if (ratio > rep.worst_ratio) {
      rep.worst_ratio = ratio;
      rep.worst = c;
    }
  }
  rep.within_bound = rep.worst_ratio <= rep.bound * (1.0 + 1e-12);
  return rep;
}

struct SubregionRatio {
  double ratio = 0.0;
  double bound = 0.0;
};

// w(Q)/w(A) for A ⊂ Q against [w]_p (|Q|/|A|)^p; exact discrete Hölder
// consequence when the enclosing cube is grid-aligned and enumerated.
inline SubregionRatio subregion_ratio_check(const WeightField& w, double p,
                                            const ParabolicRegion& cube,
                                            const ParabolicRegion& subregion) {
  auto qc = cells_of(w.grid(), cube);
  auto ac = cells_of(w.grid(), subregion);
  // containment of the cell sets
  std::size_t i = 0;
  for (Index c : ac) {
    while (i < qc.size() && qc[i] < c) ++i;
    require(i < qc.size() && qc[i] == c, "subregion_ratio_check: subregion not inside cube");
  }
  SubregionRatio out;
  out.ratio = weighted_sum(w, qc) / weighted_sum(w, ac);
  double apv = ap_characteristic(w, p, cube.r).value;
  out.bound = apv * std::pow(double(qc.size()) / double(ac.size()), p);
  return out;
}

struct AqResult {
  double q = 0.0;
  double aq_value = 0.0;
  bool fallback = false;
};

// Smallest candidate q in (1, p) with q > p/(n+2) whose [w]_q stays under
// the budget (default 4[w]_p). Falls back to q = p, flagged, when none does.
inline AqResult find_aq_index(const WeightField& w, double p, std::vector<double> candidates = {},
                              double budget = 0.0, double max_radius = 0.0) {
  require(p > 1.0, "find_aq_index: requires p > 1");
  ApScanner scan(w);
  if (max_radius <= 0.0) max_radius = scan.radius_cap();
  if (candidates.empty()) {
    for (int j = 6; j >= 1; --j) candidates.push_back(1.0 + (p - 1.0) / double(1 << j));
  }
  std::sort(candidates.begin(), candidates.end());
  if (budget <= 0.0) budget = 4.0 * scan.characteristic(p, max_radius).value;
  double qmin = p / double(w.grid().n + 2);
  for (double q : candidates) {
    if (!(q > 1.0 && q < p && q > qmin)) continue;
    double v = scan.characteristic(q, max_radius).value;
    if (v <= budget) return {q, v, false};
  }
  return {p, scan.characteristic(p, max_radius).value, true};
}

struct ReverseHolder {
  double eps0 = 0.0;
  double c = 0.0;
};

// Largest eps0 on the scan grid {0.05 j} such that the (1+eps0)-power mean
// of w stays within c_budget of the plain mean over the whole cube family;
// returns the smallest admissible c for that eps0.
inline ReverseHolder reverse_holder_exponent(const WeightField& w, double p,
                                             const std::vector<ParabolicRegion>& cube_family,
                                             double c_budget = 10.0, int scan_steps = 60) {
  (void)p;  // enters only through the family the caller chose
  require(!cube_family.empty(), "reverse_holder_exponent: empty cube family");
  std::vector<std::vector<Index>> cells;
  cells.reserve(cube_family.size());
  for (const auto& q : cube_family) cells.push_back(cells_of(w.grid(), q));

  auto required_c = [&](double eps) {
    double worst = 0.0;
    for (const auto& cc : cells) {
      double mw = 0.0, mp = 0.0;
      for (Index c : cc) {
        mw += w.values.v[c];
        mp += std::pow(w.values.v[c], 1.0 + eps);
      }
      mw /= double(cc.size());
      mp /= double(cc.size());
      worst = std::max(worst, std::pow(mp, 1.0 / (1.0 + eps)) / mw);
    }
    return worst;
  };

  ReverseHolder best{0.05, required_c(0.05)};
  for (int j = 1; j <= scan_steps; ++j) {
    double eps = 0.05 * double(j);
    double c = required_c(eps);
    if (c <= c_budget) best = {eps, c};
  }
  return best;
}

struct SliceGapReport {
  double parabolic = 0.0;
  double slice_max = 0.0;
  Index slice_index = -1;
  double gap = 0.0;
};

// Elliptic (spatial-cube) A_p product sup on each time slice versus the
// parabolic characteristic; exhibits weights whose slices are much worse
// than the space-time weight. The slice scan is purely spatial, so its cubes
// run up to the spatial half-width regardless of the time extent.
inline SliceGapReport slice_ap_gap(const WeightField& w, double p, double max_radius = 0.0) {
  const Grid& g = w.grid();
  ApScanner scan(w);
  if (max_radius <= 0.0) max_radius = scan.radius_cap();
  SliceGapReport rep;
  rep.parabolic = scan.characteristic(p, max_radius).value;

  const SummedAreaTable& sw = scan.w_table();
  const SummedAreaTable& sd = scan.pow_table(-1.0 / (p - 1.0));
  double space_cap = g.space_half[0];
  for (double sh : g.space_half) space_cap = std::min(space_cap, sh);
  Index m_max = static_cast<Index>(std::floor(space_cap / g.h + 1e-9));
  const int d = g.dims();
  std::vector<Index> lo(d), hi(d), vtx(g.n);
  for (Index l = 0; l < g.count(g.n); ++l) {
    lo[g.n] = l;
    hi[g.n] = l + 1;
    double best = 0.0;
    for (Index m = 1; m <= m_max; ++m) {
      bool fits = true;
      for (int k = 0; k < g.n && fits; ++k) fits = 2 * m <= g.count(k);
      if (!fits) break;
      double cnt = ipow(2.0 * double(m), g.n);
      for (int k = 0; k < g.n; ++k) vtx[k] = m;
      while (true) {
        for (int k = 0; k < g.n; ++k) {
          lo[k] = vtx[k] - m;
          hi[k] = vtx[k] + m;
        }
        double mw = sw.box(lo, hi) / cnt;
        double md = sd.box(lo, hi) / cnt;
        best = std::max(best, mw * std::pow(md, p - 1.0));
        int k = g.n - 1;
        for (; k >= 0; --k) {
          if (++vtx[k] <= g.count(k) - m) break;
          vtx[k] = m;
        }
        if (k < 0) break;
      }
    }
    if (best > rep.slice_max) {
      rep.slice_max = best;
      rep.slice_index = l;
    }
  }
  rep.gap = rep.slice_max / rep.parabolic;
  return rep;
}

}  // namespace parasp
