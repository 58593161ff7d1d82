#pragma once

#include <cmath>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "parasp/calculus.hpp"
#include "parasp/generators.hpp"
#include "parasp/operators.hpp"
#include "parasp/parallel.hpp"

namespace parasp {

// One verified inequality instance: lhs/rhs estimates the theorem's constant
// on this input. Ratios, not absolute pass/fail, are the primitive output;
// budgets are opt-in.
struct InequalityReport {
  std::string theorem;
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
  int n = 0;
  double p = 1.0;
  double k_or_gamma = 1.0;
  double r = 0.0;
  double alpha = 1.0;
  std::string weight_label;
  std::string solution_label;
  double budget = std::numeric_limits<double>::infinity();
  bool pass = true;

  void finalize() {
    if (rhs > 0.0)
      ratio = lhs / rhs;
    else
      ratio = lhs == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    pass = std::isfinite(ratio) && ratio <= budget;
  }
};

inline double estimate_constant(const std::vector<InequalityReport>& reports) {
  double c = 0.0;
  for (const auto& r : reports) c = std::max(c, r.ratio);
  return c;
}

// Verifies battery elements independently across threads; reports land at
// their battery index, so the merged order is deterministic.
template <class F>
std::vector<InequalityReport> verify_battery(std::size_t count, F&& fn, unsigned threads = 0) {
  std::vector<InequalityReport> out(count);
  std::exception_ptr err = nullptr;
  std::mutex mu;
  parallel_for(
      static_cast<Index>(count),
      [&](Index b, Index e) {
        for (Index i = b; i < e; ++i) {
          try {
            out[std::size_t(i)] = fn(std::size_t(i));
          } catch (...) {
            std::lock_guard<std::mutex> lock(mu);
            if (!err) err = std::current_exception();
          }
        }
      },
      threads);
  if (err) std::rethrow_exception(err);
  return out;
}

// k = q(n+2)/(q(n+2)-p) and delta = k - (n+2)/(n+1); the unweighted case
// q -> 1 gives k = (n+2)/(n+2-p) when p < n+2.
struct KFormula {
  int n = 0;
  double p = 0.0;
  double q = 0.0;
  double k = 0.0;
  double delta = 0.0;
};

inline KFormula predicted_k(int n, double p, double q) {
  double den = q * double(n + 2) - p;
  require(den > 0.0, "predicted_k: q(n+2) must exceed p");
  KFormula f;
  f.n = n;
  f.p = p;
  f.q = q;
  f.k = q * double(n + 2) / den;
  f.delta = f.k - double(n + 2) / double(n + 1);
  return f;
}

namespace detail {

struct RegionData {
  std::vector<Index> cells;
  double w_sum = 0.0;  // plain sum of w over the cells (no cell measure)
};

inline RegionData region_data(const Grid& g, const WeightField& w, const ParabolicRegion& reg) {
  require(g == w.grid(), "verifier: weight on a different grid");
  RegionData rd;
  rd.cells = cells_of(g, reg);
  for (Index c : rd.cells) rd.w_sum += w.values.v[c];
  return rd;
}

// (sum |v(c)|^e w(c) / sum w)^{1/e}
template <class V>
double weighted_power_mean(const RegionData& rd, const WeightField& w, double e, V&& value) {
  double s = 0.0;
  for (Index c : rd.cells) s += std::pow(std::abs(value(c)), e) * w.values.v[c];
  return std::pow(s / rd.w_sum, 1.0 / e);
}

inline VectorField gradient_of(const SolutionPair& pair) {
  return pair.du.has_value() ? *pair.du : spatial_gradient(pair.u);
}

}  // namespace detail

// fint_C |u - (u)_C| <= c r fint_C |Du| + c alpha r fint_C |G|; the reported
// ratio is lhs over the c-free right side.
inline InequalityReport verify_poincare(const SolutionPair& pair, const ParabolicRegion& C,
                                        double budget = std::numeric_limits<double>::infinity()) {
  if (C.kind == RegionKind::rectangle) {
    for (double ri : C.radii)
      require(ri >= 0.5 * C.r - 1e-12 && ri <= 2.0 * C.r + 1e-12,
              "verify_poincare: rectangle radii must satisfy r/2 <= r_i <= 2r");
  }
  const Grid& g = pair.u.grid;
  auto cells = cells_of(g, C);
  double um = mean_over(pair.u, cells);
  VectorField du = detail::gradient_of(pair);
  double l = 0.0, md = 0.0, mg = 0.0;
  for (Index c : cells) {
    l += std::abs(pair.u.v[c] - um);
    md += du.norm_at(c);
    mg += pair.G.norm_at(c);
  }
  double cnt = double(cells.size());
  InequalityReport rep;
  rep.theorem = "poincare";
  rep.n = g.n;
  rep.p = 1.0;
  rep.k_or_gamma = 1.0;
  rep.r = C.r;
  rep.alpha = C.alpha;
  rep.weight_label = "none";
  rep.solution_label = pair.label;
  rep.budget = budget;
  rep.lhs = l / cnt;
  rep.rhs = C.r * (md / cnt) + C.alpha * C.r * (mg / cnt);
  rep.finalize();
  return rep;
}

// Main inequality: w-normalized pk-mean of |u - (u)_Q| against
// r * (w-normalized p-mean of (|Du| + |G|)^p)^{1/p}. The subtracted mean is
// always the unweighted one.
inline InequalityReport verify_sobolev_poincare(
    const SolutionPair& pair, const WeightField& w, double p, double k,
    const ParabolicRegion& region, double budget = std::numeric_limits<double>::infinity()) {
  require(k >= 1.0, "verify_sobolev_poincare: requires k >= 1");
  const Grid& g = pair.u.grid;
  auto rd = detail::region_data(g, w, region);
  double um = mean_over(pair.u, rd.cells);
  VectorField du = detail::gradient_of(pair);

  InequalityReport rep;
  rep.theorem = "sobolev_poincare";
  rep.n = g.n;
  rep.p = p;
  rep.k_or_gamma = k;
  rep.r = region.r;
  rep.alpha = region.alpha;
  rep.weight_label = w.label;
  rep.solution_label = pair.label;
  rep.budget = budget;
  rep.lhs = detail::weighted_power_mean(rd, w, p * k,
                                        [&](Index c) { return pair.u.v[c] - um; });
  rep.rhs = region.r * detail::weighted_power_mean(
                           rd, w, p, [&](Index c) { return du.norm_at(c) + pair.G.norm_at(c); });
  rep.finalize();
  return rep;
}

// Higher integrability of the caloric Riesz potential: w-normalized pk-mean
// of I_1|f| over the region against r times the w-normalized p-mean of |f|.
// f must vanish outside the region.
inline InequalityReport verify_riesz_lemma(const ScalarField& f, const WeightField& w, double p,
                                           double k, const ParabolicRegion& region,
                                           double budget = std::numeric_limits<double>::infinity(),
                                           unsigned threads = 0) {
  const Grid& g = f.grid;
  auto rd = detail::region_data(g, w, region);
  {
    std::size_t i = 0;
    for (Index c = 0; c < g.total; ++c) {
      while (i < rd.cells.size() && rd.cells[i] < c) ++i;
      bool inside = i < rd.cells.size() && rd.cells[i] == c;
      if (!inside)
        require(f.v[c] == 0.0, "verify_riesz_lemma: f must vanish outside the region");
    }
  }
  ScalarField absf(g);
  for (Index c = 0; c < g.total; ++c) absf.v[c] = std::abs(f.v[c]);
  ScalarField pot = caloric_riesz(absf, 1.0, threads);

  InequalityReport rep;
  rep.theorem = "riesz_lemma";
  rep.n = g.n;
  rep.p = p;
  rep.k_or_gamma = k;
  rep.r = region.r;
  rep.alpha = region.alpha;
  rep.weight_label = w.label;
  rep.solution_label = "f";
  rep.budget = budget;
  rep.lhs = detail::weighted_power_mean(rd, w, p * k, [&](Index c) { return pot.v[c]; });
  rep.rhs = region.r * detail::weighted_power_mean(rd, w, p, [&](Index c) { return f.v[c]; });
  rep.finalize();
  return rep;
}

// gamma range fixed by 1 < (k-1) gamma / (k - gamma) < 1 + eps0.
inline std::pair<double, double> admissible_gamma_interval(double k, double eps0) {
  require(k > 1.0 && eps0 > 0.0, "admissible_gamma_interval: need k > 1 and eps0 > 0");
  return {1.0, (1.0 + eps0) * k / (k + eps0)};
}

// |u|^p w in L^gamma: |Q|-normalized gamma-mean of |u-(u)|^p w against
// r * (|Q|-normalized mean of (|Du|^p + |G|^p) w)^{1/p}.
inline InequalityReport verify_higher_integrability(
    const SolutionPair& pair, const WeightField& w, double p, double k, double gamma,
    const ParabolicRegion& region, double budget = std::numeric_limits<double>::infinity()) {
  require(gamma > 1.0 && gamma < k, "verify_higher_integrability: gamma must lie in (1, k)");
  const Grid& g = pair.u.grid;
  auto rd = detail::region_data(g, w, region);
  double um = mean_over(pair.u, rd.cells);
  VectorField du = detail::gradient_of(pair);
  double cnt = double(rd.cells.size());

  double ls = 0.0, rs = 0.0;
  for (Index c : rd.cells) {
    double dev = std::pow(std::abs(pair.u.v[c] - um), p) * w.values.v[c];
    ls += std::pow(dev, gamma);
    rs += (std::pow(du.norm_at(c), p) + std::pow(pair.G.norm_at(c), p)) * w.values.v[c];
  }
  InequalityReport rep;
  rep.theorem = "higher_integrability";
  rep.n = g.n;
  rep.p = p;
  rep.k_or_gamma = gamma;
  rep.r = region.r;
  rep.alpha = region.alpha;
  rep.weight_label = w.label;
  rep.solution_label = pair.label;
  rep.budget = budget;
  rep.lhs = std::pow(ls / cnt, 1.0 / (p * gamma));
  rep.rhs = region.r * std::pow(rs / cnt, 1.0 / p);
  rep.finalize();
  return rep;
}

enum class BoundaryMode { flat, initial };

struct BoundaryReport {
  InequalityReport ineq;
  double trace_gate_value = 0.0;
  double trace_gate_bound = 0.0;
  double extension_residual = 0.0;
  double extension_lhs = 0.0;  // lhs of the extended pair on the full region
  double weight_ratio = 1.0;   // w(Q_r) / w(Q_r^+)
  double weight_ratio_bound = 1.0;
  bool cross_check_ok = true;
};

// Boundary inequality (no mean subtraction). In flat mode the zero-trace
// gate must pass, and the odd/even extension pipeline is cross-checked on
// the full region: the half lhs is dominated by the extended lhs scaled by
// (w(Q_r)/w(Q_r^+))^{1/(pk)}, an identity of the discrete sums.
inline BoundaryReport verify_boundary(const SolutionPair& pair, const WeightField& w, double p,
                                      double k, BoundaryMode mode,
                                      double budget = std::numeric_limits<double>::infinity()) {
  const Grid& g = pair.u.grid;
  const ParabolicRegion& region = pair.region;
  BoundaryReport out;
  VectorField du = detail::gradient_of(pair);

  if (mode == BoundaryMode::flat) {
    require(region.is_half() && region.clip == HalfClip::space,
            "verify_boundary(flat): pair must live on a spatial half region");
    FlatBoundary tb = FlatBoundary::of(g, region);
    double lip = 0.0;
    auto rd = detail::region_data(g, w, region);
    for (Index c : rd.cells) lip = std::max(lip, std::abs(du.comp[g.n - 1].v[c]));
    for (Index c : tb.layer_cells)
      out.trace_gate_value = std::max(out.trace_gate_value, std::abs(pair.u.v[c]));
    out.trace_gate_bound = lip * (g.h / 2.0) * 2.0;
    require(out.trace_gate_value <= out.trace_gate_bound + 1e-14,
            "verify_boundary: zero-trace gate failed for " + pair.label);

    out.ineq.theorem = "boundary_flat";
    out.ineq.lhs =
        detail::weighted_power_mean(rd, w, p * k, [&](Index c) { return pair.u.v[c]; });
    out.ineq.rhs = region.r * detail::weighted_power_mean(rd, w, p, [&](Index c) {
      return du.norm_at(c) + pair.G.norm_at(c);
    });

    // extension pipeline on the full region
    ParabolicRegion full = region.unclipped();
    SolutionPair ext;
    ext.u = odd_extension(pair.u);
    ext.G = extend_G_star(pair.G);
    ext.du = extend_G_star(du);  // same odd/odd/even pattern as G*
    ext.region = full;
    ext.label = pair.label + "+odd_extension";
    out.extension_residual =
        divergence_residual(ext.u, ext.G, full, test_battery(full, gen::kPhiCount, gen::kPhiSeed));
    InequalityReport full_rep = verify_sobolev_poincare(ext, w, p, k, full);
    out.extension_lhs = full_rep.lhs;

    auto full_cells = cells_of(g, full);
    double w_full = 0.0;
    for (Index c : full_cells) w_full += w.values.v[c];
    out.weight_ratio = w_full / rd.w_sum;
    double apv = ap_characteristic(w, p, region.r).value;
    out.weight_ratio_bound =
        apv * std::pow(double(full_cells.size()) / double(rd.cells.size()), p);
    out.cross_check_ok =
        out.ineq.lhs <=
        out.extension_lhs * std::pow(out.weight_ratio, 1.0 / (p * k)) * (1.0 + 1e-12);
  } else {
    require(!region.is_half(), "verify_boundary(initial): pair must live on the full region");
    auto rd = detail::region_data(g, w, region);
    // vanishing-initial gate: the earliest time layer of the region carries
    // no appreciable mass of |u|
    Index l_min = std::numeric_limits<Index>::max();
    std::vector<Index> idx;
    for (Index c : rd.cells) {
      g.unlinear(c, idx);
      l_min = std::min(l_min, idx[g.n]);
    }
    double layer = 0.0, layer_cnt = 0.0, total = 0.0;
    for (Index c : rd.cells) {
      g.unlinear(c, idx);
      total += std::abs(pair.u.v[c]);
      if (idx[g.n] == l_min) {
        layer += std::abs(pair.u.v[c]);
        layer_cnt += 1.0;
      }
    }
    out.trace_gate_value = layer / layer_cnt;
    out.trace_gate_bound =
        std::max(0.05 * total / double(rd.cells.size()), 1e-12 * pair.u.max_abs());
    require(out.trace_gate_value <= out.trace_gate_bound,
            "verify_boundary: zero-initial gate failed for " + pair.label);

    out.ineq.theorem = "boundary_initial";
    out.ineq.lhs =
        detail::weighted_power_mean(rd, w, p * k, [&](Index c) { return pair.u.v[c]; });
    out.ineq.rhs = region.r * detail::weighted_power_mean(rd, w, p, [&](Index c) {
      return du.norm_at(c) + pair.G.norm_at(c);
    });
  }

  out.ineq.n = g.n;
  out.ineq.p = p;
  out.ineq.k_or_gamma = k;
  out.ineq.r = region.r;
  out.ineq.alpha = region.alpha;
  out.ineq.weight_label = w.label;
  out.ineq.solution_label = pair.label;
  out.ineq.budget = budget;
  out.ineq.finalize();
  return out;
}

struct GradientReport {
  InequalityReport ineq;
  std::vector<InequalityReport> components;  // proof path v_i = u_{x_i}, G^i = u_t e_i
  std::vector<double> component_direct_lhs;  // same quantities, direct evaluation
};

namespace detail {
// SolutionPair carrying v_i = u_{x_i} with G^i = u_t e_i and Dv_i = row i of
// the Hessian: the reduction the interior gradient theorem's proof uses.
inline SolutionPair component_pair(const W21Function& f, int i, const ParabolicRegion& region) {
  const Grid& g = f.u.grid;
  SolutionPair p;
  p.u = f.du.comp[i];
  p.G = VectorField(g);
  p.G.comp[i] = f.ut;
  VectorField row(g);
  for (int j = 0; j < g.n; ++j) row.comp[j] = f.hess(i, j);
  p.du = std::move(row);
  p.region = region;
  p.label = f.label + "/v_" + std::to_string(i + 1);
  return p;
}

inline double frobenius_at(const W21Function& f, Index c) {
  double s = 0.0;
  for (const auto& hf : f.d2u) s += hf.v[c] * hf.v[c];
  return std::sqrt(s);
}
}  // namespace detail

// Gradient Sobolev-Poincaré: w-normalized pk-mean of |Du - (Du)_Q| against
// r * (w-normalized p-mean of |D^2u|^p + |u_t|^p)^{1/p}.
inline GradientReport verify_gradient_sp(const W21Function& f, const WeightField& w, double p,
                                         double k, const ParabolicRegion& region,
                                         double budget = std::numeric_limits<double>::infinity()) {
  const Grid& g = f.u.grid;
  auto rd = detail::region_data(g, w, region);
  const int n = g.n;
  std::vector<double> dm(n);
  for (int i = 0; i < n; ++i) dm[i] = mean_over(f.du.comp[i], rd.cells);

  GradientReport out;
  out.ineq.theorem = "gradient_interior";
  out.ineq.lhs = detail::weighted_power_mean(rd, w, p * k, [&](Index c) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      double d = f.du.comp[i].v[c] - dm[i];
      s += d * d;
    }
    return std::sqrt(s);
  });
  {
    double rs = 0.0;
    for (Index c : rd.cells)
      rs += (std::pow(detail::frobenius_at(f, c), p) + std::pow(std::abs(f.ut.v[c]), p)) *
            w.values.v[c];
    out.ineq.rhs = region.r * std::pow(rs / rd.w_sum, 1.0 / p);
  }
  for (int i = 0; i < n; ++i) {
    out.components.push_back(
        verify_sobolev_poincare(detail::component_pair(f, i, region), w, p, k, region));
    out.component_direct_lhs.push_back(detail::weighted_power_mean(
        rd, w, p * k, [&](Index c) { return f.du.comp[i].v[c] - dm[i]; }));
  }
  out.ineq.n = n;
  out.ineq.p = p;
  out.ineq.k_or_gamma = k;
  out.ineq.r = region.r;
  out.ineq.alpha = region.alpha;
  out.ineq.weight_label = w.label;
  out.ineq.solution_label = f.label;
  out.ineq.budget = budget;
  out.ineq.finalize();
  return out;
}

// Boundary variant: tangential derivatives enter without mean subtraction,
// the normal one with it, exactly as in the displayed inequality. Gates on
// the zero trace of u.
inline GradientReport verify_gradient_boundary(
    const W21Function& f, const WeightField& w, double p, double k, const ParabolicRegion& half,
    double budget = std::numeric_limits<double>::infinity()) {
  require(half.is_half() && half.clip == HalfClip::space,
          "verify_gradient_boundary: needs a spatial half region");
  const Grid& g = f.u.grid;
  const int n = g.n;
  auto rd = detail::region_data(g, w, half);

  FlatBoundary tb = FlatBoundary::of(g, half);
  double lip = 0.0, trace = 0.0;
  for (Index c : rd.cells) lip = std::max(lip, std::abs(f.du.comp[n - 1].v[c]));
  for (Index c : tb.layer_cells) trace = std::max(trace, std::abs(f.u.v[c]));
  require(trace <= lip * g.h + 1e-14,
          "verify_gradient_boundary: zero-trace gate failed for " + f.label);

  double nm = mean_over(f.du.comp[n - 1], rd.cells);
  GradientReport out;
  out.ineq.theorem = "gradient_boundary";
  out.ineq.lhs = detail::weighted_power_mean(rd, w, p * k, [&](Index c) {
    double s = 0.0;
    for (int i = 0; i + 1 < n; ++i) s += std::abs(f.du.comp[i].v[c]);
    return s + std::abs(f.du.comp[n - 1].v[c] - nm);
  });
  {
    double rs = 0.0;
    for (Index c : rd.cells)
      rs += (std::pow(detail::frobenius_at(f, c), p) + std::pow(std::abs(f.ut.v[c]), p)) *
            w.values.v[c];
    out.ineq.rhs = half.r * std::pow(rs / rd.w_sum, 1.0 / p);
  }
  // proof path: interior theorem applied on the half region per component
  for (int i = 0; i < n; ++i) {
    out.components.push_back(
        verify_sobolev_poincare(detail::component_pair(f, i, half), w, p, k, half));
    if (i + 1 < n) {
      out.component_direct_lhs.push_back(detail::weighted_power_mean(
          rd, w, p * k, [&](Index c) { return f.du.comp[i].v[c]; }));
    } else {
      out.component_direct_lhs.push_back(detail::weighted_power_mean(
          rd, w, p * k, [&](Index c) { return f.du.comp[i].v[c] - nm; }));
    }
  }
  out.ineq.n = n;
  out.ineq.p = p;
  out.ineq.k_or_gamma = k;
  out.ineq.r = half.r;
  out.ineq.alpha = half.alpha;
  out.ineq.weight_label = w.label;
  out.ineq.solution_label = f.label;
  out.ineq.budget = budget;
  out.ineq.finalize();
  return out;
}

// One link of the shrinking chain connecting a point of the region to the
// whole region.
struct ChainElement {
  int j = 0;
  ParabolicRegion region;
  double r_j = 0.0;
  double rho = 0.0;
  double alpha = 0.0;
  Point z_j;
};

// Cube case: Q~_j = Q_{r_j}(z~) ∩ Q_r. Cylinder case: the largest inscribed
// cylinder C^{alpha_j}_{rho_j}(z_j) of C_{r_j}(z~) ∩ C_r while the concentric
// cylinder pokes out, concentric afterwards. r_j = 2^{1-j} r, truncated at
// stop_radius.
inline std::vector<ChainElement> chain_decomposition(const Point& zt,
                                                     const ParabolicRegion& region,
                                                     double stop_radius) {
  require(region.kind == RegionKind::cube || region.kind == RegionKind::cylinder,
          "chain_decomposition: region must be a cube or cylinder");
  require(std::abs(region.alpha - 1.0) < 1e-12, "chain_decomposition: region must have alpha 1");
  require(region.contains(zt), "chain_decomposition: point outside region");
  require(stop_radius > 0.0, "chain_decomposition: stop radius must be positive");
  const int n = region.n();
  const double r = region.r;

  std::vector<ChainElement> chain;
  // relative coordinates of the point
  std::vector<double> xrel(n);
  double s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    xrel[i] = zt.x[i] - region.center.x[i];
    s2 += xrel[i] * xrel[i];
  }
  const double sx = std::sqrt(s2);
  const double st = std::abs(zt.t - region.center.t);
  const double tsign = (zt.t - region.center.t) >= 0.0 ? 1.0 : -1.0;

  auto radius_at = [&](int j) { return std::ldexp(r, 1 - j); };  // 2^{1-j} r

  {  // j = 0: the region itself; r_0 = 2r
    ChainElement e;
    e.j = 0;
    e.region = region;
    e.r_j = radius_at(0);
    e.rho = r;
    e.alpha = 1.0;
    e.z_j = region.center;
    chain.push_back(std::move(e));
  }

  // first j with C_{r_{j+1}}(z~) inside the region (spatial and temporal)
  int j0 = 0;
  while (!(sx + radius_at(j0 + 1) <= r && st + radius_at(j0 + 1) * radius_at(j0 + 1) <= r * r))
    ++j0;

  for (int j = 1; radius_at(j) >= stop_radius; ++j) {
    const double rj = radius_at(j);
    ChainElement e;
    e.j = j;
    e.r_j = rj;
    if (region.kind == RegionKind::cube) {
      // per-axis interval intersection of Q_{r_j}(z~) with the region
      std::vector<double> radii(n + 1);
      Point c;
      c.x.resize(n);
      for (int i = 0; i < n; ++i) {
        double a = std::max(zt.x[i] - rj, region.center.x[i] - r);
        double b = std::min(zt.x[i] + rj, region.center.x[i] + r);
        c.x[i] = 0.5 * (a + b);
        radii[i] = 0.5 * (b - a);
      }
      double ta = std::max(zt.t - rj * rj, region.center.t - r * r);
      double tbnd = std::min(zt.t + rj * rj, region.center.t + r * r);
      c.t = 0.5 * (ta + tbnd);
      radii[n] = std::sqrt(0.5 * (tbnd - ta));
      e.region = ParabolicRegion::rectangle(std::move(c), std::move(radii), rj);
      e.rho = rj;
      e.alpha = 1.0;
      e.z_j = e.region.center;
    } else if (j > j0) {
      e.region = ParabolicRegion::cylinder(zt, rj);
      e.rho = rj;
      e.alpha = 1.0;
      e.z_j = zt;
    } else {
      double rho, alpha;
      Point zj;
      zj.x.resize(n);
      if (rj > r - sx) {
        rho = 0.5 * (rj + r - sx);
        for (int i = 0; i < n; ++i) zj.x[i] = region.center.x[i] + (r - rho) * xrel[i] / sx;
      } else {
        rho = rj;
        zj.x = zt.x;
      }
      if (rj * rj > r * r - st) {
        alpha = (rj * rj + r * r - st) / (2.0 * rho * rho);
        zj.t = region.center.t + (r * r - alpha * rho * rho) * tsign;
      } else {
        alpha = rj * rj / (rho * rho);
        zj.t = zt.t;
      }
      e.region = ParabolicRegion::cylinder(zj, rho, alpha);
      e.rho = rho;
      e.alpha = alpha;
      e.z_j = zj;
    }
    chain.push_back(std::move(e));
  }
  return chain;
}

struct ChainTelescope {
  double pointwise_dev = 0.0;  // |u(z~) - (u)_{C_r}| at the nearest cell
  double telescope_sum = 0.0;  // sum over the chain of fint |u - (u)_j|
  double ratio = 0.0;
};

// The proof's telescoping sum along a chain, reported as data: the constant
// relating the pointwise deviation to the sum is not asserted anywhere.
inline ChainTelescope chain_telescoping_report(const SolutionPair& pair, const Point& zt,
                                               const std::vector<ChainElement>& chain) {
  const Grid& g = pair.u.grid;
  require(!chain.empty(), "chain_telescoping_report: empty chain");
  ChainTelescope out;
  for (const auto& e : chain) {
    auto cells = cells_of(g, e.region);
    double m = mean_over(pair.u, cells);
    double dev = 0.0;
    for (Index c : cells) dev += std::abs(pair.u.v[c] - m);
    out.telescope_sum += dev / double(cells.size());
  }
  // nearest cell center to the chain's anchor point
  Index best = 0;
  double bestd = std::numeric_limits<double>::infinity();
  for (Index c : cells_of(g, chain.front().region)) {
    double d = parabolic_distance(g.center(c), zt);
    if (d < bestd) {
      bestd = d;
      best = c;
    }
  }
  out.pointwise_dev = std::abs(pair.u.v[best] - mean(pair.u, chain.front().region));
  out.ratio = out.telescope_sum > 0.0
                  ? out.pointwise_dev / out.telescope_sum
                  : 0.0;
  return out;
}

struct KScanResult {
  double admissible_k = 1.0;
  double k_max = 0.0;
  double budget = 0.0;
  bool feasible = true;  // false when the budget is exceeded already at k = 1
  KFormula predicted;
};

// Largest k whose battery-sup ratio stays under the budget; lhs is
// nondecreasing in k, so bisection applies.
inline KScanResult scan_admissible_k(const std::vector<SolutionPair>& battery,
                                     const WeightField& w, double p,
                                     const ParabolicRegion& region, double budget,
                                     double k_max = 0.0) {
  require(!battery.empty(), "scan_admissible_k: empty battery");
  const int n = w.grid().n;
  if (k_max <= 0.0)
    k_max = p < double(n + 2) - 1e-9 ? 2.0 * double(n + 2) / (double(n + 2) - p) : 5.0;
  auto sup_at = [&](double k) {
    double s = 0.0;
    for (const auto& pr : battery)
      s = std::max(s, verify_sobolev_poincare(pr, w, p, k, region).ratio);
    return s;
  };
  KScanResult res;
  res.k_max = k_max;
  res.budget = budget;
  AqResult aq = find_aq_index(w, p);
  res.predicted = predicted_k(n, p, aq.q);
  if (sup_at(1.0) > budget) {
    res.feasible = false;
    res.admissible_k = 1.0;
    return res;
  }
  if (sup_at(k_max) <= budget) {
    res.admissible_k = k_max;
    return res;
  }
  double lo = 1.0, hi = k_max;
  for (int it = 0; it < 40; ++it) {
    double mid = 0.5 * (lo + hi);
    (sup_at(mid) <= budget ? lo : hi) = mid;
  }
  res.admissible_k = lo;
  return res;
}

struct SliceGapFinding {
  bool found = false;
  WeightField weight;
  SliceGapReport report;
  double amplitude = 0.0;
  int width = 0;
};

// Grid search over the oscillatory family for a weight with a tame parabolic
// characteristic but a much worse time-slice elliptic constant.
inline SliceGapFinding find_slice_gap(const Grid& g, double p,
                                      std::vector<double> amplitudes = {3.0, 4.0, 5.0},
                                      std::vector<int> widths = {8, 16, 32},
                                      double parabolic_cap = 20.0, double gap_required = 10.0) {
  SliceGapFinding best;
  double best_gap = 0.0;
  for (double a : amplitudes) {
    for (int wd : widths) {
      if (Index(wd) > g.count(g.n)) continue;
      WeightField w = oscillatory_weight(g, a, wd);
      SliceGapReport rep = slice_ap_gap(w, p);
      bool ok = rep.parabolic <= parabolic_cap && rep.gap >= gap_required;
      if (ok || rep.gap > best_gap) {
        best_gap = std::max(best_gap, rep.gap);
        best.weight = std::move(w);
        best.report = rep;
        best.amplitude = a;
        best.width = wd;
        best.found = best.found || ok;
        if (ok) return best;
      }
    }
  }
  return best;
}

// W^{2,1} function vanishing on {x_n = 0}, for the boundary gradient theorem.
inline W21Function zero_trace_w21(const Grid& g, std::uint64_t seed, int terms = 3,
                                  int max_mode = 3) {
  detail::Rng rng(seed);
  const int n = g.n;
  std::vector<gen::W21Term> tt(terms);
  for (auto& m : tt) {
    m.a = rng.uniform(-1.0, 1.0);
    m.omega = rng.uniform(-2.0, 2.0);
    m.tphase = rng.uniform(0.0, 2.0 * M_PI);
    m.k.resize(n);
    m.phase.resize(n);
    for (int k = 0; k + 1 < n; ++k) {
      m.k[k] = double(rng.uniform_int(-max_mode, max_mode));
      m.phase[k] = rng.uniform(0.0, 2.0 * M_PI);
    }
    // sin(kappa x_n) factor: cos with a -pi/2 phase, vanishing at x_n = 0
    m.k[n - 1] = rng.uniform(1.0, 2.5) * M_PI / (2.0 * g.space_half[n - 1]);
    m.phase[n - 1] = -M_PI / 2.0;
  }
  W21Function f = gen::w21_from_terms(g, tt, "zero_trace_w21(seed=" + std::to_string(seed) + ")");
  return f;
}

}  // namespace parasp
