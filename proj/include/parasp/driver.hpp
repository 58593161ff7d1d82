#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "parasp/config.hpp"
#include "parasp/field_io.hpp"
#include "parasp/report_io.hpp"
#include "parasp/verify.hpp"

namespace parasp {

inline Grid build_grid(const RunConfig& c) {
  try {
    return Grid(c.grid.n, c.grid.h, c.grid.space_half, c.grid.time_half, c.grid.origin_x,
                c.grid.origin_t);
  } catch (const Error& e) {
    throw ConfigError(std::string("grid: ") + e.what());
  }
}

inline ParabolicRegion build_region(const RunConfig& c, const Grid& g) {
  Point center(c.region.center_x.empty() ? std::vector<double>(g.n, 0.0) : c.region.center_x,
               c.region.center_t);
  if (static_cast<int>(center.x.size()) != g.n)
    throw ConfigError("region: center dimension mismatch");
  const std::string& k = c.region.kind;
  if (k == "cube") return ParabolicRegion::cube(center, c.region.r, c.region.alpha);
  if (k == "cylinder") return ParabolicRegion::cylinder(center, c.region.r, c.region.alpha);
  if (k == "half_cube") return ParabolicRegion::half_cube(center, c.region.r, c.region.alpha);
  if (k == "half_cylinder")
    return ParabolicRegion::half_cylinder(center, c.region.r, c.region.alpha);
  throw ConfigError("region: unknown kind '" + k + "'");
}

inline WeightField build_weight(const RunConfig& c, const Grid& g) {
  const std::string& k = c.weight.kind;
  if (k == "constant") return WeightField::constant(g, c.weight.value);
  if (k == "power") {
    Point z0(c.weight.center_x.empty() ? std::vector<double>(g.n, 0.0) : c.weight.center_x,
             c.weight.center_t);
    return power_weight(g, c.weight.a, z0);
  }
  if (k == "oscillatory") return oscillatory_weight(g, c.weight.amplitude, c.weight.time_width);
  if (k == "file") {
    ScalarField f = read_scalar_field(c.weight.path);
    if (f.grid != g) throw ConfigError("weight file grid does not match the configured grid");
    return WeightField(std::move(f), "file:" + c.weight.path);
  }
  throw ConfigError("weight: unknown kind '" + k + "'");
}

// k for the main inequalities: explicit in the config, else the unweighted
// value (n+2)/(n+2-p) for a constant weight with p < n+2, else predicted
// from the self-improvement index.
inline double resolve_k(const RunConfig& c, const WeightField& w) {
  if (c.params.k) return *c.params.k;
  int n = w.grid().n;
  double p = c.params.p;
  if (c.weight.kind == "constant" && p < double(n + 2) - 1e-9)
    return double(n + 2) / (double(n + 2) - p);
  return predicted_k(n, p, find_aq_index(w, p).q).k;
}

inline double theorem_budget(const RunConfig& c, const std::string& theorem) {
  auto it = c.params.budgets.find(theorem);
  return it != c.params.budgets.end() ? it->second : c.params.budget;
}

// Runs one named theorem over config-built inputs and returns per-case
// reports in deterministic battery order.
inline std::vector<InequalityReport> run_theorem(const std::string& theorem, const RunConfig& c,
                                                 const Grid& g, const ParabolicRegion& region,
                                                 const WeightField& w) {
  const double p = c.params.p;
  const double budget = theorem_budget(c, theorem);
  std::vector<InequalityReport> out;

  if (theorem == "poincare") {
    Battery b = make_solution_battery(g, region, c.battery.count, c.battery.seed,
                                      c.battery.generators, c.battery.max_mode);
    for (double alpha : c.params.alphas) {
      ParabolicRegion reg =
          region.kind == RegionKind::cylinder
              ? ParabolicRegion::cylinder(region.center, region.r, alpha)
              : ParabolicRegion::cube(region.center, region.r, alpha);
      auto reps = verify_battery(
          b.pairs.size(),
          [&](std::size_t i) { return verify_poincare(b.pairs[i], reg, budget); },
          c.params.threads);
      out.insert(out.end(), reps.begin(), reps.end());
    }
    return out;
  }
  if (theorem == "sobolev_poincare") {
    double k = resolve_k(c, w);
    Battery b = make_solution_battery(g, region, c.battery.count, c.battery.seed,
                                      c.battery.generators, c.battery.max_mode);
    return verify_battery(
        b.pairs.size(),
        [&](std::size_t i) { return verify_sobolev_poincare(b.pairs[i], w, p, k, region, budget); },
        c.params.threads);
  }
  if (theorem == "riesz") {
    double k = resolve_k(c, w);
    Battery b = make_solution_battery(g, region, c.battery.count, c.battery.seed,
                                      c.battery.generators, c.battery.max_mode);
    auto cells = cells_of(g, region);
    for (const auto& pair : b.pairs) {
      VectorField du = pair.du ? *pair.du : spatial_gradient(pair.u);
      ScalarField f(g);
      for (Index cell : cells) f.v[cell] = du.norm_at(cell) + pair.G.norm_at(cell);
      InequalityReport rep = verify_riesz_lemma(f, w, p, k, region, budget, c.params.threads);
      rep.solution_label = pair.label;
      out.push_back(rep);
    }
    return out;
  }
  if (theorem == "higher_integrability") {
    double k = resolve_k(c, w);
    double gamma;
    if (c.params.gamma) {
      gamma = *c.params.gamma;
    } else {
      std::vector<ParabolicRegion> family;
      for (double rr = region.r; rr >= 4.0 * g.h; rr /= 2.0)
        family.push_back(ParabolicRegion::cube(region.center, rr));
      ReverseHolder rh = reverse_holder_exponent(w, p, family);
      auto itv = admissible_gamma_interval(k, rh.eps0);
      gamma = 0.5 * (itv.first + itv.second);
    }
    Battery b = make_solution_battery(g, region, c.battery.count, c.battery.seed,
                                      c.battery.generators, c.battery.max_mode);
    return verify_battery(
        b.pairs.size(),
        [&](std::size_t i) {
          return verify_higher_integrability(b.pairs[i], w, p, k, gamma, region, budget);
        },
        c.params.threads);
  }
  if (theorem == "boundary_flat") {
    double k = resolve_k(c, w);
    ParabolicRegion half =
        region.is_half()
            ? region
            : (region.kind == RegionKind::cylinder
                   ? ParabolicRegion::half_cylinder(region.center, region.r, region.alpha)
                   : ParabolicRegion::half_cube(region.center, region.r, region.alpha));
    Battery b = make_zero_trace_battery(g, half, c.battery.count, c.battery.seed);
    for (const auto& pair : b.pairs)
      out.push_back(verify_boundary(pair, w, p, k, BoundaryMode::flat, budget).ineq);
    return out;
  }
  if (theorem == "boundary_initial") {
    double k = resolve_k(c, w);
    Battery b = make_zero_initial_battery(g, region.unclipped(), c.battery.count, c.battery.seed,
                                          c.battery.max_mode);
    for (const auto& pair : b.pairs)
      out.push_back(verify_boundary(pair, w, p, k, BoundaryMode::initial, budget).ineq);
    return out;
  }
  if (theorem == "gradient_interior") {
    double k = resolve_k(c, w);
    auto fs = make_w21_battery(g, c.battery.count, c.battery.seed, c.battery.max_mode);
    return verify_battery(
        fs.size(),
        [&](std::size_t i) { return verify_gradient_sp(fs[i], w, p, k, region, budget).ineq; },
        c.params.threads);
  }
  if (theorem == "gradient_boundary") {
    double k = resolve_k(c, w);
    ParabolicRegion half =
        region.is_half() ? region
                         : ParabolicRegion::half_cube(region.center, region.r, region.alpha);
    for (int i = 0; i < c.battery.count; ++i) {
      W21Function f =
          zero_trace_w21(g, c.battery.seed * 1000003ULL + std::uint64_t(i), 3, c.battery.max_mode);
      out.push_back(verify_gradient_boundary(f, w, p, k, half, budget).ineq);
    }
    return out;
  }
  if (theorem == "slice_gap") {
    SliceGapFinding finding = find_slice_gap(g, p);
    InequalityReport rep;
    rep.theorem = "slice_gap";
    rep.n = g.n;
    rep.p = p;
    rep.k_or_gamma = 1.0;
    rep.r = finding.report.slice_index >= 0 ? double(finding.width) : 0.0;
    rep.weight_label = finding.weight.label;
    rep.solution_label = "slice_search";
    rep.lhs = finding.report.slice_max;
    rep.rhs = finding.report.parabolic;
    rep.budget = budget;
    rep.finalize();
    rep.pass = finding.found;
    out.push_back(rep);
    return out;
  }
  throw ConfigError("unknown theorem id '" + theorem + "'");
}

struct VerifyOutcome {
  std::vector<InequalityReport> reports;
  bool all_pass = true;
};

inline VerifyOutcome run_verify(const RunConfig& c, const std::string& out_dir) {
  Grid g = build_grid(c);
  ParabolicRegion region = build_region(c, g);
  WeightField w = build_weight(c, g);
  VerifyOutcome outcome;
  namespace fs = std::filesystem;
  nlohmann::json constants = {{"schema_version", 1},
                              {"battery", {{"seed", c.battery.seed}, {"count", c.battery.count}}},
                              {"weight", w.label},
                              {"estimated_constants", nlohmann::json::object()}};
  for (const auto& theorem : c.theorems) {
    std::vector<InequalityReport> reps = run_theorem(theorem, c, g, region, w);
    for (const auto& r : reps) outcome.all_pass = outcome.all_pass && r.pass;
    write_file_atomic((fs::path(out_dir) / (theorem + ".csv")).string(), inequality_csv(reps));
    write_file_atomic((fs::path(out_dir) / (theorem + ".json")).string(),
                      reports_json(reps).dump(2) + "\n");
    constants["estimated_constants"][theorem] = estimate_constant(reps);
    outcome.reports.insert(outcome.reports.end(), reps.begin(), reps.end());
  }
  write_file_atomic((fs::path(out_dir) / "constants.json").string(), constants.dump(2) + "\n");
  return outcome;
}

inline ApReport run_apchar(const RunConfig& c, const std::string& out_dir) {
  Grid g = build_grid(c);
  WeightField w = build_weight(c, g);
  double max_radius = c.params.max_radius;
  if (max_radius <= 0.0) max_radius = ApScanner(w).radius_cap();
  ApReport rep = ap_characteristic(w, c.params.p, max_radius);
  namespace fs = std::filesystem;
  write_file_atomic((fs::path(out_dir) / "apchar.json").string(),
                    ap_report_json(rep).dump(2) + "\n");
  write_file_atomic((fs::path(out_dir) / "apchar_witness.csv").string(), witness_csv(rep));
  return rep;
}

inline KScanResult run_scan_k(const RunConfig& c, const std::string& out_dir) {
  Grid g = build_grid(c);
  ParabolicRegion region = build_region(c, g);
  WeightField w = build_weight(c, g);
  Battery b = make_solution_battery(g, region, c.battery.count, c.battery.seed,
                                    c.battery.generators, c.battery.max_mode);
  std::vector<double> budgets = c.params.scan_budgets;
  if (budgets.empty()) budgets = {1.0, 2.0, 4.0};
  std::string csv = "budget,admissible_k,predicted_k,predicted_q,predicted_delta\n";
  KScanResult last;
  for (double budget : budgets) {
    last = scan_admissible_k(b.pairs, w, c.params.p, region, budget, c.params.k_max);
    csv += format_double(budget) + "," + format_double(last.admissible_k) + "," +
           format_double(last.predicted.k) + "," + format_double(last.predicted.q) + "," +
           format_double(last.predicted.delta) + "\n";
  }
  namespace fs = std::filesystem;
  write_file_atomic((fs::path(out_dir) / "scan_k.csv").string(), csv);
  return last;
}

inline void run_battery(const RunConfig& c, const std::string& out_dir) {
  Grid g = build_grid(c);
  ParabolicRegion region = build_region(c, g);
  // generate (and gate) everything before any file is written
  Battery b = make_solution_battery(g, region, c.battery.count, c.battery.seed,
                                    c.battery.generators, c.battery.max_mode);
  namespace fs = std::filesystem;
  for (std::size_t i = 0; i < b.pairs.size(); ++i) {
    write_scalar_field((fs::path(out_dir) / ("pair" + std::to_string(i) + "_u.f64")).string(),
                       b.pairs[i].u);
    write_vector_field((fs::path(out_dir) / ("pair" + std::to_string(i) + "_G.f64")).string(),
                       b.pairs[i].G);
  }
  write_file_atomic((fs::path(out_dir) / "battery_manifest.json").string(),
                    battery_manifest_json(b, g, region).dump(2) + "\n");
}

}  // namespace parasp
