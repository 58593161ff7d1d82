#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include "json.hpp"
#include "parasp/field_io.hpp"
#include "parasp/verify.hpp"
#include "parasp/weights.hpp"

namespace parasp {

// Shortest round-trippable decimal form; reports parse back bit-exactly.
inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline const char* kInequalityCsvHeader = "theorem,n,p,k_or_gamma,r,weight,solution,lhs,rhs,ratio";

inline std::string inequality_csv(const std::vector<InequalityReport>& reports) {
  std::string out = kInequalityCsvHeader;
  out.push_back('\n');
  for (const auto& rep : reports) {
    out += rep.theorem + "," + std::to_string(rep.n) + "," + format_double(rep.p) + "," +
           format_double(rep.k_or_gamma) + "," + format_double(rep.r) + "," + rep.weight_label +
           "," + rep.solution_label + "," + format_double(rep.lhs) + "," +
           format_double(rep.rhs) + "," + format_double(rep.ratio) + "\n";
  }
  return out;
}

inline nlohmann::json inequality_json(const InequalityReport& rep) {
  return {{"schema_version", 1},
          {"theorem", rep.theorem},
          {"n", rep.n},
          {"p", rep.p},
          {"k_or_gamma", rep.k_or_gamma},
          {"r", rep.r},
          {"alpha", rep.alpha},
          {"weight", rep.weight_label},
          {"solution", rep.solution_label},
          {"lhs", rep.lhs},
          {"rhs", rep.rhs},
          {"ratio", rep.ratio},
          {"budget", rep.budget},
          {"pass", rep.pass}};
}

inline nlohmann::json reports_json(const std::vector<InequalityReport>& reports) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : reports) arr.push_back(inequality_json(r));
  return arr;
}

inline nlohmann::json ap_report_json(const ApReport& rep) {
  return {{"schema_version", 1},
          {"p", rep.p},
          {"value", rep.value},
          {"label", rep.label},
          {"cube_count", rep.cube_count},
          {"witness",
           {{"center_x", rep.witness.center.x},
            {"center_t", rep.witness.center.t},
            {"r", rep.witness.r}}}};
}

inline std::string witness_csv(const ApReport& rep) {
  std::string out = "p,value";
  for (std::size_t k = 0; k < rep.witness.center.x.size(); ++k)
    out += ",center_x" + std::to_string(k + 1);
  out += ",center_t,r,cube_count\n";
  out += format_double(rep.p) + "," + format_double(rep.value);
  for (double c : rep.witness.center.x) out += "," + format_double(c);
  out += "," + format_double(rep.witness.center.t) + "," + format_double(rep.witness.r) + "," +
         std::to_string(rep.cube_count) + "\n";
  return out;
}

inline nlohmann::json battery_manifest_json(const Battery& b, const Grid& g,
                                            const ParabolicRegion& region) {
  nlohmann::json entries = nlohmann::json::array();
  for (std::size_t i = 0; i < b.entries.size(); ++i) {
    const auto& e = b.entries[i];
    nlohmann::json je = {{"id", i},
                         {"generator", e.generator},
                         {"seed", e.seed},
                         {"declared_tol", e.declared_tol},
                         {"measured_residual", e.measured_residual},
                         {"files",
                          {{"u", "pair" + std::to_string(i) + "_u.f64"},
                           {"G", "pair" + std::to_string(i) + "_G.f64"}}}};
    for (const auto& [k, v] : e.params) je["params"][k] = v;
    entries.push_back(std::move(je));
  }
  return {{"format", "parasp-battery"},
          {"version", 1},
          {"grid", grid_json(g)},
          {"region",
           {{"kind", region_kind_name(region.kind)},
            {"r", region.r},
            {"alpha", region.alpha},
            {"center_x", region.center.x},
            {"center_t", region.center.t}}},
          {"entries", std::move(entries)}};
}

}  // namespace parasp
