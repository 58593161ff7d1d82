#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "parasp/errors.hpp"

namespace parasp {

// Versioned run configuration; every numeric choice that affects reported
// constants lives here rather than in flags, so runs are reproducible from
// the file alone. Unknown keys are rejected.
struct RunConfig {
  int version = 1;

  struct GridCfg {
    int n = 1;
    double h = 0.0625;
    std::vector<double> space_half = {1.0};
    double time_half = 0.25;
    std::vector<double> origin_x;
    double origin_t = 0.0;
  } grid;

  struct RegionCfg {
    std::string kind = "cube";
    double r = 0.5;
    double alpha = 1.0;
    std::vector<double> center_x;
    double center_t = 0.0;
  } region;

  struct WeightCfg {
    std::string kind = "constant";  // constant | power | oscillatory | file
    double value = 1.0;
    double a = 0.0;
    std::vector<double> center_x;
    double center_t = 0.0;
    double amplitude = 4.0;
    int time_width = 8;
    std::string path;
  } weight;

  struct BatteryCfg {
    std::uint64_t seed = 1;
    int count = 12;
    std::vector<std::string> generators = {"heat_kernel", "fourier", "antiderivative"};
    int max_mode = 3;
  } battery;

  std::vector<std::string> theorems = {"sobolev_poincare"};

  struct ParamsCfg {
    double p = 2.0;
    std::optional<double> k;      // absent: derived from the weight
    std::optional<double> gamma;  // absent: midpoint of the admissible interval
    std::vector<double> alphas = {0.5, 1.0, 4.0};
    double budget = std::numeric_limits<double>::infinity();
    std::map<std::string, double> budgets;  // per-theorem overrides
    double max_radius = 0.0;                // apchar; 0 = grid cap
    std::vector<double> scan_budgets;       // scan-k
    double k_max = 0.0;
    unsigned threads = 0;
  } params;

  std::string output_dir = "out";
};

namespace detail {
inline void check_keys(const nlohmann::json& obj, const std::set<std::string>& allowed,
                       const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key()))
      throw ConfigError("unknown key '" + it.key() + "' in " + where);
  }
}
}  // namespace detail

inline RunConfig parse_config_json(const nlohmann::json& j) {
  using detail::check_keys;
  if (!j.is_object()) throw ConfigError("config root must be an object");
  check_keys(j, {"version", "grid", "region", "weight", "battery", "theorems", "params", "output"},
             "config");
  RunConfig c;
  if (!j.contains("version")) throw ConfigError("config: missing 'version'");
  c.version = j.at("version").get<int>();
  if (c.version != 1) throw ConfigError("config: unsupported version");

  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    check_keys(g, {"n", "h", "space_half", "time_half", "origin_x", "origin_t"}, "grid");
    c.grid.n = g.value("n", c.grid.n);
    c.grid.h = g.value("h", c.grid.h);
    if (g.contains("space_half")) c.grid.space_half = g.at("space_half").get<std::vector<double>>();
    c.grid.time_half = g.value("time_half", c.grid.time_half);
    if (g.contains("origin_x")) c.grid.origin_x = g.at("origin_x").get<std::vector<double>>();
    c.grid.origin_t = g.value("origin_t", 0.0);
  }
  if (j.contains("region")) {
    const auto& r = j.at("region");
    check_keys(r, {"kind", "r", "alpha", "center_x", "center_t"}, "region");
    c.region.kind = r.value("kind", c.region.kind);
    c.region.r = r.value("r", c.region.r);
    c.region.alpha = r.value("alpha", c.region.alpha);
    if (r.contains("center_x")) c.region.center_x = r.at("center_x").get<std::vector<double>>();
    c.region.center_t = r.value("center_t", 0.0);
  }
  if (j.contains("weight")) {
    const auto& w = j.at("weight");
    check_keys(w, {"kind", "value", "a", "center_x", "center_t", "amplitude", "time_width", "path"},
               "weight");
    c.weight.kind = w.value("kind", c.weight.kind);
    c.weight.value = w.value("value", 1.0);
    c.weight.a = w.value("a", 0.0);
    if (w.contains("center_x")) c.weight.center_x = w.at("center_x").get<std::vector<double>>();
    c.weight.center_t = w.value("center_t", 0.0);
    c.weight.amplitude = w.value("amplitude", 4.0);
    c.weight.time_width = w.value("time_width", 8);
    c.weight.path = w.value("path", "");
  }
  if (j.contains("battery")) {
    const auto& b = j.at("battery");
    check_keys(b, {"seed", "count", "generators", "max_mode"}, "battery");
    c.battery.seed = b.value("seed", std::uint64_t{1});
    c.battery.count = b.value("count", 12);
    if (b.contains("generators"))
      c.battery.generators = b.at("generators").get<std::vector<std::string>>();
    c.battery.max_mode = b.value("max_mode", 3);
  }
  if (j.contains("theorems")) c.theorems = j.at("theorems").get<std::vector<std::string>>();
  if (j.contains("params")) {
    const auto& p = j.at("params");
    check_keys(p,
               {"p", "k", "gamma", "alphas", "budget", "budgets", "max_radius", "scan_budgets",
                "k_max", "threads"},
               "params");
    c.params.p = p.value("p", 2.0);
    if (p.contains("k") && p.at("k").is_number()) c.params.k = p.at("k").get<double>();
    if (p.contains("gamma") && p.at("gamma").is_number())
      c.params.gamma = p.at("gamma").get<double>();
    if (p.contains("alphas")) c.params.alphas = p.at("alphas").get<std::vector<double>>();
    if (p.contains("budget")) c.params.budget = p.at("budget").get<double>();
    if (p.contains("budgets"))
      c.params.budgets = p.at("budgets").get<std::map<std::string, double>>();
    c.params.max_radius = p.value("max_radius", 0.0);
    if (p.contains("scan_budgets"))
      c.params.scan_budgets = p.at("scan_budgets").get<std::vector<double>>();
    c.params.k_max = p.value("k_max", 0.0);
    c.params.threads = p.value("threads", 0u);
  }
  if (j.contains("output")) {
    const auto& o = j.at("output");
    check_keys(o, {"dir"}, "output");
    c.output_dir = o.value("dir", c.output_dir);
  }
  return c;
}

inline RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }
  return parse_config_json(j);
}

}  // namespace parasp
