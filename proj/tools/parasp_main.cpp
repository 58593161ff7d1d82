#include <cstdio>
#include <cstdlib>
#include <string>

#include "CLI11.hpp"
#include "parasp/parasp.hpp"

namespace {

// exit codes: 0 success, 1 budget failure, 2 config error, 3 I/O error
constexpr int kOk = 0;
constexpr int kBudgetFailure = 1;
constexpr int kConfigError = 2;
constexpr int kIoError = 3;

std::string resolve_output_dir(const parasp::RunConfig& cfg, const std::string& flag_out) {
  if (!flag_out.empty()) return flag_out;
  if (const char* env = std::getenv("PARASP_OUT")) {
    if (*env) return env;
  }
  return cfg.output_dir;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"parasp: weighted parabolic Sobolev-Poincaré verification toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_override;
  unsigned threads = 0;
  bool verbose = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "run configuration file (JSON)")->required();
    sub->add_option("-o,--out", out_override, "output directory (overrides config and PARASP_OUT)");
    sub->add_option("-t,--threads", threads, "worker thread count (0 = hardware)");
    sub->add_flag("-v,--verbose", verbose, "print per-case results");
  };

  CLI::App* apchar = app.add_subcommand("apchar", "compute the parabolic A_p characteristic");
  CLI::App* verify = app.add_subcommand("verify", "run the configured inequality batteries");
  CLI::App* scank = app.add_subcommand("scan-k", "scan admissible integrability exponents");
  CLI::App* battery = app.add_subcommand("battery", "materialize a solution battery on disk");
  for (CLI::App* sub : {apchar, verify, scank, battery}) add_common(sub);

  CLI11_PARSE(app, argc, argv);

  try {
    parasp::RunConfig cfg = parasp::parse_config(config_path);
    if (threads > 0) cfg.params.threads = threads;
    std::string out_dir = resolve_output_dir(cfg, out_override);

    if (app.got_subcommand(apchar)) {
      parasp::ApReport rep = parasp::run_apchar(cfg, out_dir);
      std::printf("[w]_%g = %.17g over %lld cubes (%s)\n", rep.p, rep.value,
                  static_cast<long long>(rep.cube_count), rep.label.c_str());
      return kOk;
    }
    if (app.got_subcommand(verify)) {
      parasp::VerifyOutcome outcome = parasp::run_verify(cfg, out_dir);
      if (verbose) {
        for (const auto& r : outcome.reports)
          std::printf("%s %s lhs=%.6g rhs=%.6g ratio=%.6g %s\n", r.theorem.c_str(),
                      r.solution_label.c_str(), r.lhs, r.rhs, r.ratio,
                      r.pass ? "pass" : "FAIL");
      }
      std::size_t failed = 0;
      for (const auto& r : outcome.reports) failed += r.pass ? 0 : 1;
      std::printf("%zu cases, %zu over budget\n", outcome.reports.size(), failed);
      if (!outcome.all_pass) {
        for (const auto& r : outcome.reports)
          if (!r.pass)
            std::printf("FAIL %s %s ratio=%.6g budget=%.6g\n", r.theorem.c_str(),
                        r.solution_label.c_str(), r.ratio, r.budget);
        return kBudgetFailure;
      }
      return kOk;
    }
    if (app.got_subcommand(scank)) {
      parasp::KScanResult res = parasp::run_scan_k(cfg, out_dir);
      std::printf("admissible k = %.6g (k_max %.6g, predicted %.6g)\n", res.admissible_k,
                  res.k_max, res.predicted.k);
      return kOk;
    }
    if (app.got_subcommand(battery)) {
      parasp::run_battery(cfg, out_dir);
      std::printf("battery written to %s\n", out_dir.c_str());
      return kOk;
    }
  } catch (const parasp::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  } catch (const parasp::IoError& e) {
    std::fprintf(stderr, "I/O error: %s\n", e.what());
    return kIoError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kConfigError;
  }
  return kConfigError;
}
