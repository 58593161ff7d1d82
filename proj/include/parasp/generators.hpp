#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "parasp/calculus.hpp"
#include "parasp/weights.hpp"

namespace parasp {

namespace gen {

constexpr std::uint64_t kPhiSeed = 0x5eedu;
constexpr int kPhiCount = 20;

inline std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

// Residual tolerance declared by every generator: pure discretization order.
// The constant carries the region scale, since the battery's bump widths are
// fractions of the region and the quadrature error grows like (h/width)^2.
inline double default_tol(const Grid& g, const ParabolicRegion& region) {
  auto box = detail::inner_box(region);
  double hmin = box.half[0];
  for (int k = 1; k < region.n(); ++k) hmin = std::min(hmin, box.half[k]);
  double scale = std::max(1.0, (0.25 / hmin) * (0.25 / hmin));
  return 10.0 * g.h * g.h * scale;
}

inline void gate(SolutionPair& p) {
  auto battery = test_battery(p.region, kPhiCount, kPhiSeed);
  p.measured_residual = divergence_residual(p.u, p.G, p.region, battery);
  require(p.measured_residual <= p.declared_tol,
          "generator residual gate failed for " + p.label + ": " +
              std::to_string(p.measured_residual) + " > " + std::to_string(p.declared_tol));
}

}  // namespace gen

// Fundamental solution translated in time: u = (4 pi s)^{-n/2} exp(-|x-x0|^2 / 4s)
// with s = t - t0 + t_shift, G = Du (analytic). Requires the kernel width
// 2 sqrt(s) to stay at least 4h over the grid.
inline SolutionPair heat_kernel_solution(const Grid& g, const ParabolicRegion& region,
                                         const Point& z0, double t_shift) {
  double s_min = g.lo(g.n) - z0.t + t_shift;
  require(s_min >= 4.0 * g.h * g.h,
          "heat_kernel_solution: kernel under-resolved (need width >= 4h)");
  const int n = g.n;
  auto sval = [&](const Point& z) { return z.t - z0.t + t_shift; };
  auto uval = [&](const Point& z) {
    double s = sval(z), q = 0.0;
    for (int k = 0; k < n; ++k) {
      double d = z.x[k] - z0.x[k];
      q += d * d;
    }
    return std::pow(4.0 * M_PI * s, -0.5 * n) * std::exp(-q / (4.0 * s));
  };
  SolutionPair p;
  p.region = region;
  p.label = "heat_kernel(t_shift=" + gen::num(t_shift) + ")";
  p.declared_tol = gen::default_tol(g, region);
  p.u = ScalarField::sample(g, uval);
  p.G = VectorField(g);
  for (int k = 0; k < n; ++k) {
    p.G.comp[k] = ScalarField::sample(g, [&, k](const Point& z) {
      return uval(z) * (-(z.x[k] - z0.x[k]) / (2.0 * sval(z)));
    });
  }
  p.du = p.G;  // G = Du for heat solutions
  gen::gate(p);
  return p;
}

namespace gen {

struct HeatMode {
  double c;
  std::vector<double> k;  // integer wavevector
  double phase;
  double k2;
};

inline SolutionPair fourier_from_modes(const Grid& g, const ParabolicRegion& region,
                                       const std::vector<HeatMode>& modes, std::string label) {
  const int n = g.n;
  SolutionPair p;
  p.region = region;
  p.label = std::move(label);
  p.declared_tol = default_tol(g, region);
  p.u = ScalarField::sample(g, [&](const Point& z) {
    double v = 0.0;
    for (const auto& m : modes) {
      double arg = m.phase;
      for (int k = 0; k < n; ++k) arg += m.k[k] * z.x[k];
      v += m.c * std::exp(-m.k2 * z.t) * std::cos(arg);
    }
    return v;
  });
  p.G = VectorField(g);
  for (int k = 0; k < n; ++k) {
    p.G.comp[k] = ScalarField::sample(g, [&, k](const Point& z) {
      double v = 0.0;
      for (const auto& m : modes) {
        double arg = m.phase;
        for (int j = 0; j < n; ++j) arg += m.k[j] * z.x[j];
        v -= m.c * m.k[k] * std::exp(-m.k2 * z.t) * std::sin(arg);
      }
      return v;
    });
  }
  p.du = p.G;
  gate(p);
  return p;
}

}  // namespace gen

// u = sum_k c_k e^{-|k|^2 t} cos(k.x + phi_k) over random integer modes with
// |k_i| <= max_mode; exact heat solution, G = Du.
inline SolutionPair fourier_heat_solution(const Grid& g, const ParabolicRegion& region,
                                          std::uint64_t seed, int max_mode = 3, int terms = 4) {
  max_mode = std::min(max_mode, 6);
  require(double(max_mode) <= 1.0 / (4.0 * g.h) + 1e-9,
          "fourier_heat_solution: modes under-resolved at this h");
  detail::Rng rng(seed);
  std::vector<gen::HeatMode> modes;
  for (int i = 0; i < terms; ++i) {
    gen::HeatMode m;
    m.c = rng.uniform(-1.0, 1.0);
    m.phase = rng.uniform(0.0, 2.0 * M_PI);
    m.k.resize(g.n);
    m.k2 = 0.0;
    for (int k = 0; k < g.n; ++k) {
      m.k[k] = double(rng.uniform_int(-max_mode, max_mode));
      m.k2 += m.k[k] * m.k[k];
    }
    modes.push_back(std::move(m));
  }
  return gen::fourier_from_modes(g, region, modes,
                                 "fourier_heat(seed=" + std::to_string(seed) + ")");
}

inline SolutionPair single_mode_heat_solution(const Grid& g, const ParabolicRegion& region,
                                              std::vector<double> k, double c = 1.0,
                                              double phase = 0.0) {
  gen::HeatMode m;
  m.c = c;
  m.phase = phase;
  m.k = std::move(k);
  m.k2 = 0.0;
  for (double kk : m.k) m.k2 += kk * kk;
  return gen::fourier_from_modes(g, region, {m}, "single_mode_heat");
}

namespace gen {

// One trigonometric product term a cos(k.x + phase) cos(omega t + tphase),
// optionally damped by the quadratic initial-time envelope S. The last
// spatial axis has a closed-form antiderivative, which makes
// G = (0, ..., 0, int u_t dx_n) analytic.
struct TrigTerm {
  double a = 1.0;
  std::vector<double> k;
  double phase = 0.0;
  double omega = 0.0;
  double tphase = 0.0;
};

struct Envelope {
  bool active = false;
  double t_lo = 0.0;
  double span = 1.0;
  double value(double t) const { return active ? ipow((t - t_lo) / span, 2) : 1.0; }
  double deriv(double t) const { return active ? 2.0 * (t - t_lo) / (span * span) : 0.0; }
};

inline SolutionPair antiderivative_from_terms(const Grid& g, const ParabolicRegion& region,
                                              const std::vector<TrigTerm>& terms,
                                              const Envelope& env, std::string label) {
  const int n = g.n;
  const double L = g.lo(n - 1);  // antiderivative base on the last spatial axis
  auto spatial = [&](const TrigTerm& m, const Point& z) {
    double arg = m.phase;
    for (int k = 0; k < n; ++k) arg += m.k[k] * z.x[k];
    return arg;
  };
  // antiderivative of cos(k.x + phase) in x_n from L
  auto ix = [&](const TrigTerm& m, const Point& z) {
    double arg = spatial(m, z);
    double kn = m.k[n - 1];
    if (kn != 0.0) return (std::sin(arg) - std::sin(arg - kn * (z.x[n - 1] - L))) / kn;
    return std::cos(arg) * (z.x[n - 1] - L);
  };
  SolutionPair p;
  p.region = region;
  p.label = std::move(label);
  p.declared_tol = default_tol(g, region);
  p.u = ScalarField::sample(g, [&](const Point& z) {
    double v = 0.0;
    for (const auto& m : terms)
      v += m.a * std::cos(spatial(m, z)) * std::cos(m.omega * z.t + m.tphase) * env.value(z.t);
    return v;
  });
  p.G = VectorField(g);
  p.G.comp[n - 1] = ScalarField::sample(g, [&](const Point& z) {
    double v = 0.0;
    for (const auto& m : terms) {
      double T = std::cos(m.omega * z.t + m.tphase);
      double Tt = -m.omega * std::sin(m.omega * z.t + m.tphase);
      v += m.a * ix(m, z) * (env.deriv(z.t) * T + env.value(z.t) * Tt);
    }
    return v;
  });
  p.du = VectorField(g);
  for (int k = 0; k < n; ++k) {
    p.du->comp[k] = ScalarField::sample(g, [&, k](const Point& z) {
      double v = 0.0;
      for (const auto& m : terms)
        v -= m.a * m.k[k] * std::sin(spatial(m, z)) * std::cos(m.omega * z.t + m.tphase) *
             env.value(z.t);
      return v;
    });
  }
  gate(p);
  return p;
}

}  // namespace gen

// Random smooth u that is not a heat solution; G = (0,...,0,g_n) with g_n the
// exact x_n-antiderivative of u_t, so div G = u_t identically. With
// vanish_initial the pair also has a vanishing initial layer at the earliest
// grid time.
inline SolutionPair antiderivative_solution(const Grid& g, const ParabolicRegion& region,
                                            std::uint64_t seed, bool vanish_initial = false,
                                            int terms = 4, int max_mode = 3) {
  max_mode = std::min(max_mode, 6);
  require(double(max_mode) <= 1.0 / (4.0 * g.h) + 1e-9,
          "antiderivative_solution: modes under-resolved at this h");
  detail::Rng rng(seed);
  std::vector<gen::TrigTerm> tt(terms);
  for (auto& m : tt) {
    m.a = rng.uniform(-1.0, 1.0);
    m.phase = rng.uniform(0.0, 2.0 * M_PI);
    m.omega = rng.uniform(-3.0, 3.0);
    m.tphase = rng.uniform(0.0, 2.0 * M_PI);
    m.k.resize(g.n);
    for (int k = 0; k < g.n; ++k) m.k[k] = double(rng.uniform_int(-max_mode, max_mode));
  }
  gen::Envelope env;
  if (vanish_initial) {
    env.active = true;
    env.t_lo = g.lo(g.n);
    env.span = 2.0 * g.time_half;
  }
  std::string label = std::string(vanish_initial ? "zero_initial" : "antiderivative") +
                      "(seed=" + std::to_string(seed) + ")";
  return gen::antiderivative_from_terms(g, region, tt, env, std::move(label));
}

namespace gen {

// u = sum a F(x_n) Y(x') T(t) with F(0) = 0, so the trace on {x_n = 0}
// vanishes identically; G again comes from the exact x_n-antiderivative.
struct ZeroTraceTerm {
  double a = 1.0;
  bool linear = true;  // F = x_n, else F = sin(kappa x_n)
  double kappa = 1.0;
  std::vector<double> kp;  // tangential wavevector, size n-1
  double phase = 0.0;
  double omega = 0.0;
  double tphase = 0.0;

  double F(double xn) const { return linear ? xn : std::sin(kappa * xn); }
  double Fd(double xn) const { return linear ? 1.0 : kappa * std::cos(kappa * xn); }
  double IF(double xn) const {
    return linear ? 0.5 * xn * xn : (1.0 - std::cos(kappa * xn)) / kappa;
  }
  double Y(const Point& z) const {
    double arg = phase;
    for (std::size_t k = 0; k < kp.size(); ++k) arg += kp[k] * z.x[k];
    return std::cos(arg);
  }
  double Yd(const Point& z, int i) const {
    double arg = phase;
    for (std::size_t k = 0; k < kp.size(); ++k) arg += kp[k] * z.x[k];
    return -kp[i] * std::sin(arg);
  }
  double T(double t) const { return std::cos(omega * t + tphase); }
  double Td(double t) const { return -omega * std::sin(omega * t + tphase); }
};

inline SolutionPair zero_trace_from_terms(const Grid& g, const ParabolicRegion& half_region,
                                          const std::vector<ZeroTraceTerm>& terms,
                                          std::string label) {
  const int n = g.n;
  SolutionPair p;
  p.region = half_region;
  p.label = std::move(label);
  p.declared_tol = default_tol(g, half_region);
  p.u = ScalarField::sample(g, [&](const Point& z) {
    double v = 0.0;
    for (const auto& m : terms) v += m.a * m.F(z.x[n - 1]) * m.Y(z) * m.T(z.t);
    return v;
  });
  p.G = VectorField(g);
  p.G.comp[n - 1] = ScalarField::sample(g, [&](const Point& z) {
    double v = 0.0;
    for (const auto& m : terms) v += m.a * m.IF(z.x[n - 1]) * m.Y(z) * m.Td(z.t);
    return v;
  });
  p.du = VectorField(g);
  for (int k = 0; k < n; ++k) {
    p.du->comp[k] = ScalarField::sample(g, [&, k](const Point& z) {
      double v = 0.0;
      for (const auto& m : terms) {
        if (k == n - 1)
          v += m.a * m.Fd(z.x[n - 1]) * m.Y(z) * m.T(z.t);
        else
          v += m.a * m.F(z.x[n - 1]) * m.Yd(z, k) * m.T(z.t);
      }
      return v;
    });
  }
  gate(p);
  return p;
}

}  // namespace gen

inline SolutionPair zero_trace_solution(const Grid& g, const ParabolicRegion& half_region,
                                        std::uint64_t seed, int terms = 3, int max_mode = 3) {
  require(half_region.is_half() && half_region.clip == HalfClip::space,
          "zero_trace_solution: region must be a spatial half region");
  max_mode = std::min(max_mode, 6);
  require(double(std::max(max_mode, 4)) <= 1.0 / (4.0 * g.h) + 1e-9,
          "zero_trace_solution: modes under-resolved at this h");
  detail::Rng rng(seed);
  std::vector<gen::ZeroTraceTerm> tt(terms);
  for (auto& m : tt) {
    m.a = rng.uniform(-1.0, 1.0);
    m.linear = rng.uniform_int(0, 1) == 0;
    m.kappa = rng.uniform(1.0, 4.0);  // within the resolved-mode cutoff
    m.kp.resize(g.n - 1);
    for (int k = 0; k < g.n - 1; ++k) m.kp[k] = double(rng.uniform_int(-max_mode, max_mode));
    m.phase = rng.uniform(0.0, 2.0 * M_PI);
    m.omega = rng.uniform(-3.0, 3.0);
    m.tphase = rng.uniform(0.0, 2.0 * M_PI);
  }
  return gen::zero_trace_from_terms(g, half_region, tt,
                                    "zero_trace(seed=" + std::to_string(seed) + ")");
}

// w(z) = max(d_p(z, z0), h/2)^a; the clamp keeps the singular cell finite
// while preserving the behavior at resolved scales.
inline WeightField power_weight(const Grid& g, double a, const Point& z0) {
  double clamp = g.h / 2.0;
  ScalarField f = ScalarField::sample(g, [&](const Point& z) {
    return std::pow(std::max(parabolic_distance(z, z0), clamp), a);
  });
  return WeightField(std::move(f), "power(a=" + gen::num(a) + ")");
}

inline WeightField power_weight(const Grid& g, double a) {
  return power_weight(g, a, Point(std::vector<double>(g.n, 0.0), 0.0));
}

// w = exp(a * sin(pi x_1 / (2 Lx)) * bump(t)): each time slice inside the
// bump is strongly lopsided in space, while parabolic cubes average the
// temporal ramp away. Used by the slice-gap search.
inline WeightField oscillatory_weight(const Grid& g, double amplitude, int time_width_cells) {
  double half_t = 0.5 * double(time_width_cells) * g.h * g.h;
  double lx = g.space_half[0];
  ScalarField f = ScalarField::sample(g, [&](const Point& z) {
    double s = (z.t - g.origin_t) / half_t;
    double psi = std::abs(s) < 1.0 ? ipow(1.0 - s * s, 3) : 0.0;
    double phi = std::sin(M_PI * (z.x[0] - g.origin_x[0]) / (2.0 * lx));
    return std::exp(amplitude * phi * psi);
  });
  return WeightField(std::move(f), "osc(a=" + gen::num(amplitude) +
                                       ",w=" + std::to_string(time_width_cells) + ")");
}

// Sampled W^{2,1} test function with exact u_t, Du, D^2u.
struct W21Function {
  ScalarField u;
  ScalarField ut;
  VectorField du;
  std::vector<ScalarField> d2u;  // row-major n x n
  std::string label;

  const ScalarField& hess(int i, int j) const { return d2u[i * du.size() + j]; }
};

namespace gen {

struct W21Term {
  double a = 1.0;
  std::vector<double> k;      // per-axis wavenumber
  std::vector<double> phase;  // per-axis phase
  double omega = 0.0;
  double tphase = 0.0;
};

inline W21Function w21_from_terms(const Grid& g, const std::vector<W21Term>& terms,
                                  std::string label) {
  const int n = g.n;
  W21Function f;
  f.label = std::move(label);
  std::vector<double> fv(n), fd(n), fdd(n);
  auto eval = [&](const Point& z, int di, int dj, bool dt) {
    double v = 0.0;
    for (const auto& m : terms) {
      double prod = m.a;
      for (int k = 0; k < n; ++k) {
        double arg = m.k[k] * z.x[k] + m.phase[k];
        int order = (k == di ? 1 : 0) + (k == dj ? 1 : 0);
        double fac = order == 0   ? std::cos(arg)
                     : order == 1 ? -m.k[k] * std::sin(arg)
                                  : -m.k[k] * m.k[k] * std::cos(arg);
        prod *= fac;
      }
      double targ = m.omega * z.t + m.tphase;
      prod *= dt ? -m.omega * std::sin(targ) : std::cos(targ);
      v += prod;
    }
    return v;
  };
  f.u = ScalarField::sample(g, [&](const Point& z) { return eval(z, -1, -2, false); });
  f.ut = ScalarField::sample(g, [&](const Point& z) { return eval(z, -1, -2, true); });
  f.du = VectorField(g);
  for (int i = 0; i < n; ++i)
    f.du.comp[i] = ScalarField::sample(g, [&, i](const Point& z) { return eval(z, i, -2, false); });
  f.d2u.reserve(n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      f.d2u.push_back(
          ScalarField::sample(g, [&, i, j](const Point& z) { return eval(z, i, j, false); }));
  return f;
}

}  // namespace gen

inline W21Function w21_function(const Grid& g, std::uint64_t seed, int terms = 4,
                                int max_mode = 3) {
  max_mode = std::min(max_mode, 6);
  require(double(max_mode) <= 1.0 / (4.0 * g.h) + 1e-9,
          "w21_function: modes under-resolved at this h");
  detail::Rng rng(seed);
  std::vector<gen::W21Term> tt(terms);
  for (auto& m : tt) {
    m.a = rng.uniform(-1.0, 1.0);
    m.omega = rng.uniform(-2.0, 2.0);
    m.tphase = rng.uniform(0.0, 2.0 * M_PI);
    m.k.resize(g.n);
    m.phase.resize(g.n);
    for (int k = 0; k < g.n; ++k) {
      m.k[k] = double(rng.uniform_int(-max_mode, max_mode));
      m.phase[k] = rng.uniform(0.0, 2.0 * M_PI);
    }
  }
  return gen::w21_from_terms(g, tt, "w21(seed=" + std::to_string(seed) + ")");
}

struct BatteryEntry {
  std::string generator;
  std::uint64_t seed = 0;
  double declared_tol = 0.0;
  double measured_residual = 0.0;
  std::map<std::string, double> params;
};

struct Battery {
  std::vector<SolutionPair> pairs;
  std::vector<BatteryEntry> entries;
};

// Deterministic mixed battery over the requested generators. Every pair has
// passed its residual gate by construction.
inline Battery make_solution_battery(const Grid& g, const ParabolicRegion& region, int count,
                                     std::uint64_t seed,
                                     std::vector<std::string> generators = {},
                                     int max_mode = 3) {
  if (generators.empty()) generators = {"heat_kernel", "fourier", "antiderivative"};
  Battery b;
  detail::Rng rng(seed);
  for (int i = 0; i < count; ++i) {
    const std::string& gname = generators[i % generators.size()];
    std::uint64_t entry_seed = seed * 1000003ULL + std::uint64_t(i);
    BatteryEntry e;
    e.generator = gname;
    e.seed = entry_seed;
    if (gname == "heat_kernel") {
      Point z0(std::vector<double>(g.n), 0.0);
      for (int k = 0; k < g.n; ++k) z0.x[k] = rng.uniform(-0.3, 0.3) * g.space_half[k];
      // parameters depend only on continuum extents, never on h, so the same
      // seed reproduces the same pair under grid refinement
      double t_shift = g.time_half * (1.2 + rng.uniform(0.0, 1.0));
      b.pairs.push_back(heat_kernel_solution(g, region, z0, t_shift));
      e.params["t_shift"] = t_shift;
    } else if (gname == "fourier") {
      b.pairs.push_back(fourier_heat_solution(g, region, entry_seed, max_mode));
      e.params["max_mode"] = max_mode;
    } else if (gname == "antiderivative") {
      b.pairs.push_back(antiderivative_solution(g, region, entry_seed, false, 4, max_mode));
      e.params["max_mode"] = max_mode;
    } else {
      throw Error("make_solution_battery: unknown generator '" + gname + "'");
    }
    e.declared_tol = b.pairs.back().declared_tol;
    e.measured_residual = b.pairs.back().measured_residual;
    b.entries.push_back(std::move(e));
  }
  return b;
}

inline Battery make_zero_trace_battery(const Grid& g, const ParabolicRegion& half_region,
                                       int count, std::uint64_t seed) {
  Battery b;
  for (int i = 0; i < count; ++i) {
    std::uint64_t entry_seed = seed * 1000003ULL + std::uint64_t(i);
    b.pairs.push_back(zero_trace_solution(g, half_region, entry_seed));
    b.entries.push_back({"zero_trace", entry_seed, b.pairs.back().declared_tol,
                         b.pairs.back().measured_residual, {}});
  }
  return b;
}

inline Battery make_zero_initial_battery(const Grid& g, const ParabolicRegion& region, int count,
                                         std::uint64_t seed, int max_mode = 3) {
  Battery b;
  for (int i = 0; i < count; ++i) {
    std::uint64_t entry_seed = seed * 1000003ULL + std::uint64_t(i);
    b.pairs.push_back(antiderivative_solution(g, region, entry_seed, true, 4, max_mode));
    b.entries.push_back({"zero_initial", entry_seed, b.pairs.back().declared_tol,
                         b.pairs.back().measured_residual, {}});
  }
  return b;
}

inline std::vector<W21Function> make_w21_battery(const Grid& g, int count, std::uint64_t seed,
                                                 int max_mode = 3) {
  std::vector<W21Function> out;
  for (int i = 0; i < count; ++i)
    out.push_back(w21_function(g, seed * 1000003ULL + std::uint64_t(i), 4, max_mode));
  return out;
}

}  // namespace parasp
