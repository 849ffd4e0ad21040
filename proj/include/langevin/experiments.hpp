#pragma once

// Monte Carlo experiments shared by the command-line tool and the acceptance
// suite. Every experiment is a pure function of (config, seed): path i draws
// only from the streams derived from (seed, i), and results are gathered by
// index, so the output does not depend on the number of workers.

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "langevin/config.hpp"
#include "langevin/counterexample.hpp"
#include "langevin/gauss_paths.hpp"
#include "langevin/impact.hpp"
#include "langevin/io.hpp"
#include "langevin/recovery.hpp"
#include "langevin/skorohod.hpp"
#include "langevin/stat_tests.hpp"

namespace langevin {

using ojson = nlohmann::ordered_json;

// Runs fn(0..count-1) on `workers` threads. Workers take the next free index;
// results land at their index. The exception of the lowest failing index is
// rethrown after all workers finish.
template <typename F>
auto run_indexed(std::size_t count, std::size_t workers, F fn)
    -> std::vector<decltype(fn(std::size_t{}))> {
  using R = decltype(fn(std::size_t{}));
  std::vector<R> out(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        out[i] = fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  workers = std::max<std::size_t>(1, std::min(workers, count));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

struct GateResult {
  std::string name;
  bool pass = false;
  ojson report;
  double seconds = 0.0;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// Original-grid horizon cap (time units) for streamed constructions. Long
// infimum runs are fast-forwarded, so the cap costs no memory.
inline constexpr double kConstructionCap = 1e8;

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t m = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + m, v.end());
  double hi = v[m];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + m);
  return 0.5 * (lo + hi);
}

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

inline double max_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
}

inline PathBundle construction_bundle(const RunConfig& cfg, std::size_t path) {
  const auto pair = sample_langevin_pair(TimeGrid::over(cfg.t_max, cfg.dt),
                                         derive_stream(cfg.seed, path, Channel::kDriving));
  return reflect_construct(pair.W, pair.Y);
}

inline IntegratorConfig integrator_config(const RunConfig& cfg, std::size_t path) {
  IntegratorConfig ic;
  ic.dt = cfg.dt;
  ic.t_max = cfg.t_max;
  ic.forcing = WhiteNoise{derive_stream(cfg.seed, path, Channel::kIntegrator)};
  ic.refine_impacts = cfg.refine;
  return ic;
}

inline SolutionTrace integrator_trace(const RunConfig& cfg, std::size_t path) {
  return simulate_sde(integrator_config(cfg, path));
}

inline LazyBrownian fresh_bprime(const RunConfig& cfg, std::size_t path) {
  const auto cap = static_cast<std::size_t>(std::min(cfg.bp_cap / cfg.dt, 1e12));
  return LazyBrownian(cfg.dt, derive_stream(cfg.seed, path, Channel::kBPrime), cap);
}

// Construction state at clock indices `ks` (sorted); nullopt when the
// original horizon cap is exceeded.
inline std::optional<std::vector<ReflectedState>> streamed_states(
    const RunConfig& cfg, std::size_t path, std::span<const std::size_t> ks) {
  StreamingConstruction sc(cfg.dt, derive_stream(cfg.seed, path, Channel::kDriving),
                           static_cast<std::size_t>(kConstructionCap / cfg.dt), true);
  try {
    return sc.states_at(ks);
  } catch (const HorizonError&) {
    return std::nullopt;
  }
}

inline ojson residual_summary(const std::vector<double>& r, double tol) {
  ojson j;
  j["paths"] = r.size();
  j["max"] = max_of(r);
  j["median"] = median(r);
  j["tolerance"] = tol;
  j["violations"] = std::count_if(r.begin(), r.end(), [&](double x) { return !(x <= tol); });
  return j;
}

// Time-change identity: max_k |T_k - k dt - sigma'(A_k)| <= 2 dt on every path.
inline GateResult lemma1_gate(const RunConfig& cfg) {
  Stopwatch sw;
  const double tol = cfg.tol.value_or(2.0 * cfg.dt);
  const auto res = run_indexed(cfg.paths, cfg.workers, [&](std::size_t i) {
    return verify_lemma1(construction_bundle(cfg, i));
  });
  GateResult g{"lemma1", max_of(res) <= tol, residual_summary(res, tol), sw.seconds()};
  return g;
}

// Reconstruction: |W - (B o tau + B' o tau')| <= 1e-12 at every grid point.
inline GateResult prop2_gate(const RunConfig& cfg) {
  Stopwatch sw;
  const double tol = cfg.tol.value_or(1e-12);
  const auto res = run_indexed(cfg.paths, cfg.workers, [&](std::size_t i) {
    return verify_prop2(construction_bundle(cfg, i));
  });
  return {"prop2", max_of(res) <= tol, residual_summary(res, tol), sw.seconds()};
}

// Round trip: construction -> recovery with its own B' -> X against
// (Y - I) o T and T against the rebuilt time change. With method sde the
// trace comes from the integrator and a fresh B'; only the X residual is
// gated there, at 5 sqrt(dt).
inline GateResult prop3_gate(const RunConfig& cfg) {
  Stopwatch sw;
  struct Row {
    double ii = 0.0, iii = 0.0, w_gap = 0.0;
  };
  const bool sde = cfg.method == "sde";
  const auto rows = run_indexed(cfg.paths, cfg.workers, [&](std::size_t i) {
    Row row;
    if (sde) {
      const auto tr = integrator_trace(cfg, i);
      auto bp = fresh_bprime(cfg, i);
      const auto rec = build_recovery(tr.X, tr.V, tr.A, tr.B, bp);
      const auto rep = verify_prop3(rec, tr.X);
      row.ii = rep.residual_ii;
      row.iii = rep.residual_iii;
    } else {
      const auto b = construction_bundle(cfg, i);
      const auto rec = build_recovery(b);
      const auto rep = verify_prop3(rec, b.X);
      row.ii = rep.residual_ii;
      row.iii = rep.residual_iii;
      row.w_gap = sup_distance(rec.W, b.W, b.W.size() - 1);
    }
    return row;
  });
  std::vector<double> ii, iii, gap;
  for (const auto& r : rows) {
    ii.push_back(r.ii);
    iii.push_back(r.iii);
    gap.push_back(r.w_gap);
  }
  const double tol_ii = cfg.tol.value_or(sde ? 5.0 * std::sqrt(cfg.dt) : 2.0 * cfg.dt);
  const double tol_iii = cfg.tol.value_or(2.0 * cfg.dt);
  GateResult g{"prop3", false, ojson::object(), 0.0};
  g.report["residual_ii"] = residual_summary(ii, tol_ii);
  g.report["residual_iii"] = residual_summary(iii, tol_iii);
  g.pass = max_of(ii) <= tol_ii && (sde || max_of(iii) <= tol_iii);
  if (!sde) {
    g.report["recovered_W_gap"] = residual_summary(gap, 1e-12);
    g.pass = g.pass && max_of(gap) <= 1e-12;
  }
  g.seconds = sw.seconds();
  return g;
}

// Open set O: its length up to s equals tau'(s) within 2 dt, and on grid
// points inside O, W <= slack and X(tau) <= slack, slack = sqrt(dt log(1/dt)).
inline GateResult lemma4_gate(const RunConfig& cfg) {
  Stopwatch sw;
  const bool sde = cfg.method == "sde";
  const auto reps = run_indexed(cfg.paths, cfg.workers, [&](std::size_t i) {
    if (sde) {
      const auto tr = integrator_trace(cfg, i);
      auto bp = fresh_bprime(cfg, i);
      RecoveryOptions opt;
      opt.window = tr.X.size() - 1;
      return verify_lemma4(build_recovery(tr.X, tr.V, tr.A, tr.B, bp, opt), tr.X);
    }
    const auto b = construction_bundle(cfg, i);
    return verify_lemma4(build_recovery(b), b.X);
  });
  const double tol = cfg.tol.value_or(2.0 * cfg.dt);
  const double slack = std::sqrt(cfg.dt * std::log(1.0 / cfg.dt));
  std::vector<double> stj, wmax, xmax;
  std::size_t intervals = 0, points = 0;
  for (const auto& r : reps) {
    stj.push_back(r.stieltjes_residual);
    if (r.interior_points > 0) wmax.push_back(r.max_W_in_O);
    xmax.push_back(r.max_X_at_tau_in_O);
    intervals += r.intervals;
    points += r.interior_points;
  }
  GateResult g{"lemma4", false, ojson::object(), 0.0};
  g.report["stieltjes_residual"] = residual_summary(stj, tol);
  g.report["max_W_in_O"] = residual_summary(wmax, slack);
  g.report["max_X_at_tau_in_O"] = residual_summary(xmax, slack);
  g.report["intervals"] = intervals;
  g.report["interior_points"] = points;
  g.pass = max_of(stj) <= tol && max_of(wmax) <= slack && max_of(xmax) <= slack;
  g.seconds = sw.seconds();
  return g;
}

// Brownian battery on W recovered from integrator traces with a fresh B' on
// the window [0, t_max] (method sde), or on the clock-grid B of the
// construction (method construction). Passes if >= 95% of paths pass.
inline GateResult bm_gate(const RunConfig& cfg) {
  Stopwatch sw;
  const bool sde = cfg.method == "sde";
  const auto reps = run_indexed(cfg.paths, cfg.workers, [&](std::size_t i) {
    if (sde) {
      const auto tr = integrator_trace(cfg, i);
      auto bp = fresh_bprime(cfg, i);
      RecoveryOptions opt;
      opt.window = tr.X.size() - 1;
      const auto rec = build_recovery(tr.X, tr.V, tr.A, tr.B, bp, opt);
      return brownian_battery(rec.W);
    }
    const auto b = construction_bundle(cfg, i);
    return brownian_battery(b.B);
  });
  std::size_t passed = 0;
  for (const auto& r : reps) passed += r.pass ? 1 : 0;
  const double frac = static_cast<double>(passed) / static_cast<double>(reps.size());
  const double need = cfg.tol.value_or(0.95);
  GateResult g{"bm", frac >= need, ojson::object(), sw.seconds()};
  g.report["source"] = sde ? "recovered W from integrator traces" : "construction B";
  g.report["paths"] = reps.size();
  g.report["passed"] = passed;
  g.report["pass_fraction"] = frac;
  g.report["required_fraction"] = need;
  g.report["first_report"] = to_json(reps.front());
  return g;
}

// X at clock time t from both methods, independent paths; two-sample KS.
inline GateResult crosscheck_gate(const RunConfig& cfg, double p_min = 1e-3) {
  Stopwatch sw;
  const std::size_t n = cfg.steps();
  const std::size_t ks[] = {n};
  const auto cons = run_indexed(cfg.paths, cfg.workers, [&](std::size_t i) {
    const auto s = streamed_states(cfg, i, ks);
    return s ? s->front().X : std::nan("");
  });
  const auto sde = run_indexed(cfg.paths, cfg.workers, [&](std::size_t i) {
    return integrator_trace(cfg, i).X.back();
  });
  std::vector<double> a;
  for (double x : cons) {
    if (!std::isnan(x)) a.push_back(x);
  }
  const auto ks2 = ks_two_sample(a, sde, p_min);
  GateResult g{"crosscheck", ks2.pass, ojson::object(), sw.seconds()};
  g.report["construction_samples"] = a.size();
  g.report["excluded_at_cap"] = cons.size() - a.size();
  g.report["construction_cap_time"] = kConstructionCap;
  g.report["integrator_samples"] = sde.size();
  g.report["construction_mean"] = mean(a);
  g.report["integrator_mean"] = mean(sde);
  g.report["ks"] = to_json(ks2);
  return g;
}

// Median over paths of the time X spends at 0 on [0, t_max], per dt.
inline std::vector<double> zero_set_medians(const RunConfig& base, const std::vector<double>& dts,
                                            const std::string& method) {
  std::vector<double> out;
  for (double dt : dts) {
    RunConfig cfg = base;
    cfg.dt = dt;
    const std::size_t n = cfg.steps();
    const auto vals = run_indexed(cfg.paths, cfg.workers, [&](std::size_t i) {
      if (method == "sde") return zero_set_measure(integrator_trace(cfg, i).X);
      std::vector<std::size_t> ks(n + 1);
      for (std::size_t k = 0; k <= n; ++k) ks[k] = k;
      const auto s = streamed_states(cfg, i, ks);
      if (!s) return std::nan("");
      SamplePath X{TimeGrid{0.0, dt, n}, {}};
      for (const auto& st : *s) X.values.push_back(st.X);
      return zero_set_measure(X);
    });
    std::vector<double> ok;
    for (double v : vals) {
      if (!std::isnan(v)) ok.push_back(v);
    }
    out.push_back(median(ok));
  }
  return out;
}

inline GateResult zero_set_gate(const RunConfig& cfg, const std::vector<double>& dts) {
  Stopwatch sw;
  GateResult g{"zero_set", true, ojson::object(), 0.0};
  g.report["dt"] = dts;
  for (const std::string method : {"construction", "sde"}) {
    const auto med = zero_set_medians(cfg, dts, method);
    bool dec = true;
    for (std::size_t i = 1; i < med.size(); ++i) dec = dec && med[i] < med[i - 1];
    g.report[method] = {{"medians", med}, {"strictly_decreasing", dec}};
    g.pass = g.pass && dec;
  }
  g.seconds = sw.seconds();
  return g;
}

// X at time c t_max against c^{3/2} X at t_max (Brownian scaling of the
// integrated process), independent path sets, construction method.
inline GateResult scaling_gate(const RunConfig& cfg, double c = 4.0, double p_min = 1e-3) {
  Stopwatch sw;
  const std::size_t n1 = cfg.steps();
  const auto nc = static_cast<std::size_t>(std::llround(c * cfg.t_max / cfg.dt));
  const double factor = std::pow(c, 1.5);
  const auto x1 = run_indexed(cfg.paths, cfg.workers, [&](std::size_t i) {
    const std::size_t ks[] = {n1};
    const auto s = streamed_states(cfg, i, ks);
    return s ? factor * s->front().X : std::nan("");
  });
  const auto xc = run_indexed(cfg.paths, cfg.workers, [&](std::size_t i) {
    const std::size_t ks[] = {nc};
    const auto s = streamed_states(cfg, cfg.paths + i, ks);
    return s ? s->front().X : std::nan("");
  });
  std::vector<double> a, b;
  for (double x : x1) {
    if (!std::isnan(x)) a.push_back(x);
  }
  for (double x : xc) {
    if (!std::isnan(x)) b.push_back(x);
  }
  const auto ks2 = ks_two_sample(b, a, p_min);
  GateResult g{"scaling", ks2.pass, ojson::object(), sw.seconds()};
  g.report["c"] = c;
  g.report["factor"] = factor;
  g.report["excluded_at_cap"] = (x1.size() - a.size()) + (xc.size() - b.size());
  g.report["ks"] = to_json(ks2);
  return g;
}

// Exhaustive audit of integrator traces: each clamped step ends at (0, 0)
// exactly and A never decreases. Runs with and without impact refinement.
inline GateResult inelastic_gate(const RunConfig& cfg) {
  Stopwatch sw;
  std::size_t clamps = 0, violations = 0, events = 0;
  for (const bool refine : {false, true}) {
    RunConfig c = cfg;
    c.refine = refine;
    const auto rows = run_indexed(cfg.paths, cfg.workers, [&](std::size_t i) {
      const auto tr = integrator_trace(c, i);
      std::array<std::size_t, 3> r{0, 0, tr.events.size()};
      for (std::size_t k = 1; k < tr.X.size(); ++k) {
        if (tr.clamped[k]) {
          ++r[0];
          if (tr.X.values[k] != 0.0 || tr.V.values[k] != 0.0) ++r[1];
        }
        if (tr.A.values[k] < tr.A.values[k - 1]) ++r[1];
        if (tr.X.values[k] < 0.0) ++r[1];
      }
      return r;
    });
    for (const auto& r : rows) {
      clamps += r[0];
      violations += r[1];
      events += r[2];
    }
  }
  GateResult g{"inelastic", violations == 0, ojson::object(), sw.seconds()};
  g.report["traces"] = 2 * cfg.paths;
  g.report["clamped_steps"] = clamps;
  g.report["impact_events"] = events;
  g.report["violations"] = violations;
  return g;
}

// sup over [0, t_max] of |W_eps - W| for each epsilon, integrator traces with
// a fresh B'. Passes when the distance never increases as epsilon decreases
// and the smallest-epsilon distance is at most the largest-epsilon one.
inline GateResult splice_gate(const RunConfig& cfg, const std::vector<double>& eps) {
  Stopwatch sw;
  const auto rows = run_indexed(cfg.paths, cfg.workers, [&](std::size_t i) {
    const auto tr = integrator_trace(cfg, i);
    RecoveryOptions opt;
    opt.window = tr.X.size() - 1;
    auto bp = fresh_bprime(cfg, i);
    const auto full = build_recovery(tr.X, tr.V, tr.A, tr.B, bp, opt);
    std::vector<double> d;
    for (double e : eps) {
      auto bp_e = fresh_bprime(cfg, i);
      const auto s = epsilon_splice(tr.X, tr.V, tr.A, tr.B, bp_e, e, opt);
      d.push_back(sup_distance(s.W_eps(), full.W, *opt.window));
    }
    return d;
  });
  std::size_t bad = 0;
  ojson per_path = ojson::array();
  for (const auto& d : rows) {
    bool ok = d.back() <= d.front();
    for (std::size_t j = 1; j < d.size(); ++j) ok = ok && d[j] <= d[j - 1];
    bad += ok ? 0 : 1;
    per_path.push_back(d);
  }
  GateResult g{"splice", bad == 0, ojson::object(), sw.seconds()};
  g.report["epsilon"] = eps;
  g.report["paths"] = rows.size();
  g.report["nonmonotone_paths"] = bad;
  g.report["sup_distance"] = per_path;
  return g;
}

// Counterexample for regularity index k on [1, 4].
inline GateResult counterexample_gate(const RunConfig& cfg) {
  Stopwatch sw;
  const CounterexampleSpec spec{cfg.k, 0, 1};
  const double tol = cfg.tol.value_or(1e-6);
  GateResult g{"counterexample", false, ojson::object(), 0.0};
  const auto built = build_phi(spec);
  const auto cand = candidate_solutions(spec, built.phi);
  const auto ra = verify_inclusion(cand.alpha, built.phi, tol);
  const auto rb = verify_inclusion(cand.beta, built.phi, tol);
  const double d2 = divergence_at(2.0, spec);
  const double expected = alpha_eval(2.0, spec) - beta_eval(2.0, spec);
  g.report["k"] = spec.k;
  g.report["p"] = spec.p();
  g.report["audit"] = to_json(built.audit);
  g.report["condition_number"] = nullptr;
  g.report["X_alpha"] = to_json(ra);
  g.report["X_beta"] = to_json(rb);
  g.report["divergence_at_2"] = d2;
  g.report["divergence_sup"] = divergence(spec);
  g.pass = ra.pass && rb.pass && std::abs(d2 - expected) <= 1e-9 && d2 > 0.0;
  g.seconds = sw.seconds();
  return g;
}

// Null-model rejection counts of the KS tests at level alpha over `reps`
// repetitions with n = 10^4 normal draws; the rate must lie in
// [alpha / 2, 2 alpha].
inline GateResult calibration_gate(std::uint64_t seed, std::size_t reps = 100,
                                   std::size_t n = 10000, double alpha = 0.01) {
  Stopwatch sw;
  std::size_t rej_one = 0, rej_two = 0;
  for (std::size_t r = 0; r < reps; ++r) {
    NormalSource a(derive_stream(seed, 2 * r, Channel::kAux));
    NormalSource b(derive_stream(seed, 2 * r + 1, Channel::kAux));
    std::vector<double> x(n), y(n);
    for (auto& v : x) v = a.next();
    for (auto& v : y) v = b.next();
    rej_one += ks_one_sample(x, normal_cdf, alpha).pass ? 0 : 1;
    rej_two += ks_two_sample(x, y, alpha).pass ? 0 : 1;
  }
  const auto rate = [&](std::size_t c) { return static_cast<double>(c) / static_cast<double>(reps); };
  const auto in_band = [&](std::size_t c) { return rate(c) >= 0.5 * alpha && rate(c) <= 2.0 * alpha; };
  GateResult g{"calibration", in_band(rej_one) && in_band(rej_two), ojson::object(), sw.seconds()};
  g.report["repetitions"] = reps;
  g.report["n"] = n;
  g.report["alpha"] = alpha;
  g.report["ks_one_sample_rejections"] = rej_one;
  g.report["ks_two_sample_rejections"] = rej_two;
  g.report["band"] = {0.5 * alpha, 2.0 * alpha};
  return g;
}

}  // namespace langevin
