#pragma once

// Command-line front end. Exit codes: 0 success, 1 usage or configuration
// error, 2 a numerical gate failed, 3 horizon or resource limit.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "langevin/experiments.hpp"

namespace langevin {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitGate = 2, kExitHorizon = 3 };

struct CliFlags {
  std::optional<double> dt, t_max, epsilon, tol, bp_cap;
  std::optional<std::size_t> paths, workers;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> method, out;
  std::optional<int> k;
  bool refine = false;
  std::string config_file;
};

inline void add_common_flags(CLI::App& app, CliFlags& f) {
  app.add_option("--config", f.config_file, "JSON config file; flags override its values");
  app.add_option("--dt", f.dt, "time step (default 1e-3)");
  app.add_option("--t-max", f.t_max, "horizon (default 1)");
  app.add_option("--paths", f.paths, "number of paths (default 100)");
  app.add_option("--seed", f.seed, "master seed (default 0)");
  app.add_option("--method", f.method, "construction | sde (default construction)");
  app.add_option("--epsilon", f.epsilon, "splice threshold (default 0.1)");
  app.add_option("--k", f.k, "counterexample regularity index (default 1)");
  app.add_option("--out", f.out, "output directory (default $LANGEVIN_OUT_DIR or .)");
  app.add_option("--tol", f.tol, "override the gate tolerance");
  app.add_option("--workers", f.workers, "worker threads (default 1)");
  app.add_option("--bp-cap", f.bp_cap, "B' horizon cap in time units (default 1e4)");
  app.add_flag("--refine", f.refine, "locate impacts inside integrator steps");
}

// Defaults, then the config file, then flags.
inline RunConfig resolve_config(const CliFlags& f) {
  RunConfig c = f.config_file.empty() ? RunConfig{} : parse_config_file(f.config_file);
  if (f.dt) c.dt = *f.dt;
  if (f.t_max) c.t_max = *f.t_max;
  if (f.paths) c.paths = *f.paths;
  if (f.seed) c.seed = *f.seed;
  if (f.method) c.method = *f.method;
  if (f.epsilon) c.epsilon = *f.epsilon;
  if (f.k) c.k = *f.k;
  if (f.out) c.out = *f.out;
  if (f.tol) c.tol = *f.tol;
  if (f.workers) c.workers = *f.workers;
  if (f.bp_cap) c.bp_cap = *f.bp_cap;
  if (f.refine) c.refine = true;
  if (c.out.empty()) c.out = default_out_dir();
  c.validate();
  return c;
}

inline ojson envelope(const std::string& command, const RunConfig& cfg) {
  ojson j;
  j["command"] = command;
  j["seed"] = cfg.seed;
  j["config"] = to_json(cfg);
  return j;
}

inline std::filesystem::path out_path(const RunConfig& cfg, const std::string& name) {
  return std::filesystem::path(cfg.out) / name;
}

inline int finish_gate(const std::string& command, const RunConfig& cfg, const GateResult& g,
                       const std::string& file, std::ostream& log) {
  ojson j = envelope(command, cfg);
  j["pass"] = g.pass;
  j["report"] = g.report;
  const auto path = out_path(cfg, file);
  write_text(path, dump(j));
  log << command << ": " << (g.pass ? "PASS" : "FAIL") << " -> " << path.string() << "\n";
  return g.pass ? kExitOk : kExitGate;
}

inline int cmd_simulate(const RunConfig& cfg, std::ostream& log) {
  const bool sde = cfg.method == "sde";
  const auto files = run_indexed(cfg.paths, cfg.workers, [&](std::size_t i) {
    const std::string stem = cfg.method + "_path" + std::to_string(i);
    if (sde) {
      const auto tr = integrator_trace(cfg, i);
      write_text(out_path(cfg, stem + ".csv"), trace_csv(tr).str());
      write_text(out_path(cfg, stem + "_events.csv"), events_csv(tr.events).str());
    } else {
      write_text(out_path(cfg, stem + ".csv"), bundle_csv(construction_bundle(cfg, i)).str());
    }
    return stem + ".csv";
  });
  ojson j = envelope("simulate", cfg);
  j["files"] = files;
  write_text(out_path(cfg, "simulate_" + cfg.method + ".json"), dump(j));
  log << "simulate: wrote " << files.size() << " path file(s) to " << cfg.out << "\n";
  return kExitOk;
}

inline int cmd_verify(const std::string& target, const RunConfig& cfg, std::ostream& log) {
  GateResult g;
  if (target == "lemma1") g = lemma1_gate(cfg);
  else if (target == "prop2") g = prop2_gate(cfg);
  else if (target == "prop3") g = prop3_gate(cfg);
  else if (target == "bm") g = bm_gate(cfg);
  else if (target == "lemma4") g = lemma4_gate(cfg);
  else if (target == "inelastic") g = inelastic_gate(cfg);
  else if (target == "splice") g = splice_gate(cfg, {0.5, 0.1, 0.02});
  else if (target == "scaling") g = scaling_gate(cfg);
  else if (target == "zeroset") g = zero_set_gate(cfg, {cfg.dt * 10.0, cfg.dt, cfg.dt / 10.0});
  else if (target == "calibration") g = calibration_gate(cfg.seed);
  else throw ConfigError("verify: unknown target \"" + target + "\"");
  return finish_gate("verify " + target, cfg, g, "verify_" + target + ".json", log);
}

inline int cmd_counterexample(const std::string& action, const RunConfig& cfg, std::ostream& log) {
  const CounterexampleSpec spec{cfg.k, 0, 1};
  if (action == "verify") {
    return finish_gate("counterexample verify", cfg, counterexample_gate(cfg),
                       "counterexample_verify.json", log);
  }
  const auto built = build_phi(spec);
  ojson j = envelope("counterexample " + action, cfg);
  j["k"] = spec.k;
  j["p"] = spec.p();
  j["pieces"] = built.phi.pieces().size();
  j["audit"] = to_json(built.audit);
  j["condition_number"] = nullptr;
  if (action == "build") {
    write_text(out_path(cfg, "counterexample_build.json"), dump(j));
    log << "counterexample build: ok, min gap " << format_real(built.audit.min_gap) << "\n";
    return kExitOk;
  }
  if (action == "export") {
    const auto cand = candidate_solutions(spec, built.phi);
    CsvTable t;
    std::vector<double> u, a, b, phi, F, xa, xb;
    const std::size_t N = 30000;
    for (std::size_t i = 0; i <= N; ++i) {
      const double v = spec.lo() + (spec.hi() - spec.lo()) * static_cast<double>(i) / N;
      u.push_back(v);
      a.push_back(alpha_eval(v, spec));
      b.push_back(beta_eval(v, spec));
      phi.push_back(built.phi(v));
      F.push_back(force(v, built.phi));
      xa.push_back(cand.alpha.value(v));
      xb.push_back(cand.beta.value(v));
    }
    t.add("u", u);
    t.add("alpha", a);
    t.add("beta", b);
    t.add("phi", phi);
    t.add("F", F);
    t.add("X_alpha", xa);
    t.add("X_beta", xb);
    write_text(out_path(cfg, "counterexample.csv"), t.str());
    write_text(out_path(cfg, "counterexample_export.json"), dump(j));
    log << "counterexample export: wrote counterexample.csv\n";
    return kExitOk;
  }
  throw ConfigError("counterexample: unknown action \"" + action + "\"");
}

// Entry point; `log` receives the one-line summaries, errors go to stderr.
inline int run_cli(int argc, const char* const* argv, std::ostream& log = std::cout) {
  CLI::App app{"Langevin process with inelastic boundary: simulation and verification"};
  app.require_subcommand(1);
  CliFlags f;
  std::string target, action;

  auto* sim = app.add_subcommand("simulate", "write path CSVs (method construction | sde)");
  add_common_flags(*sim, f);
  auto* ver = app.add_subcommand("verify", "run a verification gate and write a JSON report");
  ver->add_option("target", target,
                  "lemma1 | prop2 | prop3 | bm | lemma4 | inelastic | splice | scaling | "
                  "zeroset | calibration")
      ->required();
  add_common_flags(*ver, f);
  auto* cc = app.add_subcommand("crosscheck", "compare X at t_max from both methods (KS)");
  add_common_flags(*cc, f);
  auto* ce = app.add_subcommand("counterexample", "deterministic non-uniqueness example");
  ce->add_option("action", action, "build | verify | export")->required();
  add_common_flags(*ce, f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    const RunConfig cfg = resolve_config(f);
    if (*sim) return cmd_simulate(cfg, log);
    if (*ver) return cmd_verify(target, cfg, log);
    if (*cc) {
      return finish_gate("crosscheck", cfg, crosscheck_gate(cfg), "crosscheck.json", log);
    }
    return cmd_counterexample(action, cfg, log);
  } catch (const ConfigError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const PreconditionError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const HorizonError& e) {
    std::cerr << "horizon error: " << e.what() << "\n";
    return kExitHorizon;
  } catch (const std::bad_alloc&) {
    std::cerr << "resource error: out of memory\n";
    return kExitHorizon;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace langevin
