#pragma once

// Moreau-style time stepping for a particle on the half-line with completely
// inelastic impacts at 0:
//   v* = V + dB (or F(t) dt),   x* = X + v* dt,
//   x* < 0, or x* = 0 with v* < 0  ->  X = V = 0 and A absorbs -v*.
// A is stored so that V == (v0 + B) + A holds bit-exactly at every step.

#include <cmath>
#include <algorithm>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "langevin/error.hpp"
#include "langevin/gauss_paths.hpp"
#include "langevin/rng.hpp"
#include "langevin/skorohod.hpp"

namespace langevin {

struct WhiteNoise {
  RngStream stream;
};

using ForceFn = std::function<double(double)>;
using Forcing = std::variant<WhiteNoise, ForceFn>;

struct IntegratorConfig {
  double t0 = 0.0;
  double dt = 1e-3;
  double t_max = 1.0;  // end time
  double x0 = 0.0;
  double v0 = 0.0;
  Forcing forcing = WhiteNoise{};
  bool refine_impacts = false;

  void validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("integrator: dt must be positive");
    if (!(t_max - t0 >= dt * (1.0 - 1e-12))) throw ConfigError("integrator: t_max - t0 must be >= dt");
    if (!(x0 >= 0.0)) throw PreconditionError("integrator: x0 must be >= 0");
  }
};

struct ImpactEvent {
  double time = 0.0;
  double v_in = 0.0;   // incoming velocity, < 0
  double jump = 0.0;   // -v_in
  std::size_t index = 0;  // grid index at which X = 0 after the clamp
};

struct SolutionTrace {
  SamplePath X, V, A, B;
  std::vector<ImpactEvent> events;
  double v0 = 0.0;
  std::size_t clamped_steps = 0;
  std::vector<std::uint8_t> clamped;  // per grid index k >= 1: step into k clamped
};

namespace detail {

// Clamp located at the zero of the linear-in-step position. The partial
// noise increment up to that instant is drawn from the Brownian bridge of
// the step. Returns false (caller falls back to the end-of-step clamp) when
// the sampled incoming velocity is not negative.
inline bool refined_step(const IntegratorConfig& cfg, const WhiteNoise* noise,
                         std::optional<NormalSource>& aux, double db, double dt, double t,
                         std::size_t k, double& x, double& v, double& a, double& b,
                         bool& in_contact, SolutionTrace& tr) {
  const double b_next = b + db;
  const double v_star = (cfg.v0 + b_next) + a;
  const double s0 = std::clamp(x / (-v_star), 0.0, dt);
  const double db_mid = noise ? bridge_sample(0.0, db, dt, s0, aux->next()) : db * (s0 / dt);
  const double v_in = (cfg.v0 + (b + db_mid)) + a;
  if (!(v_in < 0.0)) return false;
  const double a_mid = -(cfg.v0 + (b + db_mid));
  b = b_next;
  const double v_end = (cfg.v0 + b) + a_mid;
  const double x_end = v_end * (dt - s0);
  tr.events.push_back({t + s0, v_in, -v_in, k + 1});
  if (x_end > 0.0) {
    a = a_mid;
    x = x_end;
    v = v_end;
    in_contact = false;
  } else {
    a = -(cfg.v0 + b);
    x = 0.0;
    v = 0.0;
    in_contact = true;
    tr.clamped[k + 1] = 1;
    ++tr.clamped_steps;
  }
  return true;
}

inline SolutionTrace integrate(const IntegratorConfig& cfg) {
  cfg.validate();
  const TimeGrid grid = TimeGrid::over(cfg.t_max, cfg.dt, cfg.t0);
  const std::size_t n = grid.n;
  const double dt = grid.dt;
  SolutionTrace tr;
  tr.v0 = cfg.v0;
  for (SamplePath* p : {&tr.X, &tr.V, &tr.A, &tr.B}) {
    p->grid = grid;
    p->values.assign(n + 1, 0.0);
  }
  tr.clamped.assign(n + 1, 0);
  tr.X.values[0] = cfg.x0;
  tr.V.values[0] = cfg.v0;

  const auto* noise = std::get_if<WhiteNoise>(&cfg.forcing);
  const auto* force = std::get_if<ForceFn>(&cfg.forcing);
  std::optional<NormalSource> normals;
  std::optional<NormalSource> aux;
  if (noise) {
    normals.emplace(noise->stream);
    aux.emplace(rechannel(noise->stream, Channel::kImpactAux));
  }
  const double sd = std::sqrt(dt);

  double x = cfg.x0, v = cfg.v0, a = 0.0, b = 0.0;
  // Contact at the start behaves as if the particle had just been clamped.
  bool in_contact = cfg.x0 == 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = grid.time(k);
    const double db = noise ? sd * normals->next() : (*force)(t) * dt;
    const double b_next = b + db;
    const double v_star = (cfg.v0 + b_next) + a;
    const double x_star = x + v_star * dt;
    const bool hit = x_star < 0.0 || (x_star == 0.0 && v_star < 0.0);
    if (!hit) {
      x = x_star;
      v = v_star;
      b = b_next;
      in_contact = false;
    } else if (cfg.refine_impacts && x > 0.0 && v_star < 0.0 &&
               refined_step(cfg, noise, aux, db, dt, t, k, x, v, a, b, in_contact, tr)) {
      // handled mid-step
    } else {
      b = b_next;
      const double a_new = -(cfg.v0 + b);
      if (!in_contact) {
        tr.events.push_back({grid.time(k + 1), v_star, -v_star, k + 1});
      }
      a = a_new;
      x = 0.0;
      v = 0.0;
      in_contact = true;
      tr.clamped[k + 1] = 1;
      ++tr.clamped_steps;
    }
    tr.X.values[k + 1] = x;
    tr.V.values[k + 1] = v;
    tr.A.values[k + 1] = a;
    tr.B.values[k + 1] = b;
  }
  return tr;
}

}  // namespace detail

inline SolutionTrace simulate_sde(const IntegratorConfig& cfg) {
  if (!std::holds_alternative<WhiteNoise>(cfg.forcing)) {
    throw ConfigError("simulate_sde: white-noise forcing required");
  }
  return detail::integrate(cfg);
}

inline SolutionTrace simulate_deterministic(const IntegratorConfig& cfg) {
  const auto* f = std::get_if<ForceFn>(&cfg.forcing);
  if (!f || !*f) throw ConfigError("simulate_deterministic: force function required");
  return detail::integrate(cfg);
}

// Impact events with |v_in| > epsilon, in time order. Consecutive clamped
// steps are one contact episode and appear once, as the episode's first step.
inline std::vector<ImpactEvent> detect_impacts(const SolutionTrace& trace, double epsilon) {
  if (!(epsilon >= 0.0)) throw PreconditionError("detect_impacts: epsilon must be >= 0");
  std::vector<ImpactEvent> out;
  for (const auto& e : trace.events) {
    if (-e.v_in > epsilon) out.push_back(e);
  }
  return out;
}

// Views a construction bundle as a trace on its clock grid. Each infimum run
// becomes one impact at the clock point that follows it.
inline SolutionTrace to_trace(const PathBundle& b) {
  SolutionTrace tr;
  tr.X = b.X;
  tr.V = b.V;
  tr.A = b.A;
  tr.B = b.B;
  tr.v0 = 0.0;
  tr.clamped.assign(b.X.size(), 0);
  for (const auto& iv : b.decomposition.intervals) {
    const double v_in = b.W.values[iv.u];
    if (!(v_in < 0.0)) continue;
    const std::size_t k = b.tc.tau[iv.d];
    if (k >= b.X.size()) continue;
    tr.events.push_back({static_cast<double>(k) * b.clock_grid.dt, v_in, -v_in, k});
  }
  return tr;
}

}  // namespace langevin
