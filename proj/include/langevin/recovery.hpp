#pragma once

// Rebuilds a Brownian motion W from a solution (X, V, A, B) of the impact
// equation and an independent Brownian motion B':
//   T_k = k + sigma'(A_k)          (in steps of dt)
//   W(t) = B(tau(t)) + B'(tau'(t)), tau the left-inverse of T, tau' = t - tau.
// On the extended grid, cell T_k is the k-th B-cell; all other cells carry
// increments of B'. The set O of B'-cells is the union of the intervals
// (k + sigma'(A_{k-1}), k + sigma'(A_k)) over the jumps of A.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "langevin/error.hpp"
#include "langevin/gauss_paths.hpp"
#include "langevin/skorohod.hpp"

namespace langevin {

struct OpenInterval {
  double left = 0.0;
  double right = 0.0;
  std::size_t jump_index = 0;  // clock index k of the jump of A
  double length() const { return right - left; }
};

struct RecoveryArtifacts {
  double dt = 0.0;
  FirstPassage sigma_prime;            // sigma'(A_k) for the clock points used
  std::vector<double> D_A;             // clock times where A jumps
  std::vector<std::size_t> T;          // clock index -> extended grid index
  std::vector<std::size_t> tau;        // extended index -> clock count
  std::vector<std::size_t> tau_prime;  // extended index -> B' count
  SamplePath W;                        // extended grid
  SamplePath Y;                        // integral of W, cell areas included
  std::vector<OpenInterval> O;
  bool truncated = false;              // stopped at the requested window
};

struct RecoveryOptions {
  // Largest extended index W is built up to. Unset: up to T(t_max).
  std::optional<std::size_t> window;
  // Areas (integral of B - B_left) of the clock cells. Empty: trapezoid.
  std::span<const double> b_area;
};

// First grid time at which B' strictly exceeds x. Throws HorizonError when
// the (possibly lazily extended) path never does within its cap.
inline double first_passage(LazyBrownian& bp, double x) {
  if (!(x >= 0.0)) throw PreconditionError("first_passage: level must be >= 0");
  for (std::size_t j = 0;; ++j) {
    if (bp.at(j) > x) return static_cast<double>(j) * bp.dt();
  }
}

inline double first_passage(const SamplePath& bp, double x) {
  LazyBrownian fixed(bp);
  return first_passage(fixed, x);
}

namespace detail {

inline void require_nondecreasing(const SamplePath& A) {
  for (std::size_t k = 1; k < A.size(); ++k) {
    if (A.values[k] < A.values[k - 1]) {
      throw PreconditionError("recovery: A must be nondecreasing (index " + std::to_string(k) +
                              ")");
    }
  }
}

inline RecoveryArtifacts recover(const SamplePath& A, const SamplePath& B, LazyBrownian& bp,
                                 const RecoveryOptions& opt) {
  require_aligned(A, B, "build_recovery");
  require_nondecreasing(A);
  RecoveryArtifacts r;
  r.dt = A.grid.dt;
  if (A.empty()) return r;
  const std::size_t limit = opt.window.value_or(std::numeric_limits<std::size_t>::max());

  // sigma'(A_k) as a hitting index, extending B' on demand.
  std::size_t j = 0;
  for (std::size_t k = 0; k < A.size(); ++k) {
    const double level = A.values[k];
    bool found = false;
    while (true) {
      if (k + j > limit) break;
      if (!bp.try_ensure(j)) {
        if (opt.window) break;
        throw HorizonError("insufficient B' horizon: sigma'(" + std::to_string(level) +
                           ") beyond cap of " + std::to_string(bp.cap()) + " steps");
      }
      if (bp.at(j) >= level) {
        found = true;
        break;
      }
      ++j;
    }
    if (!found) {
      r.truncated = true;
      break;
    }
    r.T.push_back(k + j);
    r.sigma_prime.levels.push_back(level);
    r.sigma_prime.times.push_back(static_cast<double>(j) * r.dt);
    const bool jumped = k == 0 ? level > 0.0 : level > A.values[k - 1];
    if (jumped) r.D_A.push_back(static_cast<double>(k) * r.dt);
  }

  std::size_t L = r.T.empty() ? 0 : r.T.back();
  if (opt.window) {
    r.truncated = r.truncated || L > *opt.window;
    L = *opt.window;
  }
  r.tau.assign(L + 1, 0);
  r.tau_prime.assign(L + 1, 0);
  std::size_t next_b = 0;  // index into T of the next B-cell
  const std::size_t n_clock_cells = A.size() - 1;
  for (std::size_t cell = 0; cell < L; ++cell) {
    const bool is_b = next_b < n_clock_cells && next_b < r.T.size() && r.T[next_b] == cell;
    if (is_b) ++next_b;
    r.tau[cell + 1] = r.tau[cell] + (is_b ? 1 : 0);
    r.tau_prime[cell + 1] = r.tau_prime[cell] + (is_b ? 0 : 1);
  }
  if (!bp.try_ensure(r.tau_prime[L])) {
    throw HorizonError("insufficient B' horizon for extended window");
  }
  r.W.grid = TimeGrid{0.0, r.dt, L};
  r.W.values.resize(L + 1);
  for (std::size_t e = 0; e <= L; ++e) {
    r.W.values[e] = B.values[r.tau[e]] + bp.at(r.tau_prime[e]);
  }
  if (!opt.b_area.empty() && opt.b_area.size() + 1 < B.size()) {
    throw PreconditionError("build_recovery: one B area per clock cell required");
  }
  // Each extended cell inherits the area of the source cell it copies.
  r.Y.grid = r.W.grid;
  r.Y.values.assign(L + 1, 0.0);
  for (std::size_t cell = 0; cell < L; ++cell) {
    const bool is_b = r.tau[cell + 1] > r.tau[cell];
    double area = 0.0;
    if (is_b) {
      const std::size_t k = r.tau[cell];
      area = opt.b_area.empty() ? 0.5 * r.dt * (B.values[k + 1] - B.values[k]) : opt.b_area[k];
    } else {
      area = bp.area(r.tau_prime[cell]);
    }
    r.Y.values[cell + 1] = r.Y.values[cell] + (r.dt * r.W.values[cell] + area);
  }

  // Jumps of A open the intervals of O.
  const auto& sp = r.sigma_prime.times;
  for (std::size_t k = 0; k < r.T.size(); ++k) {
    const double prev = k == 0 ? 0.0 : sp[k - 1];
    if (sp[k] > prev) {
      const double t = static_cast<double>(k) * r.dt;
      r.O.push_back({t + prev, t + sp[k], k});
    }
  }
  return r;
}

}  // namespace detail

inline RecoveryArtifacts build_recovery(const SamplePath& X, const SamplePath& V,
                                        const SamplePath& A, const SamplePath& B,
                                        LazyBrownian& bp, const RecoveryOptions& opt = {}) {
  require_aligned(X, A, "build_recovery");
  require_aligned(V, A, "build_recovery");
  return detail::recover(A, B, bp, opt);
}

inline RecoveryArtifacts build_recovery(const SamplePath& X, const SamplePath& V,
                                        const SamplePath& A, const SamplePath& B,
                                        const SamplePath& Bp, const RecoveryOptions& opt = {}) {
  LazyBrownian fixed(Bp);
  return build_recovery(X, V, A, B, fixed, opt);
}

// Round trip from a construction bundle, reusing its own B' and cell areas.
inline RecoveryArtifacts build_recovery(const PathBundle& b, RecoveryOptions opt = {}) {
  LazyBrownian fixed(b.Bp, b.Bp_area);
  opt.b_area = b.B_area;
  return build_recovery(b.X, b.V, b.A, b.B, fixed, opt);
}

// Intervals of O derived from A and sigma' alone.
inline std::vector<OpenInterval> open_set_O(const SamplePath& A, const FirstPassage& sigma_prime) {
  detail::require_nondecreasing(A);
  std::vector<OpenInterval> out;
  const double dt = A.grid.dt;
  const std::size_t m = std::min(A.size(), sigma_prime.times.size());
  for (std::size_t k = 0; k < m; ++k) {
    const double prev = k == 0 ? 0.0 : sigma_prime.times[k - 1];
    const bool jumped = k == 0 ? A.values[0] > 0.0 : A.values[k] > A.values[k - 1];
    if (jumped && sigma_prime.times[k] > prev) {
      const double t = static_cast<double>(k) * dt;
      out.push_back({t + prev, t + sigma_prime.times[k], k});
    }
  }
  return out;
}

// Lebesgue measure of O within [0, s].
inline double open_set_length(const std::vector<OpenInterval>& O, double s) {
  double acc = 0.0;
  for (const auto& iv : O) {
    if (iv.left >= s) break;
    acc += std::min(iv.right, s) - iv.left;
  }
  return acc;
}

struct EpsilonSplice {
  double epsilon = 0.0;
  SamplePath A_eps;
  std::vector<double> jump_times;  // J^(eps)_n
  std::vector<double> jump_levels; // A_eps at J^(eps)_n
  RecoveryArtifacts artifacts;     // tau_eps, W_eps live here
  const SamplePath& W_eps() const { return artifacts.W; }
};

// Keeps the contact episodes of A (maximal runs of clock steps on which A
// increases) whose first increment exceeds epsilon, i.e. impacts arriving
// faster than epsilon, together with everything A absorbs in that episode.
inline SamplePath filter_jumps(const SamplePath& A, double epsilon,
                               std::vector<double>* jump_times = nullptr) {
  SamplePath out{A.grid, std::vector<double>(A.size(), 0.0)};
  if (A.empty()) return out;
  double acc = 0.0;
  bool keep = false;
  bool in_episode = false;
  for (std::size_t k = 0; k < A.size(); ++k) {
    const double inc = k == 0 ? A.values[0] : A.values[k] - A.values[k - 1];
    if (inc > 0.0) {
      if (!in_episode) {
        keep = inc > epsilon;
        in_episode = true;
        if (keep && jump_times) jump_times->push_back(static_cast<double>(k) * A.grid.dt);
      }
      if (keep) acc += inc;
    } else {
      in_episode = false;
    }
    out.values[k] = acc;
  }
  return out;
}

inline EpsilonSplice epsilon_splice(const SamplePath& X, const SamplePath& V, const SamplePath& A,
                                    const SamplePath& B, LazyBrownian& bp, double epsilon,
                                    const RecoveryOptions& opt = {}) {
  if (!(epsilon > 0.0)) throw PreconditionError("epsilon_splice: epsilon must be > 0");
  require_aligned(X, A, "epsilon_splice");
  require_aligned(V, A, "epsilon_splice");
  EpsilonSplice s;
  s.epsilon = epsilon;
  s.A_eps = filter_jumps(A, epsilon, &s.jump_times);
  for (double t : s.jump_times) {
    s.jump_levels.push_back(s.A_eps.values[static_cast<std::size_t>(std::llround(t / A.grid.dt))]);
  }
  s.artifacts = detail::recover(s.A_eps, B, bp, opt);
  return s;
}

inline EpsilonSplice epsilon_splice(const SamplePath& X, const SamplePath& V, const SamplePath& A,
                                    const SamplePath& B, const SamplePath& Bp, double epsilon,
                                    const RecoveryOptions& opt = {}) {
  LazyBrownian fixed(Bp);
  return epsilon_splice(X, V, A, B, fixed, epsilon, opt);
}

// sup over [0, upto] (extended indices) of |W_a - W_b|.
inline double sup_distance(const SamplePath& a, const SamplePath& b, std::size_t upto) {
  const std::size_t m = std::min({a.size(), b.size(), upto + 1});
  double worst = 0.0;
  for (std::size_t i = 0; i < m; ++i) worst = std::max(worst, std::abs(a.values[i] - b.values[i]));
  return worst;
}

struct Prop3Report {
  double residual_ii = 0.0;   // sup_k |X_k - (Y - I)(T_k)|
  double residual_iii = 0.0;  // sup_k |T_k - T_rec(k)| in time units
  std::size_t points_checked = 0;
};

// Rebuilds Y = int W, I and the level-set time change from the
// recovered W and compares them with X and T.
inline Prop3Report verify_prop3(const RecoveryArtifacts& r, const SamplePath& X) {
  Prop3Report rep;
  if (r.W.empty()) return rep;
  const SamplePath& Y = r.Y;
  const SamplePath I = running_infimum(Y);
  const std::size_t L = r.W.size() - 1;
  const auto dec = decompose_infimum_set(r.W, Y, I);
  const auto mask = excursion_mask(dec, L);
  std::vector<std::size_t> T_rec;
  for (std::size_t c = 0; c < L; ++c) {
    if (mask[c]) T_rec.push_back(c);
  }
  for (std::size_t k = 0; k < r.T.size() && k < X.size(); ++k) {
    if (r.T[k] > L) break;
    rep.residual_ii =
        std::max(rep.residual_ii, std::abs(X.values[k] - (Y.values[r.T[k]] - I.values[r.T[k]])));
    if (r.T[k] < L && k < T_rec.size()) {
      const double diff = std::abs(static_cast<double>(r.T[k]) - static_cast<double>(T_rec[k]));
      rep.residual_iii = std::max(rep.residual_iii, diff * r.dt);
    }
    ++rep.points_checked;
  }
  return rep;
}

struct Lemma4Report {
  double stieltjes_residual = 0.0;  // sup_s |len(O n [0,s]) - tau'(s)|
  double max_W_in_O = -std::numeric_limits<double>::infinity();
  double max_X_at_tau_in_O = 0.0;
  std::size_t interior_points = 0;
  std::size_t intervals = 0;
};

inline Lemma4Report verify_lemma4(const RecoveryArtifacts& r, const SamplePath& X) {
  Lemma4Report rep;
  rep.intervals = r.O.size();
  const std::size_t L = r.W.empty() ? 0 : r.W.size() - 1;
  for (std::size_t s = 0; s <= L; ++s) {
    const double t = static_cast<double>(s) * r.dt;
    rep.stieltjes_residual = std::max(
        rep.stieltjes_residual, std::abs(open_set_length(r.O, t) - r.tau_prime[s] * r.dt));
  }
  const double eps = 1e-9 * r.dt;
  for (const auto& iv : r.O) {
    const auto lo = static_cast<std::size_t>(std::floor(iv.left / r.dt + 0.5)) + 1;
    for (std::size_t s = lo; s <= L && static_cast<double>(s) * r.dt < iv.right - eps; ++s) {
      rep.max_W_in_O = std::max(rep.max_W_in_O, r.W.values[s]);
      const std::size_t k = r.tau[s];
      if (k < X.size()) rep.max_X_at_tau_in_O = std::max(rep.max_X_at_tau_in_O, X.values[k]);
      ++rep.interior_points;
    }
  }
  return rep;
}

}  // namespace langevin
