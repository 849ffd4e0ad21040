#pragma once

// Reflected Langevin process built from one Brownian path: reflection of
// Y = int W at its running infimum, removal of the time Y spends at the
// infimum, and the decomposition of the velocity into A + B together with the
// dual Brownian motion B' made of the increments of W on the infimum set.
//
// Discrete conventions (dt is the step of the original grid):
//  * cell i is [t_i, t_{i+1}];
//  * an infimum interval starts at the left endpoint u of a cell whose right
//    endpoint sets a new running minimum of Y while W[u] <= 0, and ends at the
//    first later grid index d with W[d] >= 0. Cells in [u, d) are infimum
//    cells, every other cell is an excursion cell;
//  * clock point k < m sits at the left endpoint of the k-th excursion cell,
//    clock point m at the right endpoint of the last one (m = number of
//    excursion cells). No excursion cells means an empty clock grid.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "langevin/error.hpp"
#include "langevin/gauss_paths.hpp"

namespace langevin {

struct Interval {
  std::size_t u = 0;  // first cell of the run
  std::size_t d = 0;  // first grid index after the run (W[d] >= 0 unless open)
};

struct InfimumDecomposition {
  std::vector<Interval> intervals;
  bool open_at_horizon = false;  // last run did not see W return to 0

  std::size_t infimum_cells() const {
    std::size_t c = 0;
    for (const auto& iv : intervals) c += iv.d - iv.u;
    return c;
  }
};

struct TimeChange {
  double dt = 0.0;
  std::vector<std::size_t> T;          // clock point -> original grid index
  std::vector<std::size_t> tau;        // original grid index -> clock count
  std::vector<std::size_t> tau_prime;  // original grid index -> dual clock count

  double T_time(std::size_t k) const { return static_cast<double>(T[k]) * dt; }
  double tau_time(std::size_t j) const { return static_cast<double>(tau[j]) * dt; }
  double tau_prime_time(std::size_t j) const { return static_cast<double>(tau_prime[j]) * dt; }
};

struct PathBundle {
  SamplePath W, Y, I;            // original grid
  SamplePath X, V, A, B;         // clock grid (V is the right-derivative of X)
  SamplePath Bp;                 // dual clock grid
  // Per-cell areas (integral of W - W_left) of the cells B and B' consist of.
  std::vector<double> B_area, Bp_area;
  TimeChange tc;
  TimeGrid clock_grid;
  InfimumDecomposition decomposition;
  std::vector<std::uint8_t> excursion_cell;  // 1 for excursion cells
};

// First-passage levels and times of B'.
struct FirstPassage {
  std::vector<double> levels;
  std::vector<double> times;
};

inline void require_aligned(const SamplePath& a, const SamplePath& b, const char* what) {
  if (a.size() != b.size()) throw PreconditionError(std::string(what) + ": paths not aligned");
}

inline SamplePath running_infimum(const SamplePath& Y) {
  SamplePath I{Y.grid, Y.values};
  for (std::size_t k = 1; k < I.size(); ++k) I.values[k] = std::min(I.values[k - 1], Y.values[k]);
  return I;
}

inline InfimumDecomposition decompose_infimum_set(const SamplePath& W, const SamplePath& Y,
                                                  const SamplePath& I) {
  require_aligned(W, Y, "decompose_infimum_set");
  require_aligned(W, I, "decompose_infimum_set");
  InfimumDecomposition out;
  const std::size_t n = W.empty() ? 0 : W.size() - 1;
  std::size_t i = 0;
  while (i < n) {
    // Exact comparison: I is the prefix minimum of Y itself.
    const bool new_min = Y.values[i + 1] == I.values[i + 1];
    if (new_min && W.values[i] <= 0.0) {
      std::size_t d = i + 1;
      while (d < n && W.values[d] < 0.0) ++d;
      out.intervals.push_back({i, d});
      if (d == n && W.values[d] < 0.0) out.open_at_horizon = true;
      i = d;
    } else {
      ++i;
    }
  }
  return out;
}

inline std::vector<std::uint8_t> excursion_mask(const InfimumDecomposition& dec, std::size_t n) {
  std::vector<std::uint8_t> mask(n, 1);
  for (const auto& iv : dec.intervals) {
    for (std::size_t c = iv.u; c < iv.d; ++c) mask[c] = 0;
  }
  return mask;
}

// Time substitution from an excursion-cell indicator: T maps clock point k
// to the k-th excursion cell, tau counts excursion cells to the left.
inline TimeChange build_time_change(std::span<const std::uint8_t> excursion, double dt) {
  TimeChange tc;
  tc.dt = dt;
  const std::size_t n = excursion.size();
  tc.tau.assign(n + 1, 0);
  tc.tau_prime.assign(n + 1, 0);
  std::size_t last_exc = 0;
  bool any = false;
  for (std::size_t i = 0; i < n; ++i) {
    tc.tau[i + 1] = tc.tau[i] + (excursion[i] ? 1 : 0);
    tc.tau_prime[i + 1] = tc.tau_prime[i] + (excursion[i] ? 0 : 1);
    if (excursion[i]) {
      tc.T.push_back(i);
      last_exc = i;
      any = true;
    }
  }
  if (any) tc.T.push_back(last_exc + 1);
  return tc;
}

// Level-set form: cell i counts as excursion when Y > I at its right end.
inline TimeChange build_time_change(const SamplePath& Y, const SamplePath& I) {
  require_aligned(Y, I, "build_time_change");
  const std::size_t n = Y.empty() ? 0 : Y.size() - 1;
  std::vector<std::uint8_t> mask(n);
  for (std::size_t i = 0; i < n; ++i) mask[i] = Y.values[i + 1] > I.values[i + 1] ? 1 : 0;
  return build_time_change(mask, Y.grid.dt);
}

// Trapezoidal running integral; exact for piecewise-linear W.
inline SamplePath integrate_trapezoid(const SamplePath& W) {
  SamplePath Y{W.grid, std::vector<double>(W.size(), 0.0)};
  const double h = W.grid.dt;
  for (std::size_t k = 1; k < W.size(); ++k) {
    Y.values[k] = Y.values[k - 1] + 0.5 * h * (W.values[k - 1] + W.values[k]);
  }
  return Y;
}

inline PathBundle reflect_construct(const SamplePath& W, const SamplePath& Y) {
  require_aligned(W, Y, "reflect_construct");
  if (W.empty() || W.values[0] != 0.0) {
    throw PreconditionError("reflect_construct: W must start at 0");
  }
  PathBundle b;
  b.W = W;
  b.Y = Y;
  b.I = running_infimum(Y);
  const std::size_t n = W.size() - 1;
  const double dt = W.grid.dt;
  b.decomposition = decompose_infimum_set(b.W, b.Y, b.I);
  b.excursion_cell = excursion_mask(b.decomposition, n);
  b.tc = build_time_change(b.excursion_cell, dt);

  const std::size_t points = b.tc.T.size();
  b.clock_grid = TimeGrid{0.0, dt, points == 0 ? 0 : points - 1};
  for (SamplePath* p : {&b.X, &b.V, &b.A, &b.B}) {
    p->grid = b.clock_grid;
    p->values.reserve(points);
  }
  b.Bp.grid = TimeGrid{0.0, dt, b.decomposition.infimum_cells()};
  b.Bp.values.reserve(b.Bp.grid.n + 1);
  b.Bp.values.push_back(0.0);

  // A and B' accumulate the infimum-cell increments in the same order, so
  // A at a clock point is bit-identical to B' at the matching dual index.
  double a_acc = 0.0, b_acc = 0.0;
  auto record = [&](std::size_t j) {
    b.X.values.push_back(b.Y.values[j] - b.I.values[j]);
    b.V.values.push_back(b.W.values[j]);
    b.A.values.push_back(a_acc);
    b.B.values.push_back(b_acc);
  };
  for (std::size_t i = 0; i < n; ++i) {
    const double dw = W.values[i + 1] - W.values[i];
    const double area = (Y.values[i + 1] - Y.values[i]) - dt * W.values[i];
    if (b.excursion_cell[i]) {
      record(i);
      b_acc += dw;
      b.B_area.push_back(area);
    } else {
      a_acc += dw;
      b.Bp.values.push_back(a_acc);
      b.Bp_area.push_back(area);
    }
  }
  if (points > 0) {
    // Final clock point: right end of the last excursion cell. Infimum cells
    // after it are not yet part of A there.
    const std::size_t j = b.tc.T.back();
    double a_final = 0.0;
    for (std::size_t i = 0; i < j; ++i) {
      if (!b.excursion_cell[i]) a_final += W.values[i + 1] - W.values[i];
    }
    double b_final = 0.0;
    for (std::size_t i = 0; i < j; ++i) {
      if (b.excursion_cell[i]) b_final += W.values[i + 1] - W.values[i];
    }
    b.X.values.push_back(b.Y.values[j] - b.I.values[j]);
    b.V.values.push_back(b.W.values[j]);
    b.A.values.push_back(a_final);
    b.B.values.push_back(b_final);
  }
  return b;
}

// Convenience form for deterministic inputs: Y is the trapezoidal integral.
inline PathBundle reflect_construct(const SamplePath& W) {
  return reflect_construct(W, integrate_trapezoid(W));
}

// First grid index at which `path` reaches `level` (>=), searching from
// `start`; nullopt when the level is never reached.
inline std::optional<std::size_t> hitting_index(std::span<const double> path, double level,
                                                std::size_t start = 0) {
  for (std::size_t j = start; j < path.size(); ++j) {
    if (path[j] >= level) return j;
  }
  return std::nullopt;
}

// First grid index at which `path` strictly exceeds `level`.
inline std::optional<std::size_t> passage_index(std::span<const double> path, double level,
                                                std::size_t start = 0) {
  for (std::size_t j = start; j < path.size(); ++j) {
    if (path[j] > level) return j;
  }
  return std::nullopt;
}

// sigma'(A_k) along the clock grid. The levels A_k are values that B' attains
// as a running maximum, where the continuum sigma' has no jump, so the first
// hitting index is used (the strict passage index would add the first-passage
// delay of a discrete random walk started at its maximum).
inline FirstPassage sigma_prime_at_levels(const SamplePath& Bp, const SamplePath& A) {
  FirstPassage fp;
  fp.levels = A.values;
  fp.times.reserve(A.size());
  std::size_t j = 0;
  for (double level : A.values) {
    const auto hit = hitting_index(Bp.values, level, j);
    if (!hit) throw HorizonError("insufficient B' horizon: level " + std::to_string(level));
    j = *hit;
    fp.times.push_back(static_cast<double>(j) * Bp.grid.dt);
  }
  return fp;
}

// A recomputed from the boundary hits: each infimum run contributes minus the
// velocity W(u) with which X arrives at 0.
inline SamplePath jump_representation_A(const PathBundle& b) {
  SamplePath out{b.clock_grid, std::vector<double>(b.tc.T.size(), 0.0)};
  const auto& runs = b.decomposition.intervals;
  std::size_t r = 0;
  double acc = 0.0;
  for (std::size_t k = 0; k < b.tc.T.size(); ++k) {
    while (r < runs.size() && runs[r].u < b.tc.T[k]) {
      acc -= b.W.values[runs[r].u];
      ++r;
    }
    out.values[k] = acc;
  }
  return out;
}

// Sum of -W(u) over a decomposition, cut at original index `upto`.
inline double jump_sum(const SamplePath& W, const InfimumDecomposition& dec, std::size_t upto) {
  double acc = 0.0;
  for (const auto& iv : dec.intervals) {
    if (iv.u < upto) acc -= W.values[iv.u];
  }
  return acc;
}

// max_k |T_k - t_k - sigma'(A_k)| on the clock grid.
inline double verify_lemma1(const PathBundle& b) {
  if (b.tc.T.empty()) return 0.0;
  const auto fp = sigma_prime_at_levels(b.Bp, b.A);
  double worst = 0.0;
  for (std::size_t k = 0; k < b.tc.T.size(); ++k) {
    const double lhs = b.tc.T_time(k);
    const double rhs = static_cast<double>(k) * b.tc.dt + fp.times[k];
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return worst;
}

// max_j |W_j - (B(tau_j) + B'(tau'_j))| on the original grid.
inline double verify_prop2(const PathBundle& b) {
  double worst = 0.0;
  for (std::size_t j = 0; j < b.W.size(); ++j) {
    const std::size_t c = b.tc.tau[j];
    const double bv = b.B.empty() ? 0.0 : b.B.values[c];
    const double rec = bv + b.Bp.values[b.tc.tau_prime[j]];
    worst = std::max(worst, std::abs(rec - b.W.values[j]));
  }
  return worst;
}

// Reflected state at requested clock indices, generated step by step without
// storing the original path. Uses the same discrete rules and the same normal
// draws as sample_langevin_pair + reflect_construct.
struct ReflectedState {
  double X = 0.0, V = 0.0, A = 0.0, B = 0.0;
  std::size_t original_index = 0;
};

class StreamingConstruction {
 public:
  // With `fast_runs`, deep inside an infimum run (W far below 0) the walk
  // leaps M steps at once with the exact law of (W, int W) over M * dt, where
  // M is chosen so that W reaches 0 within the leap with probability at most
  // 2 Phi(-8) ~ 1.2e-15. Such a leap changes neither the clock nor the
  // run/excursion split except on that event; Y keeps decreasing, so I = Y
  // after it. The draws differ from reflect_construct once a leap occurs.
  StreamingConstruction(double dt, const RngStream& stream, std::size_t cap_steps,
                        bool fast_runs = false)
      : stepper_(dt), normals_(stream), cap_(cap_steps), fast_runs_(fast_runs) {}

  // States at clock indices `ks` (sorted ascending). Throws HorizonError when
  // the original path would need more than the cap.
  std::vector<ReflectedState> states_at(std::span<const std::size_t> ks) {
    std::vector<ReflectedState> out;
    out.reserve(ks.size());
    for (std::size_t target : ks) {
      while (true) {
        if (!pending_) classify_next();
        if (excursion_ && clock_ == target) {
          out.push_back({y_ - inf_, w_, a_, b_, index_});
          break;
        }
        consume();
      }
    }
    return out;
  }

  std::size_t steps_used() const { return index_; }

 private:
  // Generates the step out of the current cell and classifies it.
  void classify_next() {
    if (index_ >= cap_) throw HorizonError("construction: original horizon cap reached");
    w_next_ = w_;
    y_next_ = y_;
    cell_steps_ = 1;
    if (fast_runs_ && in_run_ && w_ < 0.0) {
      const double ratio = -w_ / 8.0;
      const double m = std::min(ratio * ratio / stepper_.h, static_cast<double>(cap_ - index_));
      if (m >= 64.0) {
        cell_steps_ = static_cast<std::size_t>(m);
        LangevinStepper(stepper_.h * static_cast<double>(cell_steps_))
            .step(normals_, w_next_, y_next_);
      }
    }
    if (cell_steps_ == 1) stepper_.step(normals_, w_next_, y_next_);
    if (in_run_) {
      excursion_ = false;
    } else {
      const bool new_min = y_next_ <= inf_;
      excursion_ = !(new_min && w_ <= 0.0);
      if (!excursion_) in_run_ = true;
    }
    if (in_run_ && w_next_ >= 0.0) end_run_after_ = true;
    pending_ = true;
  }

  void consume() {
    const double dw = w_next_ - w_;
    if (excursion_) {
      b_ += dw;
      ++clock_;
    } else {
      a_ += dw;
    }
    w_ = w_next_;
    y_ = y_next_;
    inf_ = std::min(inf_, y_);
    index_ += cell_steps_;
    if (end_run_after_) {
      in_run_ = false;
      end_run_after_ = false;
    }
    pending_ = false;
  }

  LangevinStepper stepper_;
  NormalSource normals_;
  std::size_t cap_;
  bool fast_runs_;
  std::size_t cell_steps_ = 1;
  double w_ = 0.0, y_ = 0.0, inf_ = 0.0, a_ = 0.0, b_ = 0.0;
  double w_next_ = 0.0, y_next_ = 0.0;
  std::size_t index_ = 0, clock_ = 0;
  bool in_run_ = false, end_run_after_ = false, excursion_ = true, pending_ = false;
};

}  // namespace langevin
