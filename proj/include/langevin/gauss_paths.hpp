#pragma once

// Exact Gaussian sampling of Brownian motion W and its time integral Y on
// uniform grids, plus Brownian-bridge refinement of single cells.

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "langevin/error.hpp"
#include "langevin/rng.hpp"

namespace langevin {

struct TimeGrid {
  double t0 = 0.0;
  double dt = 1e-3;
  std::size_t n = 0;  // number of steps; n + 1 grid points

  double time(std::size_t i) const { return t0 + static_cast<double>(i) * dt; }
  double horizon() const { return static_cast<double>(n) * dt; }

  void validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) {
      throw ConfigError("time grid: dt must be positive and finite, got " + std::to_string(dt));
    }
    if (!std::isfinite(t0)) throw ConfigError("time grid: t0 must be finite");
  }

  static TimeGrid over(double t_max, double dt, double t0 = 0.0) {
    if (!(dt > 0.0)) throw ConfigError("time grid: dt must be positive");
    const auto steps = static_cast<std::size_t>(std::llround((t_max - t0) / dt));
    return TimeGrid{t0, dt, steps};
  }
};

// Values aligned with a uniform grid. An empty `values` vector denotes an
// empty horizon (used for clock grids that receive no excursion time).
struct SamplePath {
  TimeGrid grid;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  bool empty() const { return values.empty(); }
  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }
  double back() const { return values.back(); }
};

// A path on an irregular time set, produced by refining single cells.
struct RefinedPath {
  std::vector<double> times;
  std::vector<double> values;
};

inline SamplePath sample_brownian(const TimeGrid& grid, const RngStream& stream) {
  grid.validate();
  NormalSource normals(stream);
  SamplePath w{grid, std::vector<double>(grid.n + 1, 0.0)};
  const double sd = std::sqrt(grid.dt);
  for (std::size_t i = 0; i < grid.n; ++i) w.values[i + 1] = w.values[i] + sd * normals.next();
  return w;
}

// One exact step of (W, Y = int W). Given step h, the pair
// (dW, dY - h W_prev) is centred Gaussian with covariance
// [[h, h^2/2], [h^2/2, h^3/3]].
struct LangevinStepper {
  explicit LangevinStepper(double h)
      : h(h), sd_w(std::sqrt(h)), half_h32(0.5 * h * std::sqrt(h)),
        ortho(h * std::sqrt(h) / (2.0 * std::sqrt(3.0))) {}

  // Draws one cell: returns the increment dW and stores in `area` the
  // integral of W - W_left over the cell. Consumes two normals.
  double increment(NormalSource& normals, double& area) const {
    const double z1 = normals.next();
    const double z2 = normals.next();
    area = half_h32 * z1 + ortho * z2;
    return sd_w * z1;
  }

  // Advances (w, y) in place.
  void step(NormalSource& normals, double& w, double& y) const {
    double area = 0.0;
    const double dw = increment(normals, area);
    y += h * w + area;
    w += dw;
  }

  double h, sd_w, half_h32, ortho;
};

struct LangevinPair {
  SamplePath W;
  SamplePath Y;
};

inline LangevinPair sample_langevin_pair(const TimeGrid& grid, const RngStream& stream) {
  grid.validate();
  NormalSource normals(stream);
  LangevinStepper stepper(grid.dt);
  LangevinPair out{{grid, std::vector<double>(grid.n + 1, 0.0)},
                   {grid, std::vector<double>(grid.n + 1, 0.0)}};
  double w = 0.0, y = 0.0;
  for (std::size_t i = 0; i < grid.n; ++i) {
    stepper.step(normals, w, y);
    out.W.values[i + 1] = w;
    out.Y.values[i + 1] = y;
  }
  return out;
}

// Draws B(s) for a Brownian bridge from (0, a) to (h, b), 0 < s < h.
inline double bridge_sample(double a, double b, double h, double s, double z) {
  const double mean = a + (b - a) * (s / h);
  const double var = s * (h - s) / h;
  return mean + std::sqrt(std::max(var, 0.0)) * z;
}

inline RefinedPath to_refined(const SamplePath& path) {
  RefinedPath out;
  out.times.reserve(path.size());
  for (std::size_t i = 0; i < path.size(); ++i) out.times.push_back(path.grid.time(i));
  out.values = path.values;
  return out;
}

// Subdivides cell [t_c, t_{c+1}] into `factor` equal subcells whose interior
// values follow the Brownian bridge between the unchanged endpoints.
inline RefinedPath bridge_refine(const SamplePath& path, std::size_t cell_index,
                                 std::size_t factor, const RngStream& stream) {
  if (cell_index >= path.grid.n) {
    throw PreconditionError("bridge_refine: cell index " + std::to_string(cell_index) +
                            " outside [0, " + std::to_string(path.grid.n) + ")");
  }
  if (factor < 1) throw PreconditionError("bridge_refine: factor must be >= 1");
  NormalSource normals(stream);
  RefinedPath out;
  const std::size_t total = path.size() + factor - 1;
  out.times.reserve(total);
  out.values.reserve(total);
  for (std::size_t i = 0; i <= cell_index; ++i) {
    out.times.push_back(path.grid.time(i));
    out.values.push_back(path.values[i]);
  }
  const double t_left = path.grid.time(cell_index);
  const double t_right = path.grid.time(cell_index + 1);
  const double x_right = path.values[cell_index + 1];
  const double sub = path.grid.dt / static_cast<double>(factor);
  double t_prev = t_left;
  double x_prev = path.values[cell_index];
  for (std::size_t j = 1; j < factor; ++j) {
    const double t = t_left + static_cast<double>(j) * sub;
    const double x = bridge_sample(x_prev, x_right, t_right - t_prev, t - t_prev, normals.next());
    out.times.push_back(t);
    out.values.push_back(x);
    t_prev = t;
    x_prev = x;
  }
  for (std::size_t i = cell_index + 1; i < path.size(); ++i) {
    out.times.push_back(path.grid.time(i));
    out.values.push_back(path.values[i]);
  }
  return out;
}

// Restricts a refined path to the points of a uniform grid (nearest time
// within a quarter step). Points of `grid` must be present in `refined`.
inline SamplePath coarsen(const RefinedPath& refined, const TimeGrid& grid) {
  SamplePath out{grid, std::vector<double>(grid.n + 1)};
  std::size_t j = 0;
  for (std::size_t i = 0; i <= grid.n; ++i) {
    const double t = grid.time(i);
    while (j < refined.times.size() && refined.times[j] < t - 0.25 * grid.dt) ++j;
    while (j + 1 < refined.times.size() &&
           std::abs(refined.times[j + 1] - t) < std::abs(refined.times[j] - t)) {
      ++j;
    }
    if (j == refined.times.size() || std::abs(refined.times[j] - t) > 0.25 * grid.dt) {
      throw PreconditionError("coarsen: grid time missing from refined path");
    }
    out.values[i] = refined.values[j];
  }
  return out;
}

// Probability that a Brownian bridge over a step of length h, between
// w_left and w_right, dips to or below `level`.
inline double bridge_crossing_prob(double w_left, double w_right, double h, double level) {
  if (!(h > 0.0)) throw PreconditionError("bridge_crossing_prob: h must be positive");
  if (level >= w_left || level >= w_right) return 1.0;
  return std::exp(-2.0 * (w_left - level) * (w_right - level) / h);
}

// Brownian path extended on demand in fixed blocks, up to a hard cap on the
// number of steps. Used for B', whose first-passage times are heavy tailed.
// Each cell also carries its area, the integral of W - W_left over the cell,
// drawn jointly with the increment, so integrals of spliced paths stay exact.
class LazyBrownian {
 public:
  LazyBrownian(double dt, const RngStream& stream, std::size_t cap_steps,
               std::size_t block = 1u << 14)
      : stepper_(dt), normals_(stream), cap_(cap_steps), block_(block), values_{0.0} {
    if (!(dt > 0.0)) throw ConfigError("LazyBrownian: dt must be positive");
  }

  // Wraps a fixed path; requests beyond its end raise HorizonError. Without
  // areas, each cell gets the trapezoid area dt * dW / 2.
  explicit LazyBrownian(const SamplePath& fixed, std::vector<double> areas = {})
      : stepper_(fixed.grid.dt > 0.0 ? fixed.grid.dt : 1.0), normals_(RngStream::zero()),
        cap_(fixed.empty() ? 0 : fixed.size() - 1), block_(0), values_(fixed.values),
        areas_(std::move(areas)), fixed_(true) {
    if (values_.empty()) values_.push_back(0.0);
    if (areas_.empty()) {
      for (std::size_t i = 0; i + 1 < values_.size(); ++i) {
        areas_.push_back(0.5 * stepper_.h * (values_[i + 1] - values_[i]));
      }
    }
    if (areas_.size() + 1 != values_.size()) {
      throw PreconditionError("LazyBrownian: one area per cell required");
    }
  }

  double dt() const { return stepper_.h; }
  std::size_t cap() const { return cap_; }
  std::size_t available_steps() const { return values_.size() - 1; }

  // Ensures index `i` exists; false if that would exceed the cap.
  bool try_ensure(std::size_t i) {
    if (i < values_.size()) return true;
    if (i > cap_ || fixed_) return false;
    const std::size_t target = std::min(cap_, std::max(i, values_.size() - 1 + block_));
    values_.reserve(target + 1);
    areas_.reserve(target);
    while (values_.size() <= target) {
      double area = 0.0;
      const double dw = stepper_.increment(normals_, area);
      values_.push_back(values_.back() + dw);
      areas_.push_back(area);
    }
    return true;
  }

  double at(std::size_t i) {
    if (!try_ensure(i)) {
      throw HorizonError("insufficient B' horizon: index " + std::to_string(i) +
                         " exceeds cap of " + std::to_string(cap_) + " steps");
    }
    return values_[i];
  }

  // Area of cell [i, i+1].
  double area(std::size_t i) {
    at(i + 1);
    return areas_[i];
  }

  SamplePath materialize() const {
    return SamplePath{TimeGrid{0.0, stepper_.h, values_.size() - 1}, values_};
  }
  const std::vector<double>& areas() const { return areas_; }

 private:
  LangevinStepper stepper_;
  NormalSource normals_;
  std::size_t cap_;
  std::size_t block_;
  std::vector<double> values_;
  std::vector<double> areas_;
  bool fixed_ = false;
};

}  // namespace langevin
