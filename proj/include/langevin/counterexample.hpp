#pragma once

// Deterministic force with two solutions of the inelastic impact problem.
//
// alpha and beta interpolate u^p linearly between the nodes s_n = 4^n and
// t_n = 2 * 4^n. phi lies strictly below min(alpha, beta) except for contact
// with alpha at the s_n and with beta at the t_n, where it also matches their
// right slopes, and phi(4u) = 4^p phi(u). Then X = alpha - phi and
// X = beta - phi both solve X'' = F = -phi'' between contacts, stop dead at
// contacts, and start again from rest.
//
// On [1, 4] phi is a sum of three tangent quadratics cut off by C^p smoothstep
// windows: f1 near u = 1, f2 around u = 2 and f4(u) = 4^p f1(u / 4) near 4, so
// the extension by self-similarity is C^infinity across 4.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "langevin/error.hpp"

namespace langevin {

class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(std::vector<double> coeffs) : c_(std::move(coeffs)) {}

  double operator()(double x) const {
    double acc = 0.0;
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * x + *it;
    return acc;
  }
  Polynomial derivative() const {
    if (c_.size() <= 1) return Polynomial{{0.0}};
    std::vector<double> d(c_.size() - 1);
    for (std::size_t i = 1; i < c_.size(); ++i) d[i - 1] = c_[i] * static_cast<double>(i);
    return Polynomial{std::move(d)};
  }
  std::size_t degree() const { return c_.empty() ? 0 : c_.size() - 1; }
  const std::vector<double>& coeffs() const { return c_; }

 private:
  std::vector<double> c_;
};

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// S_q(z) = z^{q+1} sum_j C(q+j, j) C(2q+1, q-j) (-z)^j: S(0) = 0, S(1) = 1,
// first q derivatives vanish at both ends.
inline Polynomial smoothstep(int q) {
  std::vector<double> c(2 * q + 2, 0.0);
  for (int j = 0; j <= q; ++j) {
    const double sign = (j % 2 == 0) ? 1.0 : -1.0;
    c[q + 1 + j] = sign * binomial(q + j, j) * binomial(2 * q + 1, q - j);
  }
  return Polynomial{std::move(c)};
}

struct CounterexampleSpec {
  int k = 1;
  int n_min = 0;
  int n_max = 1;
  int p() const { return k + 3; }

  void validate() const {
    if (k < 0 || k > 4) throw ConfigError("counterexample: k must be in [0, 4]");
    if (n_min < -5) throw ConfigError("counterexample: n_min must be >= -5");
    if (n_max <= n_min) throw ConfigError("counterexample: n_max must exceed n_min");
    if (n_max > 8) throw ConfigError("counterexample: n_max must be <= 8");
  }
  double lo() const { return std::ldexp(1.0, 2 * n_min); }
  double hi() const { return std::ldexp(1.0, 2 * n_max); }
  double s(int n) const { return std::ldexp(1.0, 2 * n); }
  double t(int n) const { return std::ldexp(1.0, 2 * n + 1); }
};

namespace detail {

inline double alpha_slope0(int p) { return (std::ldexp(1.0, 2 * p) - 1.0) / 3.0; }
inline double beta_slope0(int p) { return (std::ldexp(1.0, 3 * p) - std::ldexp(1.0, p)) / 6.0; }

inline void require_in_range(double u, const CounterexampleSpec& spec, const char* what) {
  if (!(u >= spec.lo() && u <= spec.hi())) {
    throw PreconditionError(std::string(what) + ": u = " + std::to_string(u) +
                            " outside node range [" + std::to_string(spec.lo()) + ", " +
                            std::to_string(spec.hi()) + "]");
  }
}

// Writes u = 4^m v with v in [1, 4).
inline int octave(double u, double& v) {
  int e = 0;
  std::frexp(u, &e);  // u = f 2^e, f in [0.5, 1)
  int m = (e - 1) >= 0 ? (e - 1) / 2 : -((-(e - 1) + 1) / 2);
  v = std::ldexp(u, -2 * m);
  if (v >= 4.0) {
    ++m;
    v = std::ldexp(v, -2);
  } else if (v < 1.0) {
    --m;
    v = std::ldexp(v, 2);
  }
  return m;
}

}  // namespace detail

// alpha(u): piecewise linear through (4^n, 4^{np}).
inline double alpha_eval(double u, const CounterexampleSpec& spec) {
  spec.validate();
  detail::require_in_range(u, spec, "alpha_eval");
  double v = 0.0;
  const int m = detail::octave(u, v);
  const int p = spec.p();
  return std::ldexp(1.0 + detail::alpha_slope0(p) * (v - 1.0), 2 * p * m);
}

// Right derivative of alpha (left derivative when `left`).
inline double alpha_slope(double u, const CounterexampleSpec& spec, bool left = false) {
  spec.validate();
  detail::require_in_range(u, spec, "alpha_slope");
  double v = 0.0;
  int m = detail::octave(u, v);
  if (left && v == 1.0) --m;
  const int p = spec.p();
  return std::ldexp(detail::alpha_slope0(p), 2 * (p - 1) * m);
}

// beta(u): piecewise linear through (2 * 4^n, (2 * 4^n)^p).
inline double beta_eval(double u, const CounterexampleSpec& spec) {
  spec.validate();
  detail::require_in_range(u, spec, "beta_eval");
  double v = 0.0;
  const int m = detail::octave(u / 2.0, v);  // u = 2 * 4^m v
  const int p = spec.p();
  const double w = 2.0 * v;                  // in [2, 8)
  return std::ldexp(std::ldexp(1.0, p) + detail::beta_slope0(p) * (w - 2.0), 2 * p * m);
}

inline double beta_slope(double u, const CounterexampleSpec& spec, bool left = false) {
  spec.validate();
  detail::require_in_range(u, spec, "beta_slope");
  double v = 0.0;
  int m = detail::octave(u / 2.0, v);
  if (left && v == 1.0) --m;
  const int p = spec.p();
  return std::ldexp(detail::beta_slope0(p), 2 * (p - 1) * m);
}

struct PhiPiece {
  double left = 0.0, right = 0.0;
  // phi = window(z) * base(u - center) with z = (u - z0) * zscale.
  Polynomial window;
  double z0 = 0.0, zscale = 1.0;
  Polynomial base;
  double center = 0.0;
};

struct PhiAudit {
  std::size_t points = 0;
  double min_gap = std::numeric_limits<double>::infinity();  // min (env - phi) off contacts
  double min_gap_at = 0.0;
  double gluing_residual = 0.0;  // max_l |phi^(l)(4-) - 4^{p-l} phi^(l)(1+)| / scale
  double contact_residual = 0.0;
  double slope_residual = 0.0;
  double max_abs_phi2 = 0.0;     // curvature bound on [1, 4]
  double max_force = 0.0, min_force = 0.0;
  int smoothness = 0;            // C^smoothness away from 0
};

class PhiFunction {
 public:
  PhiFunction() = default;
  PhiFunction(int p, std::vector<PhiPiece> pieces) : p_(p), pieces_(std::move(pieces)) {}

  int p() const { return p_; }
  const std::vector<PhiPiece>& pieces() const { return pieces_; }

  // l-th derivative at u > 0. At a piece boundary `left` selects the piece
  // on the left.
  double derivative(double u, int l, bool left = false) const {
    if (!(u > 0.0)) throw PreconditionError("phi: u must be > 0");
    double v = 0.0;
    int m = detail::octave(u, v);
    if (left && v == 1.0) {
      --m;
      v = 4.0;
    }
    return std::ldexp(base_derivative(v, l, left), 2 * (p_ - l) * m);
  }
  double operator()(double u) const { return derivative(u, 0); }

  // l-th derivative of the representation on [1, 4].
  double base_derivative(double v, int l, bool left = false) const {
    const PhiPiece* pc = nullptr;
    for (const auto& piece : pieces_) {
      if (left ? (v > piece.left && v <= piece.right) : (v >= piece.left && v < piece.right)) {
        pc = &piece;
        break;
      }
    }
    if (!pc) pc = left ? &pieces_.front() : &pieces_.back();
    // Leibniz rule on window * base.
    double acc = 0.0;
    Polynomial wd = pc->window;
    double zpow = 1.0;
    const double z = (v - pc->z0) * pc->zscale;
    const double x = v - pc->center;
    for (int j = 0; j <= l; ++j) {
      Polynomial bd = pc->base;
      for (int i = 0; i < l - j; ++i) bd = bd.derivative();
      acc += binomial(l, j) * wd(z) * zpow * bd(x);
      wd = wd.derivative();
      zpow *= pc->zscale;
    }
    return acc;
  }

 private:
  int p_ = 3;
  std::vector<PhiPiece> pieces_;
};

struct PhiBuild {
  PhiFunction phi;
  PhiAudit audit;
  // The representation is explicit; no linear system is solved.
  std::optional<double> condition_number;
};

inline PhiBuild build_phi(const CounterexampleSpec& spec, std::size_t audit_per_octave = 10000) {
  spec.validate();
  const int p = spec.p();
  const double P = std::ldexp(1.0, p);  // 2^p
  const double a1 = detail::alpha_slope0(p);
  const double b2 = detail::beta_slope0(p);
  const double bl = (P - std::ldexp(1.0, -p)) / 1.5;  // slope of beta on [1/2, 2]
  // Crossings of alpha with beta on (1, 2) and on (2, 4).
  const double u1 = (std::ldexp(1.0, -p) - 0.5 * bl - 1.0 + a1) / (a1 - bl);
  const double u2 = (P - 2.0 * b2 - 1.0 + a1) / (a1 - b2);
  const double d1 = (u1 - 1.0) / 2.0;
  const double d2 = (u2 - 2.0) / 2.0;
  if (!(1.0 + d1 < 2.0 - d2)) {
    throw ConstructionError("build_phi: windows at s_0 and t_0 overlap");
  }
  if (!(2.0 + d2 < 4.0 - 4.0 * d1)) {
    throw ConstructionError("build_phi: windows at t_0 and s_1 overlap");
  }

  const Polynomial S = smoothstep(p);
  std::vector<double> one_minus = S.coeffs();
  for (auto& c : one_minus) c = -c;
  one_minus[0] += 1.0;
  const Polynomial Sc{one_minus};
  const Polynomial one{{1.0}};
  const Polynomial zero{{0.0}};
  const Polynomial f1{{1.0, a1, -a1}};
  const Polynomial f2{{P, b2, -b2}};
  const Polynomial f4{{std::ldexp(1.0, 2 * p), std::ldexp(a1, 2 * (p - 1)),
                       -std::ldexp(a1, 2 * (p - 2))}};

  const double e1 = 1.0 + d1 / 2, e2 = 1.0 + d1;
  const double g1 = 2.0 - d2, g2 = 2.0 - d2 / 2, g3 = 2.0 + d2 / 2, g4 = 2.0 + d2;
  const double h1 = 4.0 - 4.0 * d1, h2 = 4.0 - 2.0 * d1;
  std::vector<PhiPiece> pieces = {
      {1.0, e1, one, 0.0, 1.0, f1, 1.0},
      {e1, e2, Sc, e1, 2.0 / d1, f1, 1.0},
      {e2, g1, zero, 0.0, 1.0, zero, 0.0},
      {g1, g2, S, g1, 2.0 / d2, f2, 2.0},
      {g2, g3, one, 0.0, 1.0, f2, 2.0},
      {g3, g4, Sc, g3, 2.0 / d2, f2, 2.0},
      {g4, h1, zero, 0.0, 1.0, zero, 0.0},
      {h1, h2, S, h1, 1.0 / (2.0 * d1), f4, 4.0},
      {h2, 4.0, one, 0.0, 1.0, f4, 4.0},
  };
  PhiBuild out;
  out.phi = PhiFunction(p, std::move(pieces));
  auto& au = out.audit;
  au.smoothness = p;
  const PhiFunction& phi = out.phi;

  // Contact values and slopes at the nodes in range.
  for (int n = spec.n_min; n <= spec.n_max; ++n) {
    const double s = spec.s(n);
    au.contact_residual = std::max(au.contact_residual,
                                   std::abs(phi(s) - alpha_eval(s, spec)) / std::ldexp(1.0, 2 * p * n));
    if (n < spec.n_max) {
      au.slope_residual =
          std::max(au.slope_residual, std::abs(phi.derivative(s, 1) - alpha_slope(s, spec)) /
                                          std::ldexp(1.0, 2 * (p - 1) * n));
      const double t = spec.t(n);
      au.contact_residual = std::max(
          au.contact_residual, std::abs(phi(t) - beta_eval(t, spec)) / std::ldexp(1.0, 2 * p * n));
      au.slope_residual =
          std::max(au.slope_residual, std::abs(phi.derivative(t, 1) - beta_slope(t, spec)) /
                                          std::ldexp(1.0, 2 * (p - 1) * n));
    }
  }
  for (int l = 0; l <= p; ++l) {
    const double lhs = phi.base_derivative(4.0, l, true);
    const double rhs = std::ldexp(phi.base_derivative(1.0, l), 2 * (p - l));
    const double scale = std::max(1.0, std::abs(rhs));
    au.gluing_residual = std::max(au.gluing_residual, std::abs(lhs - rhs) / scale);
  }
  if (au.contact_residual > 1e-12 || au.slope_residual > 1e-12) {
    throw ConstructionError("build_phi: contact conditions violated (residual " +
                            std::to_string(std::max(au.contact_residual, au.slope_residual)) + ")");
  }
  if (au.gluing_residual > 1e-9) {
    throw ConstructionError("build_phi: gluing at u = 4 violated (residual " +
                            std::to_string(au.gluing_residual) + ")");
  }

  // Dense audit of phi < min(alpha, beta) on [1, 4] (self-similarity carries
  // it to every octave), skipping the contact points themselves.
  const std::size_t N = 2 * audit_per_octave;
  CounterexampleSpec base_spec{spec.k, 0, 1};
  for (std::size_t i = 0; i <= N; ++i) {
    const double u = 1.0 + 3.0 * static_cast<double>(i) / static_cast<double>(N);
    const double f = phi(u);
    const double f2v = phi.derivative(u, 2);
    au.max_abs_phi2 = std::max(au.max_abs_phi2, std::abs(f2v));
    au.max_force = std::max(au.max_force, -f2v);
    au.min_force = std::min(au.min_force, -f2v);
    ++au.points;
    if (u == 1.0 || u == 2.0 || u == 4.0) continue;
    const double env = std::min(alpha_eval(u, base_spec), beta_eval(u, base_spec));
    const double gap = env - f;
    if (gap < au.min_gap) {
      au.min_gap = gap;
      au.min_gap_at = u;
    }
  }
  if (!(au.min_gap > 0.0)) {
    throw ConstructionError("build_phi: phi < min(alpha, beta) violated at u = " +
                            std::to_string(au.min_gap_at));
  }
  return out;
}

// F(u) = -phi''(u); F(0) = 0 by continuity.
inline double force(double u, const PhiFunction& phi) {
  if (u == 0.0) return 0.0;
  if (!(u > 0.0)) throw PreconditionError("force: u must be >= 0");
  return -phi.derivative(u, 2);
}

// A candidate trajectory with analytic derivatives. Nodes are the contact
// times at which X must be 0 and restart from rest.
struct Candidate {
  std::string name;
  std::function<double(double)> value;
  std::function<double(double)> vel_right;
  std::function<double(double)> vel_left;
  std::function<double(double)> accel;  // X'' between nodes
  std::vector<double> nodes;
  double lo = 1.0, hi = 4.0;
};

struct CandidatePair {
  Candidate alpha, beta;
};

inline CandidatePair candidate_solutions(const CounterexampleSpec& spec, const PhiFunction& phi) {
  spec.validate();
  CandidatePair c;
  const double lo = spec.lo(), hi = spec.hi();
  const auto accel = [phi](double u) { return -phi.derivative(u, 2); };
  c.alpha.name = "X_alpha";
  c.alpha.value = [spec, phi](double u) { return alpha_eval(u, spec) - phi(u); };
  c.alpha.vel_right = [spec, phi](double u) {
    return alpha_slope(u, spec) - phi.derivative(u, 1);
  };
  c.alpha.vel_left = [spec, phi](double u) {
    return alpha_slope(u, spec, true) - phi.derivative(u, 1, true);
  };
  c.alpha.accel = accel;
  c.beta.name = "X_beta";
  c.beta.value = [spec, phi](double u) { return beta_eval(u, spec) - phi(u); };
  c.beta.vel_right = [spec, phi](double u) { return beta_slope(u, spec) - phi.derivative(u, 1); };
  c.beta.vel_left = [spec, phi](double u) {
    return beta_slope(u, spec, true) - phi.derivative(u, 1, true);
  };
  c.beta.accel = accel;
  for (int n = spec.n_min; n <= spec.n_max; ++n) {
    c.alpha.nodes.push_back(spec.s(n));
    if (n < spec.n_max) c.beta.nodes.push_back(spec.t(n));
  }
  // The left end has no incoming velocity to check inside the range.
  c.alpha.lo = c.beta.lo = lo;
  c.alpha.hi = c.beta.hi = hi;
  return c;
}

struct InclusionReport {
  std::string name;
  double residual_a = 0.0;  // max(0, -min X)
  double residual_b = 0.0;  // max over nodes of |X|, |X'(+)|
  double residual_c = 0.0;  // max |X'' - F| away from nodes (analytic)
  double residual_c_fd = 0.0;  // same with second differences, informational
  double residual_d = 0.0;  // max over nodes of |jump + v_in|
  std::size_t grid_points = 0;
  bool pass = true;
  std::vector<std::string> failures;
};

inline InclusionReport verify_inclusion(const Candidate& X, const std::function<double(double)>& F,
                                        double tol, double h = 1e-4) {
  if (!(tol > 0.0) || !(h > 0.0)) throw PreconditionError("verify_inclusion: tol, h must be > 0");
  InclusionReport r;
  r.name = X.name;
  double where_a = X.lo, where_b = X.lo, where_c = X.lo, where_d = X.lo;
  const auto near_node = [&](double u) {
    for (double s : X.nodes) {
      if (std::abs(u - s) < 2.0 * h * std::max(1.0, s)) return true;
    }
    return false;
  };
  const auto steps = static_cast<std::size_t>(std::llround((X.hi - X.lo) / h));
  for (std::size_t i = 0; i <= steps; ++i) {
    const double u = X.lo + static_cast<double>(i) * (X.hi - X.lo) / static_cast<double>(steps);
    ++r.grid_points;
    const double x = X.value(u);
    if (-x > r.residual_a) {
      r.residual_a = -x;
      where_a = u;
    }
    if (near_node(u)) continue;
    const bool is_node = std::find(X.nodes.begin(), X.nodes.end(), u) != X.nodes.end();
    if (is_node) continue;
    const double res = std::abs(X.accel(u) - F(u));
    if (res > r.residual_c) {
      r.residual_c = res;
      where_c = u;
    }
    if (u - h >= X.lo && u + h <= X.hi) {
      const double fd = (X.value(u + h) - 2.0 * x + X.value(u - h)) / (h * h);
      r.residual_c_fd = std::max(r.residual_c_fd, std::abs(fd - F(u)));
    }
  }
  for (double s : X.nodes) {
    const double vr = X.vel_right(s);
    const double rb = std::max(std::abs(X.value(s)), std::abs(vr));
    if (rb > r.residual_b) {
      r.residual_b = rb;
      where_b = s;
    }
    if (s > X.lo) {
      const double vl = X.vel_left(s);
      const double rd = std::abs((vr - vl) + vl);
      if (rd > r.residual_d) {
        r.residual_d = rd;
        where_d = s;
      }
    }
  }
  const auto check = [&](const char* label, double res, double at) {
    if (res > tol) {
      r.pass = false;
      r.failures.push_back(std::string("check ") + label + " failed at u = " + std::to_string(at) +
                           " (residual " + std::to_string(res) + ")");
    }
  };
  check("(a) X >= 0", r.residual_a, where_a);
  check("(b) contact at rest", r.residual_b, where_b);
  check("(c) free flight", r.residual_c, where_c);
  check("(d) velocity jump", r.residual_d, where_d);
  return r;
}

inline InclusionReport verify_inclusion(const Candidate& X, const PhiFunction& phi, double tol,
                                        double h = 1e-4) {
  return verify_inclusion(
      X, [&phi](double u) { return force(u, phi); }, tol, h);
}

// |X_alpha(u) - X_beta(u)| = |alpha(u) - beta(u)|; phi cancels exactly.
inline double divergence_at(double u, const CounterexampleSpec& spec) {
  return std::abs(alpha_eval(u, spec) - beta_eval(u, spec));
}

// sup over the grid of |X_alpha - X_beta|.
inline double divergence(const CounterexampleSpec& spec, std::size_t points_per_octave = 10000) {
  spec.validate();
  double worst = 0.0;
  for (int n = spec.n_min; n < spec.n_max; ++n) {
    const std::size_t N = 2 * points_per_octave;
    for (std::size_t i = 0; i <= N; ++i) {
      const double u = spec.s(n) * (1.0 + 3.0 * static_cast<double>(i) / static_cast<double>(N));
      worst = std::max(worst, divergence_at(u, spec));
    }
  }
  return worst;
}

}  // namespace langevin
