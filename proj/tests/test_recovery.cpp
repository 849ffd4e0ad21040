#include <gtest/gtest.h>

#include <cmath>

#include "langevin/experiments.hpp"

using namespace langevin;

namespace {

SamplePath path(double dt, std::vector<double> v) {
  const std::size_t n = v.size() - 1;
  return SamplePath{TimeGrid{0.0, dt, n}, std::move(v)};
}

SamplePath ramp(double slope, double dt, std::size_t n) {
  SamplePath p{TimeGrid{0.0, dt, n}, std::vector<double>(n + 1)};
  for (std::size_t i = 0; i <= n; ++i) p.values[i] = slope * static_cast<double>(i) * dt;
  return p;
}

SamplePath zeros(double dt, std::size_t n) { return SamplePath{TimeGrid{0.0, dt, n}, std::vector<double>(n + 1, 0.0)}; }

PathBundle sampled(double dt, std::size_t p) {
  const auto pr = sample_langevin_pair(TimeGrid::over(1.0, dt), derive_stream(17, p, Channel::kDriving));
  return reflect_construct(pr.W, pr.Y);
}

}  // namespace

TEST(FirstPassage, RampAndStrictness) {
  const auto bp = ramp(1.0, 0.01, 200);
  EXPECT_NEAR(first_passage(bp, 0.505), 0.51, 1e-12);
  EXPECT_NEAR(first_passage(bp, 0.0), 0.01, 1e-12);
  EXPECT_THROW(first_passage(bp, 5.0), HorizonError);
  EXPECT_THROW(first_passage(bp, -1.0), PreconditionError);
}

TEST(FirstPassage, ReflectionPrincipleProbability) {
  // P(sigma'(1) > 1) = P(max of B on [0,1] < 1) = 2 Phi(1) - 1.
  const double dt = 1e-4;
  const std::size_t N = 4000;
  std::size_t late = 0;
  for (std::size_t i = 0; i < N; ++i) {
    const auto b = sample_brownian(TimeGrid::over(1.0, dt), derive_stream(4, i, Channel::kBPrime));
    try {
      late += first_passage(b, 1.0) > 1.0 ? 1 : 0;
    } catch (const HorizonError&) {
      ++late;
    }
  }
  const double expected = 2.0 * normal_cdf(1.0) - 1.0;
  // Discrete monitoring misses crossings, raising the estimate by about
  // 0.003 at this step; the rest is 4 standard errors.
  EXPECT_NEAR(static_cast<double>(late) / N, expected, 4 * std::sqrt(0.22 / N) + 0.003);
}

TEST(Recovery, NoPushingMeansWEqualsB) {
  const auto B = sample_brownian(TimeGrid::over(1.0, 1e-3), derive_stream(1, 0, Channel::kDriving));
  const auto Z = zeros(1e-3, 1000);
  const auto bp = sample_brownian(TimeGrid::over(1.0, 1e-3), derive_stream(1, 0, Channel::kBPrime));
  const auto r = build_recovery(Z, Z, Z, B, bp);
  EXPECT_EQ(r.W.values, B.values);
  for (std::size_t k = 0; k < r.T.size(); ++k) EXPECT_EQ(r.T[k], k);
  EXPECT_TRUE(r.O.empty());
  EXPECT_TRUE(r.D_A.empty());
  EXPECT_FALSE(r.truncated);
}

TEST(Recovery, RampExampleOpensOneInterval) {
  // A jumps from 0 to 1 at clock time 1; B' is the unit ramp, so
  // sigma'(1) = 1 and O = (1, 2).
  const auto A = path(1.0, {0.0, 1.0, 1.0});
  const auto B = path(1.0, {0.0, -1.0, -2.0});
  const auto Z = zeros(1.0, 2);
  const auto r = build_recovery(Z, Z, A, B, ramp(1.0, 1.0, 10));
  ASSERT_EQ(r.O.size(), 1u);
  EXPECT_EQ(r.O[0].left, 1.0);
  EXPECT_EQ(r.O[0].right, 2.0);
  EXPECT_EQ(r.T, (std::vector<std::size_t>{0, 2, 3}));
  EXPECT_EQ(r.D_A, (std::vector<double>{1.0}));
  EXPECT_EQ(r.W.values, (std::vector<double>{0.0, -1.0, 0.0, -1.0}));
  const auto O = open_set_O(A, r.sigma_prime);
  ASSERT_EQ(O.size(), 1u);
  EXPECT_EQ(O[0].left, 1.0);
  EXPECT_EQ(open_set_length(O, 1.5), 0.5);
  EXPECT_EQ(open_set_length(O, 3.0), 1.0);
  const auto l4 = verify_lemma4(r, Z);
  EXPECT_EQ(l4.stieltjes_residual, 0.0);
}

TEST(Recovery, RejectsDecreasingA) {
  const auto A = path(1.0, {0.0, 1.0, 0.5});
  const auto Z = zeros(1.0, 2);
  EXPECT_THROW(build_recovery(Z, Z, A, Z, ramp(1.0, 1.0, 10)), PreconditionError);
}

TEST(Recovery, RoundTripOnConstructionPaths) {
  for (double dt : {1e-2, 1e-3}) {
    for (std::size_t p = 0; p < 10; ++p) {
      const auto b = sampled(dt, p);
      const auto r = build_recovery(b);
      ASSERT_LE(sup_distance(r.W, b.W, b.W.size() - 1), 1e-12);
      const auto rep = verify_prop3(r, b.X);
      EXPECT_LE(rep.residual_ii, 1e-12);
      EXPECT_EQ(rep.residual_iii, 0.0);
      EXPECT_EQ(rep.points_checked, b.X.size());
      for (std::size_t k = 0; k < r.T.size(); ++k) ASSERT_EQ(r.T[k], b.tc.T[k]);
    }
  }
}

TEST(Recovery, OpenSetIsTheDualClock) {
  for (std::size_t p = 0; p < 10; ++p) {
    const auto b = sampled(1e-3, p);
    const auto r = build_recovery(b);
    const auto rep = verify_lemma4(r, b.X);
    EXPECT_LE(rep.stieltjes_residual, 1e-9);
    if (rep.interior_points > 0) {
      EXPECT_LT(rep.max_W_in_O, 0.0);
      // X at the clock point closing a run is at most dt times the
      // overshoot of W at the run's end.
      EXPECT_LE(rep.max_X_at_tau_in_O, 1e-3 * 2.0 * std::sqrt(1e-3 * std::log(1e3)));
    }
  }
}

TEST(Recovery, WindowTruncatesAndCapThrows) {
  const auto b = sampled(1e-3, 0);
  RecoveryOptions opt;
  opt.window = 100;
  const auto r = build_recovery(b, opt);
  EXPECT_EQ(r.W.size(), 101u);
  EXPECT_LE(sup_distance(r.W, b.W, 100), 1e-12);

  const auto A = ramp(1.0, 1e-2, 100);
  const auto Z = zeros(1e-2, 100);
  LazyBrownian small(1e-2, derive_stream(0, 0, Channel::kBPrime), 5);
  EXPECT_THROW(build_recovery(Z, Z, A, Z, small), HorizonError);
}

TEST(FilterJumps, KeepsFastEpisodesWhole) {
  // Episodes: first step 0.5 then 0.1 (kept at eps 0.3), then a slow one.
  const auto A = path(1.0, {0.0, 0.5, 0.6, 0.6, 0.7, 0.8, 0.8});
  std::vector<double> times;
  const auto F = filter_jumps(A, 0.3, &times);
  EXPECT_EQ(F.values, (std::vector<double>{0.0, 0.5, 0.6, 0.6, 0.6, 0.6, 0.6}));
  EXPECT_EQ(times, (std::vector<double>{1.0}));
  for (double v : filter_jumps(A, 1.0).values) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(filter_jumps(A, 0.0).values, A.values);
}

TEST(EpsilonSplice, SingleJumpTwoPieceFormula) {
  // B' = unit ramp hits 1.5 after 2 steps: W follows B up to clock 2, then
  // B(2) + B' for two steps, then B plus B'(2) = 2.
  const auto B = path(1.0, {0.0, -1.0, -2.0, -3.0, -4.0});
  const auto A = path(1.0, {0.0, 0.0, 1.5, 1.5, 1.5});
  const auto Z = zeros(1.0, 4);
  const auto bp = ramp(1.0, 1.0, 20);
  const auto s = epsilon_splice(Z, Z, A, B, bp, 1.0);
  EXPECT_EQ(s.jump_times, (std::vector<double>{2.0}));
  EXPECT_EQ(s.W_eps().values, (std::vector<double>{0.0, -1.0, -2.0, -1.0, 0.0, -1.0, -2.0}));
  const auto none = epsilon_splice(Z, Z, A, B, bp, 2.0);
  EXPECT_EQ(none.W_eps().values, B.values);
  EXPECT_THROW(epsilon_splice(Z, Z, A, B, bp, 0.0), PreconditionError);
}

TEST(EpsilonSplice, LargeEpsilonLeavesB) {
  const auto b = sampled(1e-3, 2);
  double biggest = 0.0;
  for (std::size_t k = 1; k < b.A.size(); ++k) biggest = std::max(biggest, b.A.values[k] - b.A.values[k - 1]);
  const auto s = epsilon_splice(b.X, b.V, b.A, b.B, b.Bp, biggest + 1.0);
  EXPECT_EQ(s.W_eps().values, b.B.values);
  EXPECT_TRUE(s.jump_times.empty());
}
