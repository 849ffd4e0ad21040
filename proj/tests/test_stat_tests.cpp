#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "langevin/gauss_paths.hpp"
#include "langevin/stat_tests.hpp"

using namespace langevin;

namespace {

std::vector<double> normals(std::size_t n, std::uint64_t seed, std::size_t path) {
  NormalSource src(derive_stream(seed, path, Channel::kAux));
  std::vector<double> x(n);
  for (auto& v : x) v = src.next();
  return x;
}

double uniform_cdf(double x) { return std::clamp(x, 0.0, 1.0); }

}  // namespace

TEST(Kolmogorov, TabulatedTailValues) {
  EXPECT_NEAR(kolmogorov_q(1.0), 0.26999967, 1e-7);
  EXPECT_NEAR(kolmogorov_q(1.36), 0.0494, 1e-3);
  EXPECT_NEAR(kolmogorov_q(1.63), 0.0098, 1e-3);
  EXPECT_EQ(kolmogorov_q(0.0), 1.0);
  EXPECT_LT(kolmogorov_q(5.0), 1e-20);
  EXPECT_NEAR(normal_cdf(0.0), 0.5, 1e-15);
  EXPECT_NEAR(normal_cdf(1.96), 0.9750021, 1e-7);
}

TEST(KsOneSample, MidpointSampleAgainstUniform) {
  std::vector<double> x;
  for (int i = 1; i <= 100; ++i) x.push_back((i - 0.5) / 100.0);
  const auto r = ks_one_sample(x, uniform_cdf);
  EXPECT_NEAR(r.statistic, 0.005, 1e-15);
  ASSERT_TRUE(r.p_value.has_value());
  EXPECT_EQ(*r.p_value, 1.0);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.n, 100u);
}

TEST(KsOneSample, SizeErrorAndShiftDetection) {
  EXPECT_THROW(ks_one_sample(std::vector<double>{0.5}, uniform_cdf), PreconditionError);
  EXPECT_THROW(ks_one_sample(std::vector<double>(7, 0.5), uniform_cdf), PreconditionError);
  auto x = normals(10000, 1, 0);
  for (auto& v : x) v += 0.1;
  const auto r = ks_one_sample(x, normal_cdf);
  EXPECT_FALSE(r.pass);
  EXPECT_LT(*r.p_value, 1e-6);
}

TEST(KsTwoSample, IdenticalAndDisjoint) {
  const auto a = normals(100, 2, 0);
  const auto same = ks_two_sample(a, a);
  EXPECT_EQ(same.statistic, 0.0);
  EXPECT_EQ(*same.p_value, 1.0);
  std::vector<double> b = a;
  for (auto& v : b) v += 100.0;
  EXPECT_EQ(ks_two_sample(a, b).statistic, 1.0);
  EXPECT_FALSE(ks_two_sample(a, b).pass);
  EXPECT_THROW(ks_two_sample(a, std::vector<double>(3, 0.0)), PreconditionError);
}

TEST(KsTwoSample, TiesAreHandled) {
  const std::vector<double> a{0, 0, 0, 0, 1, 1, 1, 1};
  const std::vector<double> b{0, 0, 1, 1, 1, 1, 1, 1};
  EXPECT_DOUBLE_EQ(ks_two_sample(a, b).statistic, 0.25);
}

// Rejection rates under the null: 1000 repetitions at alpha = 0.01 should
// reject about 10 times; [3, 20] excludes the nominal rate's 4 sd tails.
TEST(Calibration, OneSampleRejectionRate) {
  int rejected = 0;
  for (std::size_t r = 0; r < 1000; ++r) rejected += !ks_one_sample(normals(10000, 3, r), normal_cdf).pass;
  EXPECT_GE(rejected, 3);
  EXPECT_LE(rejected, 20);
}

TEST(Calibration, TwoSampleRejectionRate) {
  int rejected = 0;
  for (std::size_t r = 0; r < 1000; ++r) {
    rejected += !ks_two_sample(normals(10000, 4, 2 * r), normals(10000, 4, 2 * r + 1)).pass;
  }
  EXPECT_GE(rejected, 3);
  EXPECT_LE(rejected, 20);
}

TEST(Battery, BrownianPathsPass) {
  int ok = 0;
  for (std::size_t r = 0; r < 100; ++r) {
    const auto w = sample_brownian(TimeGrid::over(1.0, 1e-5), derive_stream(5, r, Channel::kDriving));
    const auto rep = brownian_battery(w);
    ok += rep.pass;
    ASSERT_EQ(rep.components.size(), 3u);
    ASSERT_EQ(rep.statistic, static_cast<double>(!rep.components[0].pass + !rep.components[1].pass +
                                                 !rep.components[2].pass));
  }
  EXPECT_GE(ok, 95);
}

TEST(Battery, DoubledPathFailsQuadraticVariation) {
  auto w = sample_brownian(TimeGrid::over(1.0, 1e-4), derive_stream(6, 0, Channel::kDriving));
  for (auto& v : w.values) v *= 2.0;
  const auto rep = brownian_battery(w);
  EXPECT_FALSE(rep.pass);
  EXPECT_FALSE(rep.components[1].pass);
  EXPECT_NEAR(rep.components[1].statistic, 4.0, 0.2);
}

TEST(Battery, RampFailsNormality) {
  SamplePath ramp{TimeGrid{0.0, 1e-3, 1000}, std::vector<double>(1001)};
  for (std::size_t i = 0; i <= 1000; ++i) ramp.values[i] = 1e-3 * static_cast<double>(i);
  const auto rep = brownian_battery(ramp);
  EXPECT_FALSE(rep.pass);
  EXPECT_FALSE(rep.components[0].pass);
  SamplePath short_path{TimeGrid{0.0, 1e-2, 50}, std::vector<double>(51, 0.0)};
  EXPECT_THROW(brownian_battery(short_path), PreconditionError);
}

TEST(ZeroSet, CountsGridPointsAtOrBelowLevel) {
  const double dt = 1e-3;
  SamplePath x{TimeGrid{0.0, dt, 1000}, std::vector<double>(1001)};
  for (std::size_t i = 0; i <= 1000; ++i) x.values[i] = 0.5 * std::pow(dt * static_cast<double>(i), 2);
  EXPECT_DOUBLE_EQ(zero_set_measure(x), dt);
  SamplePath z{TimeGrid{0.0, dt, 1000}, std::vector<double>(1001, 0.0)};
  // Every one of the n + 1 grid points counts.
  EXPECT_DOUBLE_EQ(zero_set_measure(z), 1001 * dt);
  EXPECT_DOUBLE_EQ(zero_set_measure(x, 0.5), 1001 * dt);
  EXPECT_EQ(zero_set_measure(SamplePath{}), 0.0);
}
