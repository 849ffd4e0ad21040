#include <gtest/gtest.h>

#include <cmath>

#include "langevin/experiments.hpp"

using namespace langevin;

namespace {

// Thrown upward from 0 with unit speed under unit downward force: lands at
// t = 2 with speed -1 and then rests, so A(t) = t - 1 afterwards.
IntegratorConfig ballistic(double dt, bool refine) {
  IntegratorConfig c;
  c.dt = dt;
  c.t_max = 3.0;
  c.v0 = 1.0;
  c.forcing = ForceFn([](double) { return -1.0; });
  c.refine_impacts = refine;
  return c;
}

IntegratorConfig noisy(std::size_t path, double dt = 1e-3, bool refine = false) {
  RunConfig rc;
  rc.dt = dt;
  rc.t_max = 2.0;
  rc.seed = 21;
  rc.refine = refine;
  return integrator_config(rc, path);
}

}  // namespace

TEST(Ballistic, SingleImpactThenRest) {
  for (bool refine : {false, true}) {
    const double dt = 1e-3;
    const auto tr = simulate_deterministic(ballistic(dt, refine));
    ASSERT_EQ(tr.events.size(), 1u);
    EXPECT_NEAR(tr.events[0].time, 2.0, 2 * dt);
    EXPECT_NEAR(tr.events[0].v_in, -1.0, 2 * dt);
    EXPECT_EQ(tr.events[0].jump, -tr.events[0].v_in);
    for (std::size_t k = 0; k < tr.X.size(); ++k) {
      const double t = tr.X.grid.time(k);
      if (t > 2.0 + 2 * dt) {
        EXPECT_EQ(tr.X.values[k], 0.0);
        EXPECT_EQ(tr.V.values[k], 0.0);
        EXPECT_NEAR(tr.A.values[k], t - 1.0, 1e-9);
      }
    }
  }
}

TEST(FreeFlight, RefinementFindsTheZeroInsideTheStep) {
  // Constant velocity -1 from height 0.0105: the zero is at t = 0.0105,
  // half way through the second step of length 0.01.
  IntegratorConfig c;
  c.dt = 1e-2;
  c.t_max = 0.1;
  c.x0 = 0.0105;
  c.v0 = -1.0;
  c.forcing = ForceFn([](double) { return 0.0; });
  const auto coarse = simulate_deterministic(c);
  c.refine_impacts = true;
  const auto fine = simulate_deterministic(c);
  ASSERT_EQ(coarse.events.size(), 1u);
  ASSERT_EQ(fine.events.size(), 1u);
  EXPECT_NEAR(coarse.events[0].time, 0.02, 1e-12);
  EXPECT_NEAR(fine.events[0].time, 0.0105, 1e-12);
  EXPECT_EQ(fine.events[0].v_in, -1.0);
  EXPECT_EQ(fine.X.values.back(), 0.0);
  EXPECT_EQ(fine.A.values.back(), 1.0);
}

TEST(Ballistic, FlightConvergesAtFirstOrder) {
  auto err = [](double dt) {
    const auto tr = simulate_deterministic(ballistic(dt, false));
    double e = 0.0;
    for (std::size_t k = 0; k < tr.X.size(); ++k) {
      const double t = tr.X.grid.time(k);
      if (t <= 1.9) e = std::max(e, std::abs(tr.X.values[k] - (t - 0.5 * t * t)));
    }
    return e;
  };
  const double e1 = err(1e-2), e2 = err(1e-3);
  EXPECT_LT(e2, e1 / 5);
  EXPECT_LT(e1, 2e-2);
}

TEST(Integrator, RejectsBadConfigs) {
  auto c = ballistic(1e-3, false);
  c.dt = 0.0;
  EXPECT_THROW(simulate_deterministic(c), ConfigError);
  c = ballistic(1e-3, false);
  c.x0 = -1.0;
  EXPECT_THROW(simulate_deterministic(c), PreconditionError);
  EXPECT_THROW(simulate_sde(ballistic(1e-3, false)), ConfigError);
  EXPECT_THROW(simulate_deterministic(noisy(0)), ConfigError);
}

TEST(Integrator, InelasticInvariantsOnNoisyPaths) {
  std::size_t clamped = 0;
  for (bool refine : {false, true}) {
    for (std::size_t p = 0; p < 20; ++p) {
      const auto tr = simulate_sde(noisy(p, 1e-3, refine));
      clamped += tr.clamped_steps;
      for (std::size_t k = 0; k < tr.X.size(); ++k) {
        ASSERT_GE(tr.X.values[k], 0.0);
        ASSERT_EQ(tr.V.values[k], (tr.v0 + tr.B.values[k]) + tr.A.values[k]);
        if (tr.clamped[k]) {
          ASSERT_EQ(tr.X.values[k], 0.0);
          ASSERT_EQ(tr.V.values[k], 0.0);
        }
        if (k > 0) {
          ASSERT_GE(tr.A.values[k], tr.A.values[k - 1]);
        }
      }
      for (const auto& e : tr.events) {
        ASSERT_LT(e.v_in, 0.0);
        ASSERT_EQ(e.jump, -e.v_in);
      }
    }
  }
  EXPECT_GT(clamped, 0u);
}

TEST(Integrator, DeterministicPerStream) {
  const auto a = simulate_sde(noisy(3));
  const auto b = simulate_sde(noisy(3));
  const auto c = simulate_sde(noisy(4));
  EXPECT_EQ(a.X.values, b.X.values);
  EXPECT_NE(a.X.values, c.X.values);
}

TEST(Integrator, DrivingNoiseIsBrownian) {
  // 10^4 increments: the 5% quadratic-variation band is then 3.5 sd wide.
  int ok = 0;
  for (std::size_t p = 0; p < 20; ++p) {
    auto c = noisy(p, 1e-4);
    c.t_max = 1.0;
    ok += brownian_battery(simulate_sde(c).B).pass;
  }
  EXPECT_GE(ok, 17);
}

TEST(DetectImpacts, ThresholdFilters) {
  const auto tr = simulate_sde(noisy(1));
  const auto all = detect_impacts(tr, 0.0);
  EXPECT_EQ(all.size(), tr.events.size());
  const auto big = detect_impacts(tr, 0.05);
  EXPECT_LE(big.size(), all.size());
  for (const auto& e : big) EXPECT_GT(-e.v_in, 0.05);
  for (std::size_t i = 1; i < all.size(); ++i) EXPECT_LE(all[i - 1].time, all[i].time);
  EXPECT_THROW(detect_impacts(tr, -1.0), PreconditionError);
}

TEST(ToTrace, ConstructionRunsBecomeImpacts) {
  const auto pr = sample_langevin_pair(TimeGrid::over(1.0, 1e-3), derive_stream(2, 0, Channel::kDriving));
  const auto b = reflect_construct(pr.W, pr.Y);
  const auto tr = to_trace(b);
  EXPECT_EQ(tr.X.values, b.X.values);
  double sum = 0.0;
  for (const auto& e : tr.events) {
    ASSERT_LT(e.index, b.X.size());
    sum += e.jump;
  }
  const auto J = jump_representation_A(b);
  EXPECT_NEAR(sum, J.values.back(), 1e-12);
}
