// Copyright 2026 The HAM Authors. Apache 2.0 License.
#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "ham/controller.hpp"

using namespace ham;

TEST(MeanGap, PooledAcrossRanks) {
  const std::vector<std::vector<BatchUsage>> ranks{{{6, 10}, {6, 10}}, {{4, 10}, {4, 10}, {4, 10}}};
  EXPECT_NEAR(mean_gap(ranks, 0.5), -0.02, 1e-15);
}

TEST(MeanGap, Errors) {
  EXPECT_THROW(mean_gap(std::vector<BatchUsage>{}, 0.5), ConfigError);
  EXPECT_THROW(mean_gap(std::vector<BatchUsage>{{1, 0}}, 0.5), ConfigError);
  EXPECT_THROW(mean_gap(std::vector<BatchUsage>{{3, 2}}, 0.5), ConfigError);
}

TEST(MeanGap, IndependentOfPartition) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::size_t> len(1, 300), cut(0, 40);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<BatchUsage> all;
    for (int i = 0; i < 40; ++i) {
      const std::size_t n = len(rng);
      all.push_back({std::uniform_int_distribution<std::size_t>(0, n)(rng), n});
    }
    const double pooled = mean_gap(all, 0.3);
    const std::size_t a = cut(rng), b = std::max(a, cut(rng));
    std::vector<std::vector<BatchUsage>> ranks{{all.begin(), all.begin() + a},
                                               {all.begin() + a, all.begin() + b},
                                               {all.begin() + b, all.end()}};
    EXPECT_NEAR(mean_gap(ranks, 0.3), pooled, 1e-14);
  }
}

TEST(SyntheticGrad, Examples) {
  ControllerState st;
  EXPECT_EQ(synthetic_grad(0.0, st), 0.0);
  st.clip_c = 0.05;
  EXPECT_EQ(synthetic_grad(0.1, st), -0.05);
  st.clip_c = 1.0;
  st.gain_gamma = 0.1;
  EXPECT_NEAR(synthetic_grad(0.1, st), -0.01, 1e-17);
}

TEST(State, Validation) {
  ControllerState st;
  st.f_target = 1.0;
  EXPECT_THROW(st.validate(), ConfigError);
  st = {};
  st.clip_c = 0.0;
  EXPECT_THROW(st.validate(), ConfigError);
}

TEST(Step, FrozenWindowLeavesParameterUntouched) {
  ControllerState st;
  st.freeze_N = 3;
  st.p_tau = 0.4;
  for (double gap : {0.9, -0.7, 0.3}) {
    const ControllerState next = controller_step(st, gap);
    EXPECT_EQ(next.p_tau, 0.4);
    EXPECT_EQ(next.adam_m, 0.0);
    EXPECT_EQ(next.adam_v, 0.0);
    EXPECT_EQ(next.step, st.step + 1);
    st = next;
  }
  EXPECT_NE(controller_step(st, 0.3).p_tau, 0.4);
}

TEST(Step, FreezeWindowInvarianceIsExact) {
  ControllerState a, b;
  a.freeze_N = b.freeze_N = 3;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> U(-1, 1);
  for (int i = 0; i < 3; ++i) {
    a = controller_step(a, U(rng));
    b = controller_step(b, U(rng));
  }
  for (int i = 0; i < 50; ++i) {
    const double g = U(rng);
    a = controller_step(a, g);
    b = controller_step(b, g);
  }
  EXPECT_EQ(a.p_tau, b.p_tau);
  EXPECT_EQ(a.adam_m, b.adam_m);
  EXPECT_EQ(a.adam_v, b.adam_v);
}

TEST(Step, SignChainOnFirstUnfrozenStep) {
  ControllerState st;
  st.freeze_N = 0;
  const ControllerState up = controller_step(st, 0.2);
  EXPECT_GT(up.p_tau, st.p_tau);
  EXPECT_GT(up.tau(), st.tau());
  // Bias-corrected first step moves by lr * g / (|g| + eps).
  EXPECT_NEAR(up.p_tau, st.lr * 0.2 / (0.2 + st.adam_eps), 1e-15);
  const ControllerState down = controller_step(st, -0.2);
  EXPECT_LT(down.p_tau, st.p_tau);
}

TEST(Step, ZeroGapIsFixedPoint) {
  ControllerState st;
  st.freeze_N = 0;
  st.p_tau = -0.3;
  for (int i = 0; i < 10; ++i) st = controller_step(st, 0.0);
  EXPECT_EQ(st.p_tau, -0.3);
}

TEST(Step, BoundedDrive) {
  // |delta p| per step stays near lr even for saturated gaps.
  ControllerState st;
  st.freeze_N = 0;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-1, 1);
  for (int i = 0; i < 2000; ++i) {
    const double before = st.p_tau;
    st = controller_step(st, U(rng));
    EXPECT_LE(std::abs(st.p_tau - before), 10 * st.lr);
  }
}

TEST(Step, WeightDecayShrinksTowardZero) {
  ControllerState st;
  st.freeze_N = 0;
  st.p_tau = 2.0;
  st.weight_decay = 0.1;
  EXPECT_NEAR(controller_step(st, 0.0).p_tau, 2.0 * (1 - st.lr * 0.1), 1e-15);
}

TEST(ClosedLoop, CorrectionOpposesGap) {
  // Start too low (over-selection) and too high (under-selection).
  for (double p0 : {-3.0, 3.0}) {
    ControllerState st;
    st.freeze_N = 0;
    st.scale_s = 1.0;
    st.p_tau = p0;
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> U(0, 1);
    for (int i = 0; i < 200; ++i) {
      std::size_t n = 0;
      for (int j = 0; j < 128; ++j) n += U(rng) >= st.tau();
      st = controller_step(st, mean_gap(std::vector<BatchUsage>{{n, 128}}, st.f_target));
    }
    if (p0 < 0) {
      EXPECT_GT(st.p_tau, p0);
    } else {
      EXPECT_LT(st.p_tau, p0);
    }
  }
}

TEST(ClosedLoop, ReachesTargetsOnBetaScores) {
  for (double f : {0.25, 0.5, 0.75}) {
    ControllerSim sim;
    sim.f_target = f;
    sim.seed = 11;
    const auto r = simulate_controller(sim);
    EXPECT_EQ(r.trace.size(), 5000u);
    EXPECT_NEAR(r.heldout_fraction, f, 0.02) << "target " << f;
  }
}

TEST(ClosedLoop, Deterministic) {
  ControllerSim sim;
  sim.steps = 300;
  sim.seed = 5;
  EXPECT_EQ(simulate_controller(sim).final_state.p_tau, simulate_controller(sim).final_state.p_tau);
}

TEST(TraceCsv, HeaderAndRows) {
  std::ostringstream os;
  write_controller_csv({{1, 0.1, 0.2, 0.6, 0.3}}, os);
  const std::string s = os.str();
  EXPECT_EQ(s.substr(0, s.find('\n')), "step,gap,p_tau,tau,realized");
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 2);
}
