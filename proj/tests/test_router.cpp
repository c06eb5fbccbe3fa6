// Copyright 2026 The HAM Authors. Apache 2.0 License.
#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "ham/router.hpp"

using namespace ham;

TEST(Aggregate, MinMaxAndSingleHead) {
  EXPECT_EQ(aggregate(Vec{0.3, 0.7}, Aggregation::Min), 0.3);
  EXPECT_EQ(aggregate(Vec{0.3, 0.7}, Aggregation::Max), 0.7);
  EXPECT_EQ(aggregate(Vec{0.42}, Aggregation::Min), 0.42);
  EXPECT_EQ(aggregate(Vec{0.42}, Aggregation::Max), 0.42);
  EXPECT_THROW(aggregate(Vec{}, Aggregation::Min), DimensionError);
}

TEST(Aggregate, SortOracleAndOrdering) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> U(0, 2);
  for (int i = 0; i < 100; ++i) {
    Vec s(8);
    for (double& x : s) x = U(rng);
    Vec sorted = s;
    std::sort(sorted.begin(), sorted.end());
    EXPECT_EQ(aggregate(s, Aggregation::Min), sorted.front());
    EXPECT_EQ(aggregate(s, Aggregation::Max), sorted.back());
    EXPECT_LT(aggregate(s, Aggregation::Min), aggregate(s, Aggregation::Max));
  }
  EXPECT_EQ(aggregate(Vec{0.5, 0.5}, Aggregation::Min), aggregate(Vec{0.5, 0.5}, Aggregation::Max));
}

TEST(Threshold, EffectiveValue) {
  EXPECT_EQ(effective_threshold({0.0, 2.0}), 1.0);
  EXPECT_LT(effective_threshold({-800.0, 2.0}), 1e-300);
  EXPECT_EQ(effective_threshold({0.0, 1.0}), 0.5);
  EXPECT_THROW(effective_threshold({0.0, 0.0}), ConfigError);
}

TEST(Threshold, LogitRoundTrip) {
  for (double tau : {0.1, 0.5, 1.0, 1.7}) {
    EXPECT_NEAR(effective_threshold({threshold_logit(tau, 2.0), 2.0}), tau, 1e-14);
  }
  EXPECT_EQ(effective_threshold({threshold_logit(0.0, 2.0), 2.0}), 0.0);
  EXPECT_THROW(threshold_logit(2.5, 2.0), ConfigError);
}

TEST(RouterConfig, MetricScale) {
  RouterConfig c;
  EXPECT_EQ(c.metric_scale(), 2.0);
  c.kind = RouterKind::InputLinear;
  EXPECT_EQ(c.metric_scale(), 1.0);
}

TEST(Select, Definition) {
  EXPECT_TRUE(select(0.3, 0.25));
  EXPECT_FALSE(select(0.2, 0.25));
  EXPECT_TRUE(select(0.25, 0.25));
  for (double e : {0.0, 0.7, 2.0}) {
    EXPECT_TRUE(select(e, 0.0));
    EXPECT_FALSE(select(e, 2.0 + 1e-9));
  }
}

TEST(Select, NestedInTau) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> U(0, 2);
  Vec e(200);
  for (double& x : e) x = U(rng);
  for (double lo = 0.0; lo < 2.0; lo += 0.1) {
    const double hi = lo + 0.05;
    for (double x : e) {
      if (select(x, hi)) {
        EXPECT_TRUE(select(x, lo));
      }
    }
  }
}

TEST(RouteInput, ZeroWeightsGiveHalf) {
  auto shallow = zero_router(RouterKind::InputLinear, 4, 8);
  EXPECT_EQ(route_input(Vec{1, 2, 3, 4}, shallow, 3), Vec(3, 0.5));
  auto deep = zero_router(RouterKind::InputMlp, 4, 8);
  EXPECT_EQ(route_input(Vec{1, 2, 3, 4}, deep, 2), Vec(2, 0.5));
}

TEST(RouteInput, ShallowHandValue) {
  auto r = zero_router(RouterKind::InputLinear, 3, 0);
  r.w[0](0, 0) = 1.0;
  const Vec s = route_input(Vec{2, 0, 0}, r, 1);
  EXPECT_NEAR(s[0], 1.0 / (1.0 + std::exp(-2.0)), 1e-15);
  EXPECT_NEAR(s[0], 0.8808, 1e-4);
}

TEST(RouteInput, DeepMatchesHandComposedMlp) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> N(0, 1);
  auto r = zero_router(RouterKind::InputMlp, 3, 4);
  for (auto& m : r.w)
    for (double& x : m.flat()) x = N(rng);
  for (auto& b : r.b)
    for (double& x : b) x = N(rng);
  const Vec x{0.3, -1.0, 2.0};
  Vec h = x;
  for (int l = 0; l < 3; ++l) {
    Vec y(r.w[l].cols(), 0.0);
    for (std::size_t j = 0; j < y.size(); ++j) {
      for (std::size_t i = 0; i < h.size(); ++i) y[j] += h[i] * r.w[l](i, j);
      y[j] += r.b[l][j];
      if (l < 2) y[j] = 0.5 * y[j] * (1 + std::erf(y[j] / std::sqrt(2.0)));
    }
    h = y;
  }
  const Vec s = route_input(x, r, 2);
  EXPECT_NEAR(s[0], 1 / (1 + std::exp(-h[0])), 1e-14);
  EXPECT_GT(s[0], 0.0);
  EXPECT_LT(s[0], 1.0);
}

TEST(RouteInput, ShapeMismatchThrows) {
  auto r = zero_router(RouterKind::InputLinear, 3, 0);
  EXPECT_THROW(route_input(Vec{1, 2}, r, 1), DimensionError);
}

TEST(Eda, Limits) {
  EXPECT_NEAR(eda_combine(0.4, 0.8, 1 - 1e-12), 0.4, 1e-11);
  EXPECT_NEAR(eda_combine(0.4, 0.8, 1e-12), 0.8, 1e-11);
  EXPECT_NEAR(eda_combine(0.4, 0.8, 0.5), 0.6, 1e-15);
}

TEST(Eda, PreservesRange) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> U(0.2, 0.9), G(1e-6, 1 - 1e-6);
  for (int i = 0; i < 1000; ++i) {
    const double e = eda_combine(U(rng), U(rng), G(rng));
    EXPECT_GE(e, 0.2);
    EXPECT_LE(e, 0.9);
  }
}

TEST(Attach, Scaling) {
  const Vec v{1, -2, 3};
  EXPECT_EQ(attach_score(v, 1.0), v);
  EXPECT_EQ(attach_score(v, 0.0), Vec(3, 0.0));
}

TEST(Decide, AttachFollowsAggregationMode) {
  RouterConfig c;
  c.kind = RouterKind::InputLinear;
  c.aggregation = Aggregation::Max;
  auto d = decide(Vec{0.2, 0.9, 0.4}, c, 0.5, std::nullopt);
  EXPECT_EQ(d.attach, 0.9);
  EXPECT_TRUE(d.selected);
  c.aggregation = Aggregation::Min;
  d = decide(Vec{0.2, 0.9, 0.4}, c, 0.5, std::nullopt);
  EXPECT_EQ(d.attach, 0.2);
  EXPECT_FALSE(d.selected);
}

TEST(Decide, CosineAttachIsRescaledWhenEnabled) {
  RouterConfig c;
  EXPECT_FALSE(c.attach_enabled());
  EXPECT_EQ(decide(Vec{1.6}, c, 0.0, std::nullopt).attach, 1.0);
  c.attach = true;
  EXPECT_NEAR(decide(Vec{1.6}, c, 0.0, std::nullopt).attach, 0.8, 1e-15);
}

TEST(Decide, EdaOnlyWithPreviousScore) {
  RouterConfig c;
  c.eda_enabled = true;
  auto d = decide(Vec{0.4}, c, 0.5, std::nullopt);
  EXPECT_EQ(d.score, 0.4);
  d = decide(Vec{0.4}, c, 0.5, 0.8);
  EXPECT_NEAR(d.score, 0.6, 1e-15);
  EXPECT_EQ(d.raw_score, 0.4);
  EXPECT_TRUE(d.selected);
}
