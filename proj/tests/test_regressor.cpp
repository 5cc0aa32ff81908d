#include "mcptest/regressor.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "mcptest/rng.hpp"
#include "mcptest/simulation.hpp"
#include "oracles.hpp"

using namespace mcptest;

TEST(RelevanceProbability, HandValues) {
  EXPECT_DOUBLE_EQ(relevance_probability({0.0, 0.0}, 1), 0.5);
  EXPECT_DOUBLE_EQ(relevance_probability({0.0, 0.0}, 999), 0.5);
  // theta1 = -ln 3 at position 1: 1/(1+3) = 0.25.
  EXPECT_NEAR(relevance_probability({0.0, -std::log(3.0)}, 1), 0.25, 1e-15);
  EXPECT_NEAR(relevance_probability({2.0, -0.1}, 10), 1.0 / (1.0 + std::exp(-1.0)), 1e-15);
}

TEST(RelevanceProbability, MonotoneInPositionForNegativeSlope) {
  const TopicRegressor reg{1.2, -0.02};
  double previous = 1.0;
  for (std::size_t p = 1; p <= 500; p += 7) {
    const double h = relevance_probability(reg, p);
    EXPECT_LT(h, previous);
    EXPECT_GT(h, 0.0);
    previous = h;
  }
}

TEST(RelevanceProbability, ExtremeArgumentsStayFinite) {
  EXPECT_DOUBLE_EQ(relevance_probability({-800.0, -1.0}, 1000), 0.0);
  EXPECT_DOUBLE_EQ(relevance_probability({800.0, 1.0}, 1000), 1.0);
  EXPECT_THROW(relevance_probability({0.0, 0.0}, 0), std::invalid_argument);
}

TEST(FitRegressor, RecoversDecayingRelevance) {
  // Frozen fit for the ranking drawn from theta*=(1.0,-0.01) at rank size
  // 5000; cross-checked against two independent logistic solvers.
  RngStream stream(42, StreamDomain::ranking_sample, 0, 0, 0);
  const auto r = sample_ranking({1.0, -0.01}, 5000, stream);
  const auto fit = fit_regressor(r);
  EXPECT_NEAR(fit.theta0, 1.0781894436, 1e-5);
  EXPECT_NEAR(fit.theta1, -0.0106799520, 1e-8);
}

TEST(FitRegressor, GradientVanishesAtReportedOptimum) {
  RngStream stream(7, StreamDomain::ranking_sample, 3, 0, 0);
  const auto r = sample_ranking({0.8, -0.02}, 800, stream);
  FitOptions options;
  const auto fit = fit_regressor(r, options);
  long double g0 = 0.0L, g1 = 0.0L;
  for (std::size_t p = 1; p <= r.size(); ++p) {
    const double resid = static_cast<double>(r[p - 1]) - relevance_probability(fit, p);
    g0 += resid;
    g1 += resid * static_cast<double>(p);
  }
  g0 -= 2.0L * options.l2_penalty * fit.theta0;
  g1 -= 2.0L * options.l2_penalty * fit.theta1;
  EXPECT_LE(std::fabs(static_cast<double>(g0)), options.gradient_tolerance);
  EXPECT_LE(std::fabs(static_cast<double>(g1)), options.gradient_tolerance);
  EXPECT_GE(fit_objective(r, fit), fit_objective(r, {0.0, 0.0}));
}

TEST(FitRegressor, MatchesGridSearchOracle) {
  const BinaryRanking r1 = {1, 1, 0, 1, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0};
  const BinaryRanking r2 = {0, 1, 1, 0, 1, 0, 1, 1, 0, 0, 1, 0, 1, 0, 0, 0, 1, 0, 0, 0,
                            0, 0, 0, 1, 0, 0, 0, 0, 0, 0};
  for (const auto& r : {r1, r2}) {
    const auto fit = fit_regressor(r);
    const auto grid = oracles::grid_fit(r);
    EXPECT_NEAR(fit.theta0, grid.theta0, 2e-3);
    EXPECT_NEAR(fit.theta1, grid.theta1, 2e-3);
  }
}

TEST(FitRegressor, SlopeSignTracksRelevanceTrend) {
  // Relevance concentrated at the top: fitted slope is negative; at the
  // bottom: positive.
  BinaryRanking top(60, 0), bottom(60, 0);
  for (std::size_t i = 0; i < 12; ++i) {
    top[i] = 1;
    bottom[59 - i] = 1;
  }
  EXPECT_LT(fit_regressor(top).theta1, 0.0);
  EXPECT_GT(fit_regressor(bottom).theta1, 0.0);
}

TEST(FitRegressor, AllZeroRankingHasFiniteFit) {
  const BinaryRanking r(200, 0);
  const auto fit = fit_regressor(r);
  EXPECT_TRUE(std::isfinite(fit.theta0));
  EXPECT_TRUE(std::isfinite(fit.theta1));
  EXPECT_LT(relevance_probability(fit, 1), 1e-3);
}

TEST(FitRegressor, ErrorCarriesLastIterate) {
  RngStream stream(5, StreamDomain::ranking_sample, 1, 0, 0);
  const auto r = sample_ranking({0.5, -0.01}, 400, stream);
  FitOptions options;
  options.max_iterations = 1;
  try {
    fit_regressor(r, options);
    FAIL() << "expected FitError";
  } catch (const FitError& e) {
    const auto last = e.last_iterate();
    // One damped Newton step from the origin has already moved.
    EXPECT_TRUE(last.theta0 != 0.0 || last.theta1 != 0.0);
    EXPECT_GE(fit_objective(r, last), fit_objective(r, {0.0, 0.0}));
  }
  EXPECT_THROW(fit_regressor({1}), std::invalid_argument);
}

TEST(Perturb, ShiftsBothParametersUpward) {
  const auto up = perturb({1.0, -0.02}, 0.1);
  EXPECT_DOUBLE_EQ(up.theta0, 1.1);
  EXPECT_DOUBLE_EQ(up.theta1, -0.02 / 1.1);
  const auto flipped = perturb({-1.0, 0.02}, 0.1);
  EXPECT_DOUBLE_EQ(flipped.theta0, -1.0 / 1.1);
  EXPECT_DOUBLE_EQ(flipped.theta1, 0.02 * 1.1);
  const auto zero = perturb({0.0, 0.0}, 0.5);
  EXPECT_DOUBLE_EQ(zero.theta0, 0.0);
  EXPECT_DOUBLE_EQ(zero.theta1, 0.0);
}

TEST(Perturb, ImprovesRelevanceEverywhere) {
  const TopicRegressor reg{0.9, -0.015};
  const auto better = perturb(reg, 0.2);
  for (std::size_t p = 1; p <= 1000; p += 13)
    EXPECT_GT(relevance_probability(better, p), relevance_probability(reg, p));
}

TEST(Perturb, TinyProportionIsNearIdentity) {
  const TopicRegressor reg{1.3, -0.04};
  const auto nudged = perturb(reg, 1e-12);
  EXPECT_NEAR(nudged.theta0, reg.theta0, 1e-9);
  EXPECT_NEAR(nudged.theta1, reg.theta1, 1e-9);
  EXPECT_THROW(perturb(reg, 0.0), std::invalid_argument);
  EXPECT_THROW(perturb(reg, -0.1), std::invalid_argument);
}
