#include "mcptest/distributions.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "oracles.hpp"

using namespace mcptest;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Reference values from scipy.special.betainc.
TEST(IncompleteBeta, ReferenceValues) {
  EXPECT_NEAR(regularized_incomplete_beta(0.4, 2, 3), 0.5247999999999999, 1e-13);
  EXPECT_NEAR(regularized_incomplete_beta(0.3, 0.5, 0.5), 0.36901011956554536, 1e-13);
  EXPECT_NEAR(regularized_incomplete_beta(0.8, 5, 1.5), 0.5055606488152468, 1e-13);
  EXPECT_EQ(regularized_incomplete_beta(0.0, 2, 3), 0.0);
  EXPECT_EQ(regularized_incomplete_beta(1.0, 2, 3), 1.0);
}

TEST(NormalCdf, ReferenceValues) {
  EXPECT_NEAR(normal_cdf(0.0), 0.5, 1e-15);
  EXPECT_NEAR(normal_cdf(1.96), 0.9750021048517795, 1e-13);
  EXPECT_NEAR(normal_cdf(-1.96), 1.0 - 0.9750021048517795, 1e-13);
}

// Reference values from scipy.stats.t.cdf.
TEST(TCdf, ReferenceValues) {
  EXPECT_NEAR(t_cdf(2.228, 10), 0.9749941140914443, 1e-12);
  EXPECT_NEAR(t_cdf(1.5, 3), 0.8847080673775886, 1e-12);
  EXPECT_NEAR(t_cdf(-0.7, 12), 0.2486370768953537, 1e-12);
  EXPECT_NEAR(t_cdf(3.2, 1), 0.9035887520207704, 1e-12);
  EXPECT_NEAR(t_cdf(0.0, 7), 0.5, 1e-15);
}

TEST(TCdf, MatchesQuadratureOracle) {
  for (double df : {1.0, 2.0, 4.0, 9.0, 30.0, 120.0})
    for (double t = -6.0; t <= 6.0; t += 0.75)
      EXPECT_NEAR(t_cdf(t, df), oracles::t_cdf_quadrature(t, df), 1e-10)
          << "t=" << t << " df=" << df;
}

TEST(TCdf, SymmetryAndMonotonicity) {
  for (double t = 0.0; t <= 5.0; t += 0.25)
    EXPECT_NEAR(t_cdf(t, 6) + t_cdf(-t, 6), 1.0, 1e-14);
  double prev = 0.0;
  for (double t = -8.0; t <= 8.0; t += 0.5) {
    const double v = t_cdf(t, 5);
    EXPECT_GE(v, prev);
    prev = v;
  }
}

TEST(TCdf, RejectsBadDf) {
  EXPECT_THROW(t_cdf(1.0, 0.5), std::invalid_argument);
  EXPECT_THROW(t_cdf(1.0, -2), std::invalid_argument);
}

// Reference values from scipy.stats.studentized_range.cdf.
TEST(StudentizedRange, ReferenceValues) {
  EXPECT_NEAR(studentized_range_cdf(3.314, 3, kInf), 0.9499558595938898, 1e-9);
  EXPECT_NEAR(studentized_range_cdf(3.877, 3, 10), 0.9500129112467469, 1e-9);
  EXPECT_NEAR(studentized_range_cdf(2.5, 5, 20), 0.5817212659249582, 1e-9);
  EXPECT_NEAR(studentized_range_cdf(4.0, 10, 60), 0.8495421912779104, 1e-9);
  EXPECT_NEAR(studentized_range_cdf(1.0, 3, 5), 0.22985078385688207, 1e-9);
}

// For k = 2 the range of two standard normals is sqrt(2)|t|, so the CDF
// must collapse to the folded t distribution.
TEST(StudentizedRange, TwoGroupsReduceToFoldedT) {
  for (double df : {3.0, 8.0, 25.0})
    for (double q = 0.25; q <= 6.0; q += 0.5)
      EXPECT_NEAR(studentized_range_cdf(q, 2, df), 2.0 * t_cdf(q / std::sqrt(2.0), df) - 1.0,
                  1e-9)
          << "q=" << q << " df=" << df;
}

TEST(StudentizedRange, NormalLimitMatchesLargeDf) {
  for (double q = 1.0; q <= 5.0; q += 1.0)
    EXPECT_NEAR(studentized_range_cdf(q, 4, 1e7), normal_range_cdf(q, 4), 1e-6);
}

TEST(StudentizedRange, BoundsAndMonotonicity) {
  EXPECT_EQ(studentized_range_cdf(0.0, 3, 10), 0.0);
  EXPECT_EQ(studentized_range_cdf(-1.0, 3, 10), 0.0);
  double prev = 0.0;
  for (double q = 0.1; q <= 10.0; q += 0.3) {
    const double v = studentized_range_cdf(q, 4, 12);
    EXPECT_GE(v, prev);
    EXPECT_LE(v, 1.0);
    prev = v;
  }
  EXPECT_GT(prev, 0.999);
}

TEST(StudentizedRange, RejectsBadArguments) {
  EXPECT_THROW(studentized_range_cdf(1.0, 1, 10), std::invalid_argument);
  EXPECT_THROW(studentized_range_cdf(1.0, 3, 0.5), std::invalid_argument);
  EXPECT_THROW(normal_range_cdf(1.0, 1), std::invalid_argument);
}

// Spot-check the analytic CDF against brute-force Monte Carlo; the acceptance
// suite repeats this at 1e7 draws on the critical values.
TEST(StudentizedRange, MatchesMonteCarloOracle) {
  EXPECT_NEAR(studentized_range_cdf(3.0, 4, 15),
              oracles::studentized_range_cdf_mc(3.0, 4, 15, 400000, 2024), 0.005);
  EXPECT_NEAR(studentized_range_cdf(2.0, 3, kInf),
              oracles::studentized_range_cdf_mc(2.0, 3, kInf, 400000, 2025), 0.005);
}
