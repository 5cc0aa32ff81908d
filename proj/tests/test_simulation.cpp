#include "mcptest/simulation.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "oracles.hpp"

using namespace mcptest;

namespace {

RegressorBank toy_bank(std::size_t count, std::size_t rank_size) {
  RegressorBank bank;
  bank.run_tag = "toy";
  bank.rank_size = rank_size;
  RngStream init(99, StreamDomain::seed_derivation, 7);
  for (std::size_t i = 0; i < count; ++i) {
    bank.topics.push_back(std::to_string(i + 1));
    bank.regressors.push_back({0.5 + init.next_double(), -0.05 + 0.045 * init.next_double()});
  }
  return bank;
}

std::size_t bank_index(const RegressorBank& bank, const std::string& topic) {
  const auto it = std::find(bank.topics.begin(), bank.topics.end(), topic);
  EXPECT_NE(it, bank.topics.end());
  return static_cast<std::size_t>(it - bank.topics.begin());
}

// AP with the retrieved-relevant denominator, matching the default MetricSpec
// for rankings shorter than the depth cutoff.
double ap_retrieved(const BinaryRanking& r) {
  std::size_t total = 0;
  for (auto v : r) total += v;
  return average_precision(r, total);
}

}  // namespace

TEST(BankCsv, RoundTripsExactly) {
  const auto bank = toy_bank(5, 300);
  std::ostringstream out;
  write_bank_csv(bank, out);
  std::istringstream in(out.str());
  const auto again = read_bank_csv(in);
  EXPECT_EQ(again.run_tag, bank.run_tag);
  EXPECT_EQ(again.rank_size, bank.rank_size);
  EXPECT_EQ(again.topics, bank.topics);
  ASSERT_EQ(again.regressors.size(), bank.regressors.size());
  for (std::size_t i = 0; i < bank.size(); ++i) EXPECT_EQ(again.regressors[i], bank.regressors[i]);
}

TEST(BankCsv, RejectsMalformedInput) {
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return read_bank_csv(in);
  };
  EXPECT_THROW(parse(""), ParseError);
  EXPECT_THROW(parse("run=x rank_size=5\ntopic,theta0,theta1\n"), ParseError);
  EXPECT_THROW(parse("# run=x rank_size=abc\ntopic,theta0,theta1\n"), ParseError);
  EXPECT_THROW(parse("# run=x rank_size=5\n"), ParseError);
  EXPECT_THROW(parse("# run=x rank_size=5\ntopic,t0,t1\n"), ParseError);
  EXPECT_THROW(parse("# run=x rank_size=5\ntopic,theta0,theta1\n1,0.5\n"), ParseError);
  EXPECT_THROW(parse("# run=x rank_size=5\ntopic,theta0,theta1\n1,0.5,oops\n"), ParseError);
  EXPECT_THROW(parse("# run=x rank_size=5\ntopic,theta0,theta1\n1,0.5,-0.1\n1,0.4,-0.2\n"),
               ParseError);
  // No data rows at all: fails bank validation rather than parsing.
  EXPECT_THROW(parse("# run=x rank_size=5\ntopic,theta0,theta1\n"), std::invalid_argument);
}

TEST(BankCsv, RejectsUnserializableTag) {
  auto bank = toy_bank(2, 100);
  bank.run_tag = "has space";
  std::ostringstream out;
  EXPECT_THROW(write_bank_csv(bank, out), std::invalid_argument);
}

TEST(FitBank, FitsEachTopicOverPaddedRankings) {
  std::istringstream run_in(
      "1 Q0 a 1 3.0 sys\n"
      "1 Q0 b 2 2.0 sys\n"
      "1 Q0 c 3 1.0 sys\n"
      "2 Q0 a 1 3.0 sys\n"
      "2 Q0 b 2 2.0 sys\n");
  std::istringstream qrels_in(
      "1 0 a 1\n"
      "1 0 c 1\n"
      "2 0 b 1\n");
  const auto run = parse_run(run_in);
  const auto qrels = parse_qrels(qrels_in);
  const auto bank = fit_bank(run, qrels, 12);
  EXPECT_EQ(bank.run_tag, "sys");
  EXPECT_EQ(bank.rank_size, 12u);
  EXPECT_EQ(bank.topics, (std::vector<std::string>{"1", "2"}));

  BinaryRanking r1 = {1, 0, 1};
  r1.resize(12, 0);
  EXPECT_EQ(bank.regressors[0], fit_regressor(r1));
  BinaryRanking r2 = {0, 1};
  r2.resize(12, 0);
  EXPECT_EQ(bank.regressors[1], fit_regressor(r2));
  EXPECT_THROW(fit_bank(run, qrels, 1), std::invalid_argument);
}

TEST(SampleRanking, DeterministicWithPrefixStability) {
  const TopicRegressor reg{0.8, -0.01};
  RngStream a(11, StreamDomain::ranking_sample, 2, 5, 1);
  RngStream b(11, StreamDomain::ranking_sample, 2, 5, 1);
  const auto r1 = sample_ranking(reg, 100, a);
  const auto r2 = sample_ranking(reg, 100, b);
  EXPECT_EQ(r1, r2);
  // Position p always consumes stream slot p-1, so a longer draw from the
  // same stream extends the shorter one.
  RngStream c(11, StreamDomain::ranking_sample, 2, 5, 1);
  const auto longer = sample_ranking(reg, 250, c);
  EXPECT_TRUE(std::equal(r1.begin(), r1.end(), longer.begin()));

  RngStream other(11, StreamDomain::ranking_sample, 2, 5, 2);
  EXPECT_NE(sample_ranking(reg, 100, other), r1);
  RngStream zero(11, StreamDomain::ranking_sample, 2, 5, 1);
  EXPECT_THROW(sample_ranking(reg, 0, zero), std::invalid_argument);
}

TEST(SampleRanking, MatchesRelevanceProbabilities) {
  RngStream stream(7, StreamDomain::ranking_sample, 0, 0, 0);
  const auto flat = sample_ranking({0.0, 0.0}, 100000, stream);
  std::size_t ones = 0;
  for (auto v : flat) ones += v;
  EXPECT_NEAR(static_cast<double>(ones) / 100000.0, 0.5, 0.005);

  RngStream s2(7, StreamDomain::ranking_sample, 1, 0, 0);
  const auto never = sample_ranking({-50.0, 0.0}, 1000, s2);
  EXPECT_EQ(std::count(never.begin(), never.end(), 1), 0);
}

TEST(SimulateNull, DeterministicPerRepAndSeed) {
  const auto bank = toy_bank(20, 150);
  SimConfig cfg;
  cfg.systems = 3;
  cfg.topics = 8;
  cfg.rank_size = 150;
  const auto a = simulate_null_family(bank, cfg, 4, 17);
  const auto b = simulate_null_family(bank, cfg, 4, 17);
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(a.topics, b.topics);
  EXPECT_NE(simulate_null_family(bank, cfg, 5, 17).values, a.values);
  EXPECT_NE(simulate_null_family(bank, cfg, 4, 18).values, a.values);
}

TEST(SimulateNull, ShapeAndTopicSampling) {
  const auto bank = toy_bank(20, 150);
  SimConfig cfg;
  cfg.systems = 4;
  cfg.topics = 9;
  cfg.rank_size = 150;
  const auto matrix = simulate_null_family(bank, cfg, 0, 3);
  EXPECT_EQ(matrix.systems, (std::vector<std::string>{"s1", "s2", "s3", "s4"}));
  ASSERT_EQ(matrix.n(), 9u);
  std::set<std::string> distinct(matrix.topics.begin(), matrix.topics.end());
  EXPECT_EQ(distinct.size(), matrix.n());
  for (const auto& topic : matrix.topics)
    EXPECT_NE(std::find(bank.topics.begin(), bank.topics.end(), topic), bank.topics.end());
  // Using every bank topic at once is allowed.
  cfg.topics = bank.size();
  EXPECT_NO_THROW(simulate_null_family(bank, cfg, 0, 3));
  cfg.topics = bank.size() + 1;
  EXPECT_THROW(simulate_null_family(bank, cfg, 0, 3), std::invalid_argument);
}

TEST(SimulateAlt, ValidatesProps) {
  const auto bank = toy_bank(10, 100);
  SimConfig cfg;
  cfg.systems = 3;
  cfg.topics = 5;
  cfg.rank_size = 100;
  cfg.props = {0.1};  // needs systems-1 = 2
  EXPECT_THROW(simulate_alt_family(bank, cfg, 0, 1), std::invalid_argument);
  cfg.props = {0.1, 0.1};  // not strictly increasing
  EXPECT_THROW(simulate_alt_family(bank, cfg, 0, 1), std::invalid_argument);
  cfg.props = {-0.1, 0.2};
  EXPECT_THROW(simulate_alt_family(bank, cfg, 0, 1), std::invalid_argument);
  cfg.props = {0.1, 0.2};
  EXPECT_NO_THROW(simulate_alt_family(bank, cfg, 0, 1));
}

TEST(SimulateAlt, BaselineColumnMatchesNullScenario) {
  const auto bank = toy_bank(20, 150);
  SimConfig cfg;
  cfg.systems = 3;
  cfg.topics = 8;
  cfg.rank_size = 150;
  const auto null_matrix = simulate_null_family(bank, cfg, 2, 17);
  cfg.props = {0.1, 0.2};
  const auto alt_matrix = simulate_alt_family(bank, cfg, 2, 17);
  EXPECT_EQ(alt_matrix.topics, null_matrix.topics);
  // System 1 draws from unmodified regressors on identical streams.
  EXPECT_EQ(alt_matrix.column(0), null_matrix.column(0));
  // The perturbed columns see different relevance probabilities.
  EXPECT_NE(alt_matrix.column(1), null_matrix.column(1));
}

TEST(SimulateAlt, PerturbedColumnsResampleFromShiftedRegressors) {
  const auto bank = toy_bank(15, 120);
  SimConfig cfg;
  cfg.systems = 2;
  cfg.topics = 6;
  cfg.rank_size = 120;
  cfg.props = {0.3};
  const std::uint64_t seed = 23, rep = 5;
  const auto matrix = simulate_alt_family(bank, cfg, rep, seed);
  for (std::size_t t = 0; t < matrix.n(); ++t) {
    const std::size_t bi = bank_index(bank, matrix.topics[t]);
    const auto shifted = perturb(bank.regressors[bi], 0.3);
    RngStream stream(seed, StreamDomain::ranking_sample, rep, bi, 1);
    const auto r = sample_ranking(shifted, cfg.rank_size, stream);
    EXPECT_DOUBLE_EQ(matrix.at(t, 1), ap_retrieved(r));
  }
}

// Under scenario 1 both pseudo-systems draw from the same per-topic model, so
// their pooled score distributions agree. Kolmogorov-Smirnov on 2000 scores
// per side stays far below the 1e-3 critical value.
TEST(SimulateNull, ColumnsShareDistribution) {
  const auto bank = toy_bank(30, 200);
  SimConfig cfg;
  cfg.systems = 2;
  cfg.topics = 10;
  cfg.rank_size = 200;
  std::vector<double> first, second;
  for (std::uint64_t rep = 0; rep < 200; ++rep) {
    const auto matrix = simulate_null_family(bank, cfg, rep, 31);
    const auto c0 = matrix.column(0), c1 = matrix.column(1);
    first.insert(first.end(), c0.begin(), c0.end());
    second.insert(second.end(), c1.begin(), c1.end());
  }
  const double d = oracles::ks_statistic(first, second);
  const double critical = 1.949 * std::sqrt(2.0 / 2000.0);  // alpha = 1e-3
  EXPECT_LT(d, critical);
}

// Under scenario 2 the perturbed system should outscore the baseline on
// average in nearly every repetition.
TEST(SimulateAlt, PerturbationRaisesMeanScores) {
  const auto bank = toy_bank(60, 200);
  SimConfig cfg;
  cfg.systems = 2;
  cfg.topics = 50;
  cfg.rank_size = 200;
  cfg.props = {0.3};
  std::size_t improved = 0;
  const std::size_t reps = 300;
  for (std::uint64_t rep = 0; rep < reps; ++rep) {
    const auto matrix = simulate_alt_family(bank, cfg, rep, 37);
    if (matrix.column_mean(1) > matrix.column_mean(0)) ++improved;
  }
  EXPECT_GE(improved, static_cast<std::size_t>(0.95 * reps));
}
