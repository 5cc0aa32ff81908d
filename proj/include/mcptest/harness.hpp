#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcptest/adjust.hpp"
#include "mcptest/family.hpp"
#include "mcptest/parallel.hpp"
#include "mcptest/rng.hpp"
#include "mcptest/score_matrix.hpp"
#include "mcptest/sigtests.hpp"
#include "mcptest/simulation.hpp"
#include "mcptest/util.hpp"

namespace mcptest {

enum class TestKind { t, wilcoxon, anova_tukey, randomized_tukey };

inline std::string to_string(TestKind test) {
  switch (test) {
    case TestKind::t: return "t";
    case TestKind::wilcoxon: return "wilcoxon";
    case TestKind::anova_tukey: return "anova-tukey";
    case TestKind::randomized_tukey: return "randomized-tukey";
  }
  throw std::invalid_argument("unknown test kind");
}

inline TestKind test_kind_from_string(const std::string& name) {
  if (name == "t") return TestKind::t;
  if (name == "wilcoxon") return TestKind::wilcoxon;
  if (name == "anova-tukey") return TestKind::anova_tukey;
  if (name == "randomized-tukey") return TestKind::randomized_tukey;
  throw std::invalid_argument("unknown test `" + name +
                              "` (expected t, wilcoxon, anova-tukey or randomized-tukey)");
}

struct TestAdjustCombo {
  TestKind test = TestKind::t;
  AdjustMethod adjustment = AdjustMethod::none;
};

// The two Tukey variants already control the family-wise error across all
// pairs; stacking a p-value adjustment on top would test something else.
inline void validate_combo(const TestAdjustCombo& combo) {
  if ((combo.test == TestKind::anova_tukey || combo.test == TestKind::randomized_tukey) &&
      combo.adjustment != AdjustMethod::none)
    throw std::invalid_argument("combo: " + to_string(combo.test) +
                                " cannot be combined with adjustment " +
                                to_string(combo.adjustment));
}

enum class Scenario { null_hypotheses, alternative };

inline std::string to_string(Scenario scenario) {
  return scenario == Scenario::null_hypotheses ? "null" : "alt";
}

inline Scenario scenario_from_string(const std::string& name) {
  if (name == "null") return Scenario::null_hypotheses;
  if (name == "alt") return Scenario::alternative;
  throw std::invalid_argument("unknown scenario `" + name + "` (expected null or alt)");
}

// Probability of at least one false rejection among k independent tests run
// at level alpha.
inline double theoretical_fwer(double alpha, std::size_t k) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("theoretical_fwer: alpha in (0,1)");
  if (k < 1) throw std::invalid_argument("theoretical_fwer: k must be >= 1");
  return 1.0 - std::pow(1.0 - alpha, static_cast<double>(k));
}

inline std::size_t count_rejections(const AdjustedFamily& family) {
  const auto rejected = reject_set(family);
  std::size_t count = 0;
  for (bool r : rejected) count += r;
  return count;
}

// Fraction of repetitions that rejected at least one null.
inline double estimate_fwer(const std::vector<AdjustedFamily>& reps) {
  if (reps.empty()) throw std::invalid_argument("estimate_fwer: need at least 1 repetition");
  std::size_t hits = 0;
  for (const auto& family : reps) hits += count_rejections(family) > 0;
  return static_cast<double>(hits) / static_cast<double>(reps.size());
}

// Fraction of repetitions that rejected every null.
inline double complete_power(const std::vector<AdjustedFamily>& reps) {
  if (reps.empty()) throw std::invalid_argument("complete_power: need at least 1 repetition");
  std::size_t hits = 0;
  for (const auto& family : reps) hits += count_rejections(family) == family.base.size();
  return static_cast<double>(hits) / static_cast<double>(reps.size());
}

// Fraction of repetitions that rejected at least one null. Numerically the
// same count as estimate_fwer; the name states which hypothesis regime the
// caller is in.
inline double minimal_power(const std::vector<AdjustedFamily>& reps) {
  if (reps.empty()) throw std::invalid_argument("minimal_power: need at least 1 repetition");
  return estimate_fwer(reps);
}

enum class PairStatus { different, undecided };

// Ground truth over system pairs: `different` when the full-data mean gap
// exceeds gamma, `undecided` otherwise (a small gap is not evidence of
// equality).
struct TruthMask {
  std::vector<PairStatus> statuses;  // all_pairs order
  double gamma = 0.0;

  std::size_t different_count() const {
    std::size_t count = 0;
    for (auto s : statuses) count += s == PairStatus::different;
    return count;
  }
};

inline TruthMask ground_truth_pairs(const ScoreMatrix& full, double gamma) {
  validate(full);
  if (!(gamma >= 0.0)) throw std::invalid_argument("ground_truth_pairs: gamma must be >= 0");
  TruthMask mask;
  mask.gamma = gamma;
  std::vector<double> means(full.m());
  for (std::size_t s = 0; s < full.m(); ++s) means[s] = full.column_mean(s);
  for (const auto& pair : all_pairs(full.m()))
    mask.statuses.push_back(std::fabs(means[pair.i] - means[pair.j]) > gamma
                                ? PairStatus::different
                                : PairStatus::undecided);
  return mask;
}

// Correct rejections divided by opportunities, counted only over pairs the
// truth marks different.
inline double average_power(const std::vector<AdjustedFamily>& reps, const TruthMask& truth) {
  if (reps.empty()) throw std::invalid_argument("average_power: need at least 1 repetition");
  const std::size_t different = truth.different_count();
  if (different == 0) throw std::invalid_argument("average_power: truth marks no pair different");
  std::size_t correct = 0;
  for (const auto& family : reps) {
    if (family.base.size() != truth.statuses.size())
      throw std::invalid_argument("average_power: family/truth pair count mismatch");
    const auto rejected = reject_set(family);
    for (std::size_t k = 0; k < rejected.size(); ++k)
      correct += rejected[k] && truth.statuses[k] == PairStatus::different;
  }
  return static_cast<double>(correct) / static_cast<double>(reps.size() * different);
}

// One rate with its exact integer numerator and denominator.
struct RateEntry {
  std::string scenario;
  std::string test;
  std::string adjustment;
  std::size_t m = 0;
  std::size_t n = 0;
  std::size_t reps = 0;
  std::string metric;
  std::string rate_kind;
  std::uint64_t count = 0;
  std::uint64_t denominator = 1;

  double rate() const { return static_cast<double>(count) / static_cast<double>(denominator); }
};

struct ExperimentReport {
  std::vector<RateEntry> entries;
  double elapsed_seconds = 0.0;  // informational; never serialized
};

inline void write_report_csv(const ExperimentReport& report, std::ostream& out) {
  out << "scenario,test,adjustment,m,n,reps,metric,rate_kind,rate\n";
  for (const auto& e : report.entries)
    out << e.scenario << ',' << e.test << ',' << e.adjustment << ',' << e.m << ',' << e.n << ','
        << e.reps << ',' << e.metric << ',' << e.rate_kind << ',' << format_double(e.rate())
        << '\n';
}

inline void write_report_json(const ExperimentReport& report, std::ostream& out) {
  out << "[\n";
  for (std::size_t i = 0; i < report.entries.size(); ++i) {
    const auto& e = report.entries[i];
    out << "  {\"scenario\": \"" << e.scenario << "\", \"test\": \"" << e.test
        << "\", \"adjustment\": \"" << e.adjustment << "\", \"m\": " << e.m << ", \"n\": " << e.n
        << ", \"reps\": " << e.reps << ", \"metric\": \"" << e.metric << "\", \"rate_kind\": \""
        << e.rate_kind << "\", \"rate\": " << format_double(e.rate()) << ", \"count\": " << e.count
        << ", \"denominator\": " << e.denominator << '}' << (i + 1 < report.entries.size() ? "," : "")
        << '\n';
  }
  out << "]\n";
}

struct ScenarioOptions {
  Scenario scenario = Scenario::null_hypotheses;
  SimConfig sim;
  std::vector<TestAdjustCombo> tests;
  double alpha = 0.05;
  std::uint64_t tukey_permutations = 100000;
  unsigned threads = 1;
  std::uint64_t rep_offset = 0;  // lets a run be split into seed-compatible halves
};

namespace detail {

constexpr std::uint64_t kScenarioTukeyPurpose = 1;
constexpr std::uint64_t kSubsampleTukeyPurpose = 2;

inline HypothesisFamily run_test(const ScoreMatrix& matrix, TestKind test, std::uint64_t tukey_b,
                                 std::uint64_t tukey_seed) {
  switch (test) {
    case TestKind::t: return pairwise_family(matrix, PairedTest::t);
    case TestKind::wilcoxon: return pairwise_family(matrix, PairedTest::wilcoxon);
    case TestKind::anova_tukey:
      return to_family(anova_tukey_hsd(matrix).pvalues, matrix.systems, "anova-tukey");
    case TestKind::randomized_tukey: {
      RandomizedTukeyOptions options;
      options.permutations = tukey_b;
      options.seed = tukey_seed;
      return to_family(randomized_tukey_hsd(matrix, options), matrix.systems, "randomized-tukey");
    }
  }
  throw std::invalid_argument("unknown test kind");
}

// Per-repetition rejection summary, enough to aggregate every rate kind.
struct RepOutcome {
  std::uint32_t rejected = 0;
  std::uint8_t any = 0;
  std::uint8_t all = 0;
};

}  // namespace detail

// Repeats the configured scenario, applies every (test, adjustment) pair to
// each simulated matrix, and reports FWER (scenario 1) or the three power
// variants (scenario 2, where every pairwise null is false by construction).
// Repetitions run in parallel; outcomes land in per-repetition slots and are
// reduced in repetition order, so the report is identical for any thread
// count.
inline ExperimentReport run_scenario(const RegressorBank& bank, const ScenarioOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  validate(bank);
  validate(options.sim);
  if (options.tests.empty()) throw std::invalid_argument("run_scenario: no test combos");
  for (const auto& combo : options.tests) validate_combo(combo);
  if (!(options.alpha > 0.0 && options.alpha < 1.0))
    throw std::invalid_argument("run_scenario: alpha in (0,1)");
  if (options.scenario == Scenario::alternative) validate_alt_props(options.sim);

  const std::size_t reps = options.sim.reps;
  const std::size_t combos = options.tests.size();
  std::vector<detail::RepOutcome> outcomes(reps * combos);
  parallel_for(reps, options.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      const std::uint64_t rep = options.rep_offset + r;
      const ScoreMatrix matrix =
          options.scenario == Scenario::null_hypotheses
              ? simulate_null_family(bank, options.sim, rep, options.sim.seed)
              : simulate_alt_family(bank, options.sim, rep, options.sim.seed);
      const std::uint64_t tukey_seed =
          derive_seed(options.sim.seed, detail::kScenarioTukeyPurpose, rep);
      for (std::size_t c = 0; c < combos; ++c) {
        const auto& combo = options.tests[c];
        HypothesisFamily family =
            detail::run_test(matrix, combo.test, options.tukey_permutations, tukey_seed);
        const auto rejected =
            reject_set(adjust_family(family, combo.adjustment, options.alpha));
        detail::RepOutcome& slot = outcomes[r * combos + c];
        for (bool rej : rejected) slot.rejected += rej;
        slot.any = slot.rejected > 0;
        slot.all = slot.rejected == rejected.size();
      }
    }
  });

  ExperimentReport report;
  const std::size_t k = pairwise_count(options.sim.systems);
  for (std::size_t c = 0; c < combos; ++c) {
    std::uint64_t any = 0, all = 0, rejected = 0;
    for (std::size_t r = 0; r < reps; ++r) {
      const auto& slot = outcomes[r * combos + c];
      any += slot.any;
      all += slot.all;
      rejected += slot.rejected;
    }
    RateEntry entry;
    entry.scenario = to_string(options.scenario);
    entry.test = to_string(options.tests[c].test);
    entry.adjustment = to_string(options.tests[c].adjustment);
    entry.m = options.sim.systems;
    entry.n = options.sim.topics;
    entry.reps = reps;
    entry.metric = to_string(options.sim.metric.kind);
    if (options.scenario == Scenario::null_hypotheses) {
      entry.rate_kind = "fwer";
      entry.count = any;
      entry.denominator = reps;
      report.entries.push_back(entry);
    } else {
      entry.rate_kind = "complete_power";
      entry.count = all;
      entry.denominator = reps;
      report.entries.push_back(entry);
      entry.rate_kind = "average_power";
      entry.count = rejected;
      entry.denominator = static_cast<std::uint64_t>(reps) * k;
      report.entries.push_back(entry);
      entry.rate_kind = "minimal_power";
      entry.count = any;
      entry.denominator = reps;
      report.entries.push_back(entry);
    }
  }
  report.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

struct SubsampleOptions {
  std::vector<std::size_t> sizes;
  std::size_t iterations = 2000;
  std::vector<TestAdjustCombo> tests;
  double gamma = 0.0005;
  double alpha = 0.05;
  std::uint64_t tukey_permutations = 100000;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string metric_label = "ap";
};

// Draws topic subsets of each requested size from a full score matrix and
// measures average power against the gamma ground truth of the full matrix.
inline ExperimentReport subsample_power_experiment(const ScoreMatrix& full,
                                                   const SubsampleOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  validate(full);
  if (options.sizes.empty()) throw std::invalid_argument("subsample: no sizes");
  for (std::size_t size : options.sizes) {
    if (size < 2) throw std::invalid_argument("subsample: sizes must be >= 2");
    if (size > full.n())
      throw std::invalid_argument("subsample: size " + std::to_string(size) + " exceeds the " +
                                  std::to_string(full.n()) + " topics available");
  }
  if (options.iterations < 1) throw std::invalid_argument("subsample: need at least 1 iteration");
  if (options.tests.empty()) throw std::invalid_argument("subsample: no test combos");
  for (const auto& combo : options.tests) validate_combo(combo);
  if (!(options.alpha > 0.0 && options.alpha < 1.0))
    throw std::invalid_argument("subsample: alpha in (0,1)");

  const TruthMask truth = ground_truth_pairs(full, options.gamma);
  const std::size_t different = truth.different_count();
  if (different == 0)
    throw std::invalid_argument("subsample: ground truth marks no pair different");

  ExperimentReport report;
  const std::size_t combos = options.tests.size();
  for (std::size_t size : options.sizes) {
    std::vector<std::uint64_t> correct(options.iterations * combos, 0);
    parallel_for(options.iterations, options.threads, [&](std::size_t begin, std::size_t end) {
      for (std::size_t it = begin; it < end; ++it) {
        RngStream stream(options.seed, StreamDomain::subsample, size, it);
        std::vector<std::size_t> rows(full.n());
        std::iota(rows.begin(), rows.end(), 0);
        for (std::size_t i = 0; i < size; ++i) {
          const std::uint64_t j = i + stream.bounded(full.n() - i);
          std::swap(rows[i], rows[j]);
        }
        ScoreMatrix sub;
        sub.systems = full.systems;
        for (std::size_t i = 0; i < size; ++i) {
          sub.topics.push_back(full.topics[rows[i]]);
          for (std::size_t s = 0; s < full.m(); ++s) sub.values.push_back(full.at(rows[i], s));
        }
        const std::uint64_t tukey_seed =
            RngStream(options.seed, StreamDomain::seed_derivation,
                      detail::kSubsampleTukeyPurpose, size, it)
                .next_u64();
        for (std::size_t c = 0; c < combos; ++c) {
          const auto& combo = options.tests[c];
          HypothesisFamily family =
              detail::run_test(sub, combo.test, options.tukey_permutations, tukey_seed);
          const auto rejected =
              reject_set(adjust_family(family, combo.adjustment, options.alpha));
          std::uint64_t hits = 0;
          for (std::size_t p = 0; p < rejected.size(); ++p)
            hits += rejected[p] && truth.statuses[p] == PairStatus::different;
          correct[it * combos + c] = hits;
        }
      }
    });
    for (std::size_t c = 0; c < combos; ++c) {
      std::uint64_t total = 0;
      for (std::size_t it = 0; it < options.iterations; ++it) total += correct[it * combos + c];
      RateEntry entry;
      entry.scenario = "subsample";
      entry.test = to_string(options.tests[c].test);
      entry.adjustment = to_string(options.tests[c].adjustment);
      entry.m = full.m();
      entry.n = size;
      entry.reps = options.iterations;
      entry.metric = options.metric_label;
      entry.rate_kind = "average_power";
      entry.count = total;
      entry.denominator = static_cast<std::uint64_t>(options.iterations) * different;
      report.entries.push_back(entry);
    }
  }
  report.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace mcptest
