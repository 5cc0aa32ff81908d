#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcptest/distributions.hpp"
#include "mcptest/family.hpp"
#include "mcptest/parallel.hpp"
#include "mcptest/rng.hpp"
#include "mcptest/score_matrix.hpp"

namespace mcptest {

// `degenerate` marks inputs where the statistic is undefined (zero variance)
// and the p-value is a convention rather than a computation.
struct PairedTestResult {
  double p = 1.0;
  bool degenerate = false;
};

// Two-sided paired t-test on per-topic score differences.
inline PairedTestResult paired_t_test(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("paired_t_test: length mismatch");
  const std::size_t n = x.size();
  if (n < 2) throw std::invalid_argument("paired_t_test: need at least 2 observations");
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += x[i] - y[i];
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double c = (x[i] - y[i]) - mean;
    ss += c * c;
  }
  if (ss <= 0.0) {
    // All differences identical: no within-pair variance to test against.
    return {mean == 0.0 ? 1.0 : 0.0, true};
  }
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  const double t = mean / (sd / std::sqrt(static_cast<double>(n)));
  const double p = 2.0 * (1.0 - t_cdf(std::fabs(t), static_cast<double>(n - 1)));
  return {std::clamp(p, 0.0, 1.0), false};
}

enum class WilcoxonMode { exact, approx, auto_ };

struct WilcoxonResult {
  double p = 1.0;
  double w = 0.0;           // min(W+, W-) over nonzero differences
  std::size_t n_nonzero = 0;
  bool exact = false;
  bool degenerate = false;
};

namespace detail {

// Signed ranks in doubled units so midranks stay integral. Returns the
// doubled ranks of |d| and fills w2_plus with the doubled positive-rank sum.
inline std::vector<std::uint64_t> doubled_ranks(const std::vector<double>& d,
                                                std::uint64_t& w2_plus,
                                                double& tie_correction) {
  const std::size_t n = d.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return std::fabs(d[a]) < std::fabs(d[b]); });
  std::vector<std::uint64_t> r2(n);
  tie_correction = 0.0;
  w2_plus = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && std::fabs(d[order[j]]) == std::fabs(d[order[i]])) ++j;
    // Ranks i+1..j share the midrank; doubled midrank = (i+1) + j.
    const std::uint64_t mid2 = static_cast<std::uint64_t>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      r2[order[k]] = mid2;
      if (d[order[k]] > 0.0) w2_plus += mid2;
    }
    const double t = static_cast<double>(j - i);
    tie_correction += t * t * t - t;
    i = j;
  }
  return r2;
}

// Exact null distribution of the doubled positive-rank sum by subset-sum
// counting. Feasible up to n = 60 (counts bounded by 2^n).
inline double wilcoxon_exact_p(const std::vector<std::uint64_t>& r2, std::uint64_t w2) {
  const std::size_t n = r2.size();
  std::uint64_t s2 = 0;
  for (auto r : r2) s2 += r;
  std::vector<std::uint64_t> count(s2 + 1, 0);
  count[0] = 1;
  std::uint64_t reach = 0;
  for (auto r : r2) {
    reach += r;
    for (std::uint64_t s = reach; s >= r; --s) count[s] += count[s - r];
  }
  // min(W+, W-) <= w  <=>  W+ <= w or W+ >= S - w.
  std::uint64_t hits = 0;
  const std::uint64_t upper = s2 - w2;
  for (std::uint64_t s = 0; s <= s2; ++s)
    if (s <= w2 || s >= upper) hits += count[s];
  return std::ldexp(static_cast<double>(hits), -static_cast<int>(n));
}

}  // namespace detail

// Two-sided Wilcoxon signed-rank test. Zero differences are dropped; ties get
// midranks. Exact enumeration when requested or (in auto mode) when at most
// 25 nonzero differences remain, otherwise a normal approximation with tie
// correction and continuity correction.
inline WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& x,
                                           const std::vector<double>& y,
                                           WilcoxonMode mode = WilcoxonMode::auto_) {
  if (x.size() != y.size()) throw std::invalid_argument("wilcoxon_signed_rank: length mismatch");
  if (x.size() < 2)
    throw std::invalid_argument("wilcoxon_signed_rank: need at least 2 observations");
  std::vector<double> d;
  d.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] != y[i]) d.push_back(x[i] - y[i]);
  WilcoxonResult result;
  result.n_nonzero = d.size();
  if (d.empty()) {
    result.degenerate = true;
    return result;
  }
  std::uint64_t w2_plus = 0;
  double tie_correction = 0.0;
  const auto r2 = detail::doubled_ranks(d, w2_plus, tie_correction);
  std::uint64_t s2 = 0;
  for (auto r : r2) s2 += r;
  const std::uint64_t w2 = std::min(w2_plus, s2 - w2_plus);
  result.w = static_cast<double>(w2) / 2.0;

  const std::size_t n = d.size();
  bool exact = mode == WilcoxonMode::exact || (mode == WilcoxonMode::auto_ && n <= 25);
  if (exact && n > 60)
    throw std::invalid_argument("wilcoxon_signed_rank: exact mode limited to 60 nonzero pairs");
  if (exact) {
    result.exact = true;
    result.p = detail::wilcoxon_exact_p(r2, w2);
    return result;
  }
  const double nn = static_cast<double>(n);
  const double mu = nn * (nn + 1.0) / 4.0;
  const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_correction / 48.0;
  if (var <= 0.0) {
    result.degenerate = true;
    result.p = 1.0;
    return result;
  }
  const double z = (result.w - mu + 0.5) / std::sqrt(var);
  result.p = std::clamp(2.0 * normal_cdf(z), 0.0, 1.0);
  return result;
}

// Two-way ANOVA without replication (topics x systems) followed by Tukey HSD
// on the system means.
struct AnovaTukeyResult {
  PValueMatrix pvalues;
  double ms_error = 0.0;
  std::size_t df = 0;
};

inline AnovaTukeyResult anova_tukey_hsd(const ScoreMatrix& matrix) {
  validate(matrix);
  const std::size_t n = matrix.n();
  const std::size_t m = matrix.m();
  if (n < 2 || m < 2)
    throw std::invalid_argument("anova_tukey_hsd: need at least 2 topics and 2 systems");

  double grand = 0.0;
  for (double v : matrix.values) grand += v;
  grand /= static_cast<double>(n * m);
  std::vector<double> system_mean(m, 0.0);
  std::vector<double> topic_mean(n, 0.0);
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t s = 0; s < m; ++s) {
      system_mean[s] += matrix.at(t, s);
      topic_mean[t] += matrix.at(t, s);
    }
  for (auto& v : system_mean) v /= static_cast<double>(n);
  for (auto& v : topic_mean) v /= static_cast<double>(m);

  double ss_error = 0.0;
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t s = 0; s < m; ++s) {
      const double resid = matrix.at(t, s) - system_mean[s] - topic_mean[t] + grand;
      ss_error += resid * resid;
    }
  AnovaTukeyResult result;
  result.pvalues = PValueMatrix(m);
  result.df = (n - 1) * (m - 1);
  result.ms_error = ss_error / static_cast<double>(result.df);

  if (result.ms_error <= 0.0) {
    // Scores are exactly additive in topic and system effects; the HSD
    // statistic divides by zero. Report certainty either way.
    result.pvalues.degenerate = true;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i + 1; j < m; ++j)
        result.pvalues.set(i, j, system_mean[i] == system_mean[j] ? 1.0 : 0.0);
    return result;
  }
  const double scale = std::sqrt(result.ms_error / static_cast<double>(n));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) {
      const double q = std::fabs(system_mean[i] - system_mean[j]) / scale;
      const double p =
          1.0 - studentized_range_cdf(q, static_cast<int>(m), static_cast<double>(result.df));
      result.pvalues.set(i, j, std::clamp(p, 0.0, 1.0));
    }
  return result;
}

struct RandomizedTukeyOptions {
  std::uint64_t permutations = 100000;
  std::uint64_t seed = 0;
  bool smoothed = false;  // (count + 1) / (B + 1) instead of count / B
  unsigned threads = 1;
  // Stable per-topic stream keys. Defaults to row position; supplying keys
  // makes the draw for a topic independent of where its row sits.
  std::optional<std::vector<std::uint64_t>> row_keys;
};

// Permutation-based Tukey HSD: each iteration independently shuffles every
// topic row, takes the range of the column means as the largest difference
// any pair could show under the null, and counts how often it strictly
// exceeds the observed pairwise difference. Controls FWER without a
// normality assumption.
inline PValueMatrix randomized_tukey_hsd(const ScoreMatrix& matrix,
                                         const RandomizedTukeyOptions& options) {
  validate(matrix);
  const std::size_t n = matrix.n();
  const std::size_t m = matrix.m();
  if (m < 2) throw std::invalid_argument("randomized_tukey_hsd: need at least 2 systems");
  if (options.permutations == 0)
    throw std::invalid_argument("randomized_tukey_hsd: need at least 1 permutation");
  if (options.row_keys && options.row_keys->size() != n)
    throw std::invalid_argument("randomized_tukey_hsd: row_keys size mismatch");

  const auto pairs = all_pairs(m);
  std::vector<double> observed(pairs.size());
  for (std::size_t k = 0; k < pairs.size(); ++k)
    observed[k] = std::fabs(matrix.column_mean(pairs[k].i) - matrix.column_mean(pairs[k].j));

  std::vector<std::uint64_t> counts(pairs.size(), 0);
  std::mutex merge_mutex;
  parallel_for(options.permutations, options.threads, [&](std::size_t begin, std::size_t end) {
    std::vector<std::uint64_t> local(pairs.size(), 0);
    std::vector<double> row(m);
    std::vector<double> col_sum(m);
    for (std::size_t b = begin; b < end; ++b) {
      std::fill(col_sum.begin(), col_sum.end(), 0.0);
      for (std::size_t t = 0; t < n; ++t) {
        for (std::size_t s = 0; s < m; ++s) row[s] = matrix.at(t, s);
        const std::uint64_t key = options.row_keys ? (*options.row_keys)[t] : t;
        RngStream stream(options.seed, StreamDomain::tukey_permutation, b, key);
        for (std::size_t i = m - 1; i > 0; --i) {
          const std::uint64_t j = stream.bounded(i + 1);
          std::swap(row[i], row[j]);
        }
        for (std::size_t s = 0; s < m; ++s) col_sum[s] += row[s];
      }
      const auto [lo, hi] = std::minmax_element(col_sum.begin(), col_sum.end());
      const double d = (*hi - *lo) / static_cast<double>(n);
      for (std::size_t k = 0; k < pairs.size(); ++k)
        if (d > observed[k]) ++local[k];
    }
    std::lock_guard<std::mutex> lock(merge_mutex);
    for (std::size_t k = 0; k < pairs.size(); ++k) counts[k] += local[k];
  });

  PValueMatrix pvalues(m);
  const double denom = static_cast<double>(options.permutations) + (options.smoothed ? 1.0 : 0.0);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const double hits = static_cast<double>(counts[k]) + (options.smoothed ? 1.0 : 0.0);
    pvalues.set(pairs[k].i, pairs[k].j, hits / denom);
  }
  return pvalues;
}

enum class PairedTest { t, wilcoxon };

inline std::string to_string(PairedTest test) {
  return test == PairedTest::t ? "t" : "wilcoxon";
}

// Raw p-values for every system pair from one paired test.
inline HypothesisFamily pairwise_family(const ScoreMatrix& matrix, PairedTest test,
                                        WilcoxonMode mode = WilcoxonMode::auto_) {
  validate(matrix);
  const std::size_t m = matrix.m();
  if (m < 2) throw std::invalid_argument("pairwise_family: need at least 2 systems");
  HypothesisFamily family;
  family.systems = matrix.systems;
  family.pairs = all_pairs(m);
  family.test_name = to_string(test);
  family.raw_p.reserve(family.pairs.size());
  std::vector<std::vector<double>> columns(m);
  for (std::size_t s = 0; s < m; ++s) columns[s] = matrix.column(s);
  for (const auto& pair : family.pairs) {
    double p;
    if (test == PairedTest::t)
      p = paired_t_test(columns[pair.i], columns[pair.j]).p;
    else
      p = wilcoxon_signed_rank(columns[pair.i], columns[pair.j], mode).p;
    family.raw_p.push_back(p);
  }
  return family;
}

}  // namespace mcptest
