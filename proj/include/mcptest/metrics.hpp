#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcptest/score_matrix.hpp"
#include "mcptest/trec.hpp"

namespace mcptest {

enum class MetricKind { average_precision, ndcg };

// Denominator for AP and the ideal gain pool for NDCG: either the relevant
// documents actually retrieved, or all relevant documents in the qrels.
enum class DenominatorPolicy { retrieved_relevant, qrels_relevant };

struct MetricSpec {
  MetricKind kind = MetricKind::average_precision;
  std::size_t depth = 1000;
  DenominatorPolicy denominator = DenominatorPolicy::retrieved_relevant;
};

inline std::string to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::average_precision: return "ap";
    case MetricKind::ndcg: return "ndcg";
  }
  throw std::invalid_argument("unknown metric kind");
}

inline MetricKind metric_kind_from_string(const std::string& name) {
  if (name == "ap") return MetricKind::average_precision;
  if (name == "ndcg") return MetricKind::ndcg;
  throw std::invalid_argument("unknown metric `" + name + "` (expected ap or ndcg)");
}

namespace detail {

inline std::size_t retrieved_relevant(const BinaryRanking& r) {
  std::size_t count = 0;
  for (auto v : r) count += v;
  return count;
}

}  // namespace detail

// Mean of precision at each relevant rank. `total_relevant` is the
// denominator; it must be at least the number of relevant documents in `r`,
// otherwise the score could exceed 1. A topic with no relevant documents
// scores 0.
inline double average_precision(const BinaryRanking& r, std::size_t total_relevant) {
  std::size_t retrieved = detail::retrieved_relevant(r);
  if (total_relevant < retrieved)
    throw std::invalid_argument("average_precision: total_relevant " +
                                std::to_string(total_relevant) + " < retrieved relevant " +
                                std::to_string(retrieved));
  if (total_relevant == 0) return 0.0;
  double sum = 0.0;
  std::size_t seen = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!r[i]) continue;
    ++seen;
    sum += static_cast<double>(seen) / static_cast<double>(i + 1);
  }
  return sum / static_cast<double>(total_relevant);
}

// Binary-gain NDCG with 1/log2(rank+1) discounts. The ideal ranking places
// min(total_relevant, depth) relevant documents first.
inline double ndcg(const BinaryRanking& r, std::size_t total_relevant, std::size_t depth) {
  std::size_t retrieved = detail::retrieved_relevant(r);
  if (total_relevant < retrieved)
    throw std::invalid_argument("ndcg: total_relevant " + std::to_string(total_relevant) +
                                " < retrieved relevant " + std::to_string(retrieved));
  if (total_relevant == 0) return 0.0;
  auto discount = [](std::size_t rank) {
    return 1.0 / std::log2(static_cast<double>(rank) + 1.0);
  };
  double dcg = 0.0;
  std::size_t len = std::min(r.size(), depth);
  for (std::size_t i = 0; i < len; ++i)
    if (r[i]) dcg += discount(i + 1);
  double ideal = 0.0;
  std::size_t ideal_len = std::min(total_relevant, depth);
  for (std::size_t i = 0; i < ideal_len; ++i) ideal += discount(i + 1);
  return dcg / ideal;
}

inline double evaluate_topic(const RunSet& run, const std::string& topic, const Qrels& qrels,
                             const MetricSpec& spec) {
  BinaryRanking r = relevance_vector(run, topic, qrels, spec.depth);
  std::size_t total = spec.denominator == DenominatorPolicy::qrels_relevant
                          ? qrels.relevant_count(topic)
                          : detail::retrieved_relevant(r);
  switch (spec.kind) {
    case MetricKind::average_precision: return average_precision(r, total);
    case MetricKind::ndcg: return ndcg(r, total, spec.depth);
  }
  throw std::invalid_argument("unknown metric kind");
}

// Scores every run on every topic. All runs must cover the same topic set and
// every topic must appear in the qrels. Columns follow run order, rows follow
// natural topic order.
inline ScoreMatrix build_score_matrix(const std::vector<RunSet>& runs, const Qrels& qrels,
                                      const MetricSpec& spec) {
  if (runs.empty()) throw std::invalid_argument("build_score_matrix: no runs");
  std::vector<std::string> topics;
  for (const auto& [topic, entries] : runs[0].rankings) topics.push_back(topic);
  for (std::size_t i = 1; i < runs.size(); ++i) {
    std::vector<std::string> other;
    for (const auto& [topic, entries] : runs[i].rankings) other.push_back(topic);
    if (other != topics)
      throw std::invalid_argument("build_score_matrix: run `" + runs[i].system_tag +
                                  "` covers a different topic set than `" + runs[0].system_tag +
                                  "`");
  }
  std::string missing;
  for (const auto& topic : topics)
    if (!qrels.has_topic(topic)) missing += missing.empty() ? topic : ", " + topic;
  if (!missing.empty())
    throw std::invalid_argument("build_score_matrix: topics missing from qrels: " + missing);

  ScoreMatrix matrix;
  matrix.topics = topics;
  for (const auto& run : runs) matrix.systems.push_back(run.system_tag);
  matrix.values.resize(matrix.n() * matrix.m());
  for (std::size_t t = 0; t < matrix.n(); ++t)
    for (std::size_t s = 0; s < matrix.m(); ++s)
      matrix.at(t, s) = evaluate_topic(runs[s], matrix.topics[t], qrels, spec);
  return matrix;
}

}  // namespace mcptest
