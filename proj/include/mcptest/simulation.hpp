#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcptest/metrics.hpp"
#include "mcptest/regressor.hpp"
#include "mcptest/rng.hpp"
#include "mcptest/score_matrix.hpp"
#include "mcptest/trec.hpp"
#include "mcptest/util.hpp"

namespace mcptest {

// One fitted regressor per topic of a source run, plus the ranking length
// they were fitted at.
struct RegressorBank {
  std::string run_tag;
  std::size_t rank_size = 0;
  std::vector<std::string> topics;
  std::vector<TopicRegressor> regressors;

  std::size_t size() const { return topics.size(); }
};

inline void validate(const RegressorBank& bank) {
  if (bank.topics.empty()) throw std::invalid_argument("regressor bank: no topics");
  if (bank.topics.size() != bank.regressors.size())
    throw std::invalid_argument("regressor bank: topic/regressor count mismatch");
  if (bank.rank_size < 1) throw std::invalid_argument("regressor bank: rank_size must be >= 1");
  if (bank.run_tag.empty()) throw std::invalid_argument("regressor bank: empty run tag");
}

// Fits one regressor per topic from the run's binary relevance vectors,
// padded with zeros to rank_size so every topic is modeled over the same
// position range.
inline RegressorBank fit_bank(const RunSet& run, const Qrels& qrels, std::size_t rank_size,
                              const FitOptions& options = {}) {
  if (rank_size < 2) throw std::invalid_argument("fit_bank: rank_size must be >= 2");
  RegressorBank bank;
  bank.run_tag = run.system_tag;
  bank.rank_size = rank_size;
  for (const auto& [topic, entries] : run.rankings) {
    BinaryRanking r = relevance_vector(run, topic, qrels, rank_size);
    r.resize(rank_size, 0);
    bank.topics.push_back(topic);
    bank.regressors.push_back(fit_regressor(r, options));
  }
  return bank;
}

// `# run=TAG rank_size=N`, then `topic,theta0,theta1` rows.
inline void write_bank_csv(const RegressorBank& bank, std::ostream& out) {
  validate(bank);
  if (bank.run_tag.find_first_of(", \n") != std::string::npos)
    throw std::invalid_argument("regressor bank: run tag contains ',', ' ' or newline");
  out << "# run=" << bank.run_tag << " rank_size=" << bank.rank_size << '\n';
  out << "topic,theta0,theta1\n";
  for (std::size_t i = 0; i < bank.size(); ++i)
    out << bank.topics[i] << ',' << format_double(bank.regressors[i].theta0) << ','
        << format_double(bank.regressors[i].theta1) << '\n';
}

inline RegressorBank read_bank_csv(std::istream& in) {
  RegressorBank bank;
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError("regressor bank: empty input");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto meta = split_whitespace(line);
  if (meta.size() != 3 || meta[0] != "#" || !meta[1].starts_with("run=") ||
      !meta[2].starts_with("rank_size="))
    throw ParseError("regressor bank: expected `# run=TAG rank_size=N`", line_no);
  bank.run_tag = std::string(meta[1].substr(4));
  long rank_size;
  if (!try_parse_long(meta[2].substr(10), rank_size) || rank_size < 1)
    throw ParseError("regressor bank: bad rank_size", line_no);
  bank.rank_size = static_cast<std::size_t>(rank_size);
  if (!std::getline(in, line)) throw ParseError("regressor bank: missing column header");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "topic,theta0,theta1")
    throw ParseError("regressor bank: expected `topic,theta0,theta1`", line_no);
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split(line, ',');
    if (cells.size() != 3) throw ParseError("regressor bank: expected 3 cells", line_no);
    std::string topic(cells[0]);
    if (!seen.insert(topic).second)
      throw ParseError("regressor bank: duplicate topic " + topic, line_no);
    TopicRegressor reg;
    if (!try_parse_double(cells[1], reg.theta0) || !try_parse_double(cells[2], reg.theta1))
      throw ParseError("regressor bank: non-numeric parameter", line_no);
    bank.topics.push_back(std::move(topic));
    bank.regressors.push_back(reg);
  }
  validate(bank);
  return bank;
}

// Independent Bernoulli(h(p)) draw per position. Draw index is position-1,
// so position p always consumes the same stream slot.
inline BinaryRanking sample_ranking(const TopicRegressor& reg, std::size_t rank_size,
                                    const RngStream& stream) {
  if (rank_size < 1) throw std::invalid_argument("sample_ranking: rank_size must be >= 1");
  BinaryRanking r(rank_size);
  for (std::size_t p = 1; p <= rank_size; ++p)
    r[p - 1] = stream.double_at(p - 1) < relevance_probability(reg, p) ? 1 : 0;
  return r;
}

struct SimConfig {
  std::size_t systems = 2;
  std::size_t topics = 50;
  std::size_t reps = 1000;
  std::vector<double> props;  // scenario 2 only, one per non-baseline system
  std::size_t rank_size = 1000;
  MetricSpec metric;
  std::uint64_t seed = 0;
};

inline void validate(const SimConfig& cfg) {
  if (cfg.systems < 2) throw std::invalid_argument("sim config: need at least 2 systems");
  if (cfg.topics < 1) throw std::invalid_argument("sim config: need at least 1 topic");
  if (cfg.reps < 1) throw std::invalid_argument("sim config: need at least 1 repetition");
  if (cfg.rank_size < 1) throw std::invalid_argument("sim config: rank_size must be >= 1");
}

namespace detail {

// Uniform n-subset of 0..bank_size-1 without replacement, in draw order.
inline std::vector<std::size_t> choose_topics(std::size_t bank_size, std::size_t n,
                                              std::uint64_t seed, std::uint64_t rep) {
  RngStream stream(seed, StreamDomain::topic_choice, rep);
  std::vector<std::size_t> indices(bank_size);
  std::iota(indices.begin(), indices.end(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t j = i + stream.bounded(bank_size - i);
    std::swap(indices[i], indices[j]);
  }
  indices.resize(n);
  return indices;
}

inline double score_ranking(const BinaryRanking& r, const MetricSpec& metric) {
  BinaryRanking truncated(r.begin(), r.begin() + std::min(metric.depth, r.size()));
  std::size_t total = 0;
  if (metric.denominator == DenominatorPolicy::qrels_relevant)
    for (auto v : r) total += v;
  else
    for (auto v : truncated) total += v;
  switch (metric.kind) {
    case MetricKind::average_precision: return average_precision(truncated, total);
    case MetricKind::ndcg: return ndcg(truncated, total, metric.depth);
  }
  throw std::invalid_argument("unknown metric kind");
}

inline ScoreMatrix simulate_family(const RegressorBank& bank, const SimConfig& cfg,
                                   std::uint64_t rep, std::uint64_t master_seed,
                                   const std::vector<double>& props) {
  validate(bank);
  validate(cfg);
  if (bank.size() < cfg.topics)
    throw std::invalid_argument("simulate: bank has " + std::to_string(bank.size()) +
                                " topics, config asks for " + std::to_string(cfg.topics));
  const auto chosen = choose_topics(bank.size(), cfg.topics, master_seed, rep);
  ScoreMatrix matrix;
  matrix.systems.reserve(cfg.systems);
  for (std::size_t s = 0; s < cfg.systems; ++s) matrix.systems.push_back("s" + std::to_string(s + 1));
  matrix.topics.reserve(cfg.topics);
  for (auto bi : chosen) matrix.topics.push_back(bank.topics[bi]);
  matrix.values.resize(cfg.topics * cfg.systems);
  for (std::size_t t = 0; t < cfg.topics; ++t) {
    const std::size_t bi = chosen[t];
    for (std::size_t s = 0; s < cfg.systems; ++s) {
      TopicRegressor reg = bank.regressors[bi];
      if (s > 0 && !props.empty()) reg = perturb(reg, props[s - 1]);
      RngStream stream(master_seed, StreamDomain::ranking_sample, rep, bi, s);
      matrix.at(t, s) = score_ranking(sample_ranking(reg, cfg.rank_size, stream), cfg.metric);
    }
  }
  return matrix;
}

}  // namespace detail

// Scenario 1: every pseudo-system samples from the unmodified regressors, so
// all pairwise nulls are true.
inline ScoreMatrix simulate_null_family(const RegressorBank& bank, const SimConfig& cfg,
                                        std::uint64_t rep_index, std::uint64_t master_seed) {
  return detail::simulate_family(bank, cfg, rep_index, master_seed, {});
}

inline void validate_alt_props(const SimConfig& cfg) {
  if (cfg.props.size() != cfg.systems - 1)
    throw std::invalid_argument("sim config: need exactly " + std::to_string(cfg.systems - 1) +
                                " props, got " + std::to_string(cfg.props.size()));
  for (std::size_t i = 0; i < cfg.props.size(); ++i) {
    if (!(cfg.props[i] > 0.0))
      throw std::invalid_argument("sim config: props must be positive");
    if (i > 0 && !(cfg.props[i] > cfg.props[i - 1]))
      throw std::invalid_argument(
          "sim config: props must be strictly increasing so all systems differ");
  }
}

// Scenario 2: system 1 is unmodified, system 1+i samples from
// perturb(original, props[i]), so every pair differs in distribution.
inline ScoreMatrix simulate_alt_family(const RegressorBank& bank, const SimConfig& cfg,
                                       std::uint64_t rep_index, std::uint64_t master_seed) {
  validate_alt_props(cfg);
  return detail::simulate_family(bank, cfg, rep_index, master_seed, cfg.props);
}

}  // namespace mcptest
