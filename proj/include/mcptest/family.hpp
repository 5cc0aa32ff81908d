#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace mcptest {

// Unordered system pair, stored with i < j.
struct PairIndex {
  std::size_t i;
  std::size_t j;

  friend bool operator==(const PairIndex&, const PairIndex&) = default;
};

inline std::size_t pairwise_count(std::size_t m) {
  if (m < 2) throw std::invalid_argument("pairwise_count: need at least 2 systems");
  return m * (m - 1) / 2;
}

// All unordered pairs of 0..m-1 in lexicographic order.
inline std::vector<PairIndex> all_pairs(std::size_t m) {
  std::vector<PairIndex> pairs;
  pairs.reserve(pairwise_count(m));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) pairs.push_back({i, j});
  return pairs;
}

// The k = m(m-1)/2 pairwise null hypotheses with their raw p-values.
struct HypothesisFamily {
  std::vector<std::string> systems;
  std::vector<PairIndex> pairs;
  std::vector<double> raw_p;
  std::string test_name;

  std::size_t size() const { return pairs.size(); }
};

// Symmetric m x m table of p-values; the diagonal is not meaningful.
struct PValueMatrix {
  std::size_t m = 0;
  std::vector<double> values;  // row-major m*m
  bool degenerate = false;

  explicit PValueMatrix(std::size_t systems = 0)
      : m(systems), values(systems * systems, 1.0) {}

  double at(std::size_t i, std::size_t j) const { return values[i * m + j]; }

  void set(std::size_t i, std::size_t j, double p) {
    values[i * m + j] = p;
    values[j * m + i] = p;
  }
};

inline HypothesisFamily to_family(const PValueMatrix& matrix,
                                  const std::vector<std::string>& systems,
                                  std::string test_name) {
  HypothesisFamily family;
  family.systems = systems;
  family.pairs = all_pairs(matrix.m);
  family.raw_p.reserve(family.pairs.size());
  for (const auto& pair : family.pairs) family.raw_p.push_back(matrix.at(pair.i, pair.j));
  family.test_name = std::move(test_name);
  return family;
}

}  // namespace mcptest
