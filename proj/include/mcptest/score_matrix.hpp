#pragma once

#include <cmath>
#include <cstddef>
#include <istream>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "mcptest/util.hpp"

namespace mcptest {

// n topics x m systems table of effectiveness scores. Row-major, no missing
// cells, all values finite.
struct ScoreMatrix {
  std::vector<std::string> topics;
  std::vector<std::string> systems;
  std::vector<double> values;

  std::size_t n() const { return topics.size(); }
  std::size_t m() const { return systems.size(); }

  double at(std::size_t topic, std::size_t system) const {
    return values[topic * systems.size() + system];
  }
  double& at(std::size_t topic, std::size_t system) {
    return values[topic * systems.size() + system];
  }

  std::vector<double> column(std::size_t system) const {
    std::vector<double> out(topics.size());
    for (std::size_t t = 0; t < topics.size(); ++t) out[t] = at(t, system);
    return out;
  }

  double column_mean(std::size_t system) const {
    double sum = 0.0;
    for (std::size_t t = 0; t < topics.size(); ++t) sum += at(t, system);
    return sum / static_cast<double>(topics.size());
  }
};

inline void validate(const ScoreMatrix& matrix) {
  if (matrix.topics.empty() || matrix.systems.empty())
    throw std::invalid_argument("score matrix: empty topic or system list");
  if (matrix.values.size() != matrix.n() * matrix.m())
    throw std::invalid_argument("score matrix: value count does not match dimensions");
  for (double v : matrix.values)
    if (!std::isfinite(v)) throw std::invalid_argument("score matrix: non-finite score");
}

// Header `topic,<system tags...>`, one row per topic, shortest round-trip
// float formatting, LF line endings.
inline void write_score_matrix_csv(const ScoreMatrix& matrix, std::ostream& out) {
  validate(matrix);
  for (const auto& tag : matrix.systems)
    if (tag.find(',') != std::string::npos || tag.find('\n') != std::string::npos)
      throw std::invalid_argument("score matrix: system tag contains ',' or newline: " + tag);
  out << "topic";
  for (const auto& tag : matrix.systems) out << ',' << tag;
  out << '\n';
  for (std::size_t t = 0; t < matrix.n(); ++t) {
    out << matrix.topics[t];
    for (std::size_t s = 0; s < matrix.m(); ++s) out << ',' << format_double(matrix.at(t, s));
    out << '\n';
  }
}

inline ScoreMatrix read_score_matrix_csv(std::istream& in) {
  ScoreMatrix matrix;
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError("score matrix: empty input");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto header = split(line, ',');
  if (header.size() < 2 || header[0] != "topic")
    throw ParseError("score matrix: header must be `topic,<system tags...>`", line_no);
  for (std::size_t i = 1; i < header.size(); ++i) {
    if (header[i].empty()) throw ParseError("score matrix: empty system tag", line_no);
    matrix.systems.emplace_back(header[i]);
  }
  std::set<std::string> seen_topics;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split(line, ',');
    if (cells.size() != matrix.systems.size() + 1)
      throw ParseError("score matrix: expected " + std::to_string(matrix.systems.size() + 1) +
                           " cells, got " + std::to_string(cells.size()),
                       line_no);
    std::string topic(cells[0]);
    if (!seen_topics.insert(topic).second)
      throw ParseError("score matrix: duplicate topic id " + topic, line_no);
    matrix.topics.push_back(std::move(topic));
    for (std::size_t s = 1; s < cells.size(); ++s) {
      double v;
      if (!try_parse_double(cells[s], v))
        throw ParseError("score matrix: non-numeric cell `" + std::string(cells[s]) + "`",
                         line_no);
      matrix.values.push_back(v);
    }
  }
  if (matrix.topics.empty()) throw ParseError("score matrix: no data rows");
  return matrix;
}

}  // namespace mcptest
