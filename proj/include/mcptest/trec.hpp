#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "mcptest/util.hpp"

namespace mcptest {

using BinaryRanking = std::vector<std::uint8_t>;

struct RunEntry {
  std::string doc_id;
  long rank = 0;
  double score = 0.0;
};

// One retrieval run: a ranked document list per topic, all lines sharing a tag.
struct RunSet {
  std::string system_tag;
  std::map<std::string, std::vector<RunEntry>, NaturalLess> rankings;

  bool has_topic(const std::string& topic) const { return rankings.count(topic) != 0; }
};

// Relevance judgments. grade() returns -1 for unjudged documents.
struct Qrels {
  std::map<std::string, std::map<std::string, int>, NaturalLess> judgments;

  bool has_topic(const std::string& topic) const { return judgments.count(topic) != 0; }

  int grade(const std::string& topic, const std::string& doc) const {
    auto t = judgments.find(topic);
    if (t == judgments.end()) return -1;
    auto d = t->second.find(doc);
    if (d == t->second.end()) return -1;
    return d->second;
  }

  std::size_t relevant_count(const std::string& topic) const {
    auto t = judgments.find(topic);
    if (t == judgments.end()) return 0;
    std::size_t count = 0;
    for (const auto& [doc, grade] : t->second)
      if (grade > 0) ++count;
    return count;
  }
};

// `topic Q0 docid rank score tag`, whitespace separated. Ranks in the file are
// ignored; entries are re-sorted by descending score (descending doc id on
// ties) and re-ranked 1..len, which is how trec_eval treats input order.
inline RunSet parse_run(std::istream& in) {
  RunSet run;
  std::set<std::pair<std::string, std::string>> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto fields = split_whitespace(line);
    if (fields.empty()) continue;
    if (fields.size() != 6)
      throw ParseError("run: expected 6 fields, got " + std::to_string(fields.size()), line_no);
    std::string topic(fields[0]);
    std::string doc(fields[2]);
    RunEntry entry;
    entry.doc_id = doc;
    if (!try_parse_long(fields[3], entry.rank))
      throw ParseError("run: bad rank `" + std::string(fields[3]) + "`", line_no);
    if (!try_parse_double(fields[4], entry.score))
      throw ParseError("run: bad score `" + std::string(fields[4]) + "`", line_no);
    std::string tag(fields[5]);
    if (run.system_tag.empty())
      run.system_tag = tag;
    else if (run.system_tag != tag)
      throw ParseError("run: tag `" + tag + "` conflicts with `" + run.system_tag + "`", line_no);
    if (!seen.emplace(topic, doc).second)
      throw ParseError("run: duplicate document " + doc + " for topic " + topic, line_no);
    run.rankings[topic].push_back(std::move(entry));
  }
  if (run.rankings.empty()) throw ParseError("run: no records");
  for (auto& [topic, entries] : run.rankings) {
    std::stable_sort(entries.begin(), entries.end(), [](const RunEntry& a, const RunEntry& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.doc_id > b.doc_id;
    });
    for (std::size_t i = 0; i < entries.size(); ++i)
      entries[i].rank = static_cast<long>(i) + 1;
  }
  return run;
}

inline void serialize_run(const RunSet& run, std::ostream& out) {
  if (run.system_tag.empty()) throw std::invalid_argument("run: empty system tag");
  for (const auto& [topic, entries] : run.rankings)
    for (const auto& entry : entries)
      out << topic << " Q0 " << entry.doc_id << ' ' << entry.rank << ' '
          << format_double(entry.score) << ' ' << run.system_tag << '\n';
}

// `topic iter docid grade`. The iteration column is carried by the format but
// unused. Duplicate (topic, doc) pairs and negative grades are rejected.
inline Qrels parse_qrels(std::istream& in) {
  Qrels qrels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto fields = split_whitespace(line);
    if (fields.empty()) continue;
    if (fields.size() != 4)
      throw ParseError("qrels: expected 4 fields, got " + std::to_string(fields.size()), line_no);
    std::string topic(fields[0]);
    std::string doc(fields[2]);
    long grade;
    if (!try_parse_long(fields[3], grade))
      throw ParseError("qrels: bad grade `" + std::string(fields[3]) + "`", line_no);
    if (grade < 0)
      throw ParseError("qrels: negative grade for document " + doc, line_no);
    auto [it, inserted] = qrels.judgments[topic].emplace(doc, static_cast<int>(grade));
    if (!inserted)
      throw ParseError("qrels: duplicate judgment for topic " + topic + " document " + doc,
                       line_no);
  }
  if (qrels.judgments.empty()) throw ParseError("qrels: no records");
  return qrels;
}

// Binary relevance of the retrieved list for one topic, truncated at `depth`.
// Judged-relevant documents map to 1, everything else (including unjudged) to 0.
inline BinaryRanking relevance_vector(const RunSet& run, const std::string& topic,
                                      const Qrels& qrels, std::size_t depth) {
  auto it = run.rankings.find(topic);
  if (it == run.rankings.end())
    throw std::invalid_argument("relevance_vector: run has no topic " + topic);
  const auto& entries = it->second;
  std::size_t len = std::min(depth, entries.size());
  BinaryRanking r(len);
  for (std::size_t i = 0; i < len; ++i)
    r[i] = qrels.grade(topic, entries[i].doc_id) > 0 ? 1 : 0;
  return r;
}

}  // namespace mcptest
