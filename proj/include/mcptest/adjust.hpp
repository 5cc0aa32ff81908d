#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcptest/family.hpp"

namespace mcptest {

enum class AdjustMethod { none, bonferroni, holm, bh, by };

inline const char* to_string(AdjustMethod method) {
  switch (method) {
    case AdjustMethod::none: return "none";
    case AdjustMethod::bonferroni: return "bonferroni";
    case AdjustMethod::holm: return "holm";
    case AdjustMethod::bh: return "bh";
    case AdjustMethod::by: return "by";
  }
  return "?";
}

inline AdjustMethod adjust_method_from_string(const std::string& name) {
  if (name == "none") return AdjustMethod::none;
  if (name == "bonferroni") return AdjustMethod::bonferroni;
  if (name == "holm") return AdjustMethod::holm;
  if (name == "bh") return AdjustMethod::bh;
  if (name == "by") return AdjustMethod::by;
  throw std::invalid_argument("unknown adjustment method: " + name);
}

// Adjusted p-values: comparing them against a single level reproduces the
// procedure's rejection set. Bonferroni and Holm control the family-wise
// error rate, BH and BY the false discovery rate. Ties sort stably by
// original index; clamping to 1 happens after the cumulative max/min.
inline std::vector<double> adjust(const std::vector<double>& p, AdjustMethod method) {
  if (p.empty()) throw std::invalid_argument("adjust: empty p-value vector");
  for (double v : p)
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("adjust: p-value outside [0,1]");

  const std::size_t k = p.size();
  if (method == AdjustMethod::none) return p;
  if (method == AdjustMethod::bonferroni) {
    std::vector<double> out(k);
    for (std::size_t i = 0; i < k; ++i) out[i] = std::min(1.0, static_cast<double>(k) * p[i]);
    return out;
  }

  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });

  std::vector<double> out(k);
  if (method == AdjustMethod::holm) {
    // Step-down: running max of (k - j) * p_(j).
    double running = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      running = std::max(running, static_cast<double>(k - j) * p[order[j]]);
      out[order[j]] = std::min(1.0, running);
    }
    return out;
  }

  // BH / BY step-up: running min from the largest p of factor * (k / j) * p_(j).
  double factor = 1.0;
  if (method == AdjustMethod::by) {
    factor = 0.0;
    for (std::size_t i = 1; i <= k; ++i) factor += 1.0 / static_cast<double>(i);
  }
  double running = std::numeric_limits<double>::infinity();
  for (std::size_t j = k; j-- > 0;) {
    running = std::min(running,
                       factor * static_cast<double>(k) / static_cast<double>(j + 1) * p[order[j]]);
    out[order[j]] = std::min(1.0, running);
  }
  return out;
}

// A hypothesis family together with its adjusted p-values and the level the
// rejection decision is taken at (alpha for FWER methods, delta for FDR).
struct AdjustedFamily {
  HypothesisFamily base;
  AdjustMethod method = AdjustMethod::none;
  std::vector<double> adjusted_p;
  double level = 0.05;
};

inline AdjustedFamily adjust_family(HypothesisFamily family, AdjustMethod method,
                                    double level = 0.05) {
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("adjust: level outside (0,1)");
  AdjustedFamily out;
  out.adjusted_p = adjust(family.raw_p, method);
  out.base = std::move(family);
  out.method = method;
  out.level = level;
  return out;
}

// Inclusive threshold, matching the p <= level convention of the procedures.
inline std::vector<bool> reject_set(const AdjustedFamily& family) {
  if (!(family.level > 0.0 && family.level < 1.0))
    throw std::invalid_argument("reject_set: level outside (0,1)");
  std::vector<bool> rejected(family.adjusted_p.size());
  for (std::size_t i = 0; i < rejected.size(); ++i)
    rejected[i] = family.adjusted_p[i] <= family.level;
  return rejected;
}

}  // namespace mcptest
