#pragma once

// LEAD-k and LONG-1 extractive baselines. Output indices are always in
// dialog order.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <vector>

#include "psumm/errors.hpp"
#include "psumm/metrics.hpp"
#include "psumm/segment.hpp"
#include "psumm/types.hpp"

namespace psumm::heuristics {

// First k customer sentences and first k agent sentences.
inline ExtractiveSummary lead_k(const Dialog& d, std::size_t k) {
  if (k < 1) throw PreconditionError("lead_k requires k >= 1");
  std::size_t customer = 0, agent = 0;
  std::vector<std::size_t> picked;
  for (const auto& s : d.sentences.entries) {
    auto& count = s.speaker == Speaker::Customer ? customer : agent;
    if (count < k) {
      picked.push_back(s.index);
      ++count;
    }
  }
  return segment::make_summary(d, std::move(picked));
}

// Longest sentence per role, measured in ROUGE tokens; ties go to the
// lower index.
inline ExtractiveSummary long_1(const Dialog& d) {
  std::optional<std::size_t> best[2];
  std::size_t best_len[2] = {0, 0};
  for (const auto& s : d.sentences.entries) {
    int role = s.speaker == Speaker::Customer ? 0 : 1;
    std::size_t len = metrics::tokenize_for_rouge(s.text).size();
    if (!best[role] || len > best_len[role]) {
      best[role] = s.index;
      best_len[role] = len;
    }
  }
  std::vector<std::size_t> picked;
  for (auto& b : best)
    if (b) picked.push_back(*b);
  std::sort(picked.begin(), picked.end());
  return segment::make_summary(d, std::move(picked));
}

enum class Method { Lead1, Lead2, Long1 };

inline std::optional<Method> parse_method(std::string_view name) {
  if (name == "lead1") return Method::Lead1;
  if (name == "lead2") return Method::Lead2;
  if (name == "long1") return Method::Long1;
  return std::nullopt;
}

inline ExtractiveSummary apply(Method m, const Dialog& d) {
  switch (m) {
    case Method::Lead1: return lead_k(d, 1);
    case Method::Lead2: return lead_k(d, 2);
    case Method::Long1: return long_1(d);
  }
  return {};
}

}  // namespace psumm::heuristics
