#pragma once

// Confidence scores for pseudo-labels and per-cycle example selection.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "psumm/errors.hpp"
#include "psumm/prompting.hpp"
#include "psumm/random.hpp"
#include "psumm/types.hpp"

namespace psumm::scoring {

struct PseudoLabelCandidate {
  Dialog dialog;
  prompting::ParsedAnswer answer;
  ExtractiveSummary summary;
  double score = 0.0;

  const std::string& id() const noexcept { return dialog.id; }

  friend bool operator==(const PseudoLabelCandidate&, const PseudoLabelCandidate&) = default;
};

struct ScoreOptions {
  // Divide by the number of emitted sentence numbers. Off by default: the
  // plain sum is the reference behaviour, at the cost of favouring short
  // answers.
  bool normalize_by_count = false;
};

// Sum of the logprobs of the number tokens.
inline double score_candidate(const prompting::ParsedAnswer& answer, const ScoreOptions& opts = {}) {
  if (answer.number_token_spans.empty()) throw EmptySpansError("answer has no number token spans");
  double sum = 0.0;
  for (const auto& s : answer.number_token_spans) sum += s.logprob;
  if (opts.normalize_by_count) sum /= static_cast<double>(answer.number_token_spans.size());
  return sum;
}

using IdSet = std::set<std::string>;

namespace detail {

inline std::vector<const PseudoLabelCandidate*> eligible(std::span<const PseudoLabelCandidate> candidates,
                                                         const IdSet& already_selected) {
  std::vector<const PseudoLabelCandidate*> out;
  IdSet seen;
  for (const auto& c : candidates) {
    if (already_selected.count(c.id()) || !seen.insert(c.id()).second) continue;
    out.push_back(&c);
  }
  return out;
}

inline std::vector<PseudoLabelCandidate> take(const std::vector<const PseudoLabelCandidate*>& ptrs, std::size_t k) {
  std::vector<PseudoLabelCandidate> out;
  for (std::size_t i = 0; i < std::min(k, ptrs.size()); ++i) out.push_back(*ptrs[i]);
  return out;
}

}  // namespace detail

// The k highest scores among candidates not yet selected; ties broken by
// dialog id ascending.
inline std::vector<PseudoLabelCandidate> select_top_k(std::span<const PseudoLabelCandidate> candidates, std::size_t k,
                                                      const IdSet& already_selected) {
  auto pool = detail::eligible(candidates, already_selected);
  std::sort(pool.begin(), pool.end(), [](const PseudoLabelCandidate* a, const PseudoLabelCandidate* b) {
    if (a->score != b->score) return a->score > b->score;
    return a->id() < b->id();
  });
  return detail::take(pool, k);
}

// Seeded uniform choice without replacement. Eligible candidates are put in
// id order before shuffling, so the result does not depend on input order.
inline std::vector<PseudoLabelCandidate> select_random_k(std::span<const PseudoLabelCandidate> candidates,
                                                         std::size_t k, const IdSet& already_selected,
                                                         std::uint64_t seed) {
  auto pool = detail::eligible(candidates, already_selected);
  std::sort(pool.begin(), pool.end(),
            [](const PseudoLabelCandidate* a, const PseudoLabelCandidate* b) { return a->id() < b->id(); });
  auto eng = rnd::make_engine(seed, "select_random_k");
  rnd::shuffle(pool, eng);
  return detail::take(pool, k);
}

}  // namespace psumm::scoring
