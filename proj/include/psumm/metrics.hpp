#pragma once

// ROUGE-1/-2/-L F-measure with candidate-side token truncation and
// per-instance max aggregation over multiple references.

#include <algorithm>
#include <iterator>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "psumm/errors.hpp"
#include "psumm/porter.hpp"
#include "psumm/text.hpp"
#include "psumm/types.hpp"

namespace psumm::metrics {

using Tokens = std::vector<std::string>;

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  friend bool operator==(const RougeScore&, const RougeScore&) = default;
};

struct RougeOptions {
  bool stem = false;
  bool remove_stopwords = false;
};

inline constexpr std::string_view kStopwords[] = {
    "i", "me", "my", "myself", "we", "our", "ours", "ourselves", "you", "your", "yours", "yourself",
    "yourselves", "he", "him", "his", "himself", "she", "her", "hers", "herself", "it", "its", "itself",
    "they", "them", "their", "theirs", "themselves", "what", "which", "who", "whom", "this", "that", "these",
    "those", "am", "is", "are", "was", "were", "be", "been", "being", "have", "has", "had", "having", "do",
    "does", "did", "doing", "a", "an", "the", "and", "but", "if", "or", "because", "as", "until", "while",
    "of", "at", "by", "for", "with", "about", "against", "between", "into", "through", "during", "before",
    "after", "above", "below", "to", "from", "up", "down", "in", "out", "on", "off", "over", "under", "again",
    "further", "then", "once", "here", "there", "when", "where", "why", "how", "all", "any", "both", "each",
    "few", "more", "most", "other", "some", "such", "no", "nor", "not", "only", "own", "same", "so", "than",
    "too", "very", "s", "t", "can", "will", "just", "don", "should", "now"};

// Lowercase, split on anything that is not [a-z0-9], drop empties.
inline Tokens tokenize_for_rouge(std::string_view s, const RougeOptions& opts = {}) {
  Tokens out;
  std::string cur;
  auto flush = [&] {
    if (cur.empty()) return;
    if (opts.remove_stopwords &&
        std::find(std::begin(kStopwords), std::end(kStopwords), std::string_view(cur)) != std::end(kStopwords)) {
      cur.clear();
      return;
    }
    if (opts.stem && cur.size() > 3) cur = porter::stem(cur);
    out.push_back(std::move(cur));
    cur.clear();
  };
  for (char c : s) {
    char l = text::to_lower(c);
    if ((l >= 'a' && l <= 'z') || (l >= '0' && l <= '9'))
      cur.push_back(l);
    else
      flush();
  }
  flush();
  return out;
}

inline RougeScore make_score(std::size_t overlap, std::size_t cand_total, std::size_t ref_total) {
  RougeScore s;
  if (cand_total == 0 || ref_total == 0) return s;
  s.precision = static_cast<double>(overlap) / static_cast<double>(cand_total);
  s.recall = static_cast<double>(overlap) / static_cast<double>(ref_total);
  s.f1 = (s.precision + s.recall) > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

inline std::map<std::vector<std::string_view>, std::size_t> ngram_counts(std::span<const std::string> toks,
                                                                       std::size_t n) {
  std::map<std::vector<std::string_view>, std::size_t> counts;
  if (toks.size() < n) return counts;
  for (std::size_t i = 0; i + n <= toks.size(); ++i) {
    std::vector<std::string_view> g(toks.begin() + static_cast<std::ptrdiff_t>(i),
                                    toks.begin() + static_cast<std::ptrdiff_t>(i + n));
    ++counts[std::move(g)];
  }
  return counts;
}

// Clipped n-gram overlap.
inline RougeScore rouge_n(std::span<const std::string> candidate, std::span<const std::string> reference,
                          std::size_t n) {
  if (n < 1) throw PreconditionError("rouge_n requires n >= 1");
  auto cand = ngram_counts(candidate, n);
  auto ref = ngram_counts(reference, n);
  std::size_t overlap = 0;
  for (const auto& [g, c] : cand) {
    auto it = ref.find(g);
    if (it != ref.end()) overlap += std::min(c, it->second);
  }
  std::size_t cand_total = candidate.size() >= n ? candidate.size() - n + 1 : 0;
  std::size_t ref_total = reference.size() >= n ? reference.size() - n + 1 : 0;
  return make_score(overlap, cand_total, ref_total);
}

inline std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

// Whole-sequence LCS, beta = 1.
inline RougeScore rouge_l(std::span<const std::string> candidate, std::span<const std::string> reference) {
  return make_score(lcs_length(candidate, reference), candidate.size(), reference.size());
}

struct InstanceScores {
  RougeScore rouge1;
  RougeScore rouge2;
  RougeScore rougeL;
  std::size_t candidate_tokens = 0;  // after truncation
};

struct EvalConfig {
  std::size_t token_limit = 80;
  RougeOptions rouge;
};

struct EvalReport {
  std::vector<InstanceScores> per_instance;
  double rouge1 = 0.0;
  double rouge2 = 0.0;
  double rougeL = 0.0;
  std::size_t token_limit = 0;
  std::string aggregation = "max";
};

// Scores one candidate against its references; the best f1 per metric is
// kept independently.
inline InstanceScores score_instance(std::string_view candidate, std::span<const std::string> references,
                                     const EvalConfig& cfg) {
  if (references.empty()) throw EmptyReferencesError("instance has no references");
  Tokens cand = tokenize_for_rouge(candidate, cfg.rouge);
  if (cand.size() > cfg.token_limit) cand.resize(cfg.token_limit);
  InstanceScores best;
  best.candidate_tokens = cand.size();
  bool first = true;
  for (const auto& r : references) {
    Tokens ref = tokenize_for_rouge(r, cfg.rouge);
    auto r1 = rouge_n(cand, ref, 1);
    auto r2 = rouge_n(cand, ref, 2);
    auto rl = rouge_l(cand, ref);
    if (first || r1.f1 > best.rouge1.f1) best.rouge1 = r1;
    if (first || r2.f1 > best.rouge2.f1) best.rouge2 = r2;
    if (first || rl.f1 > best.rougeL.f1) best.rougeL = rl;
    first = false;
  }
  return best;
}

inline EvalReport evaluate_texts(std::span<const std::string> predictions,
                                 std::span<const std::vector<std::string>> references, const EvalConfig& cfg) {
  if (cfg.token_limit == 0) throw PreconditionError("token_limit must be > 0");
  if (predictions.size() != references.size())
    throw LengthMismatchError("predictions (" + std::to_string(predictions.size()) + ") and references (" +
                              std::to_string(references.size()) + ") differ in length");
  EvalReport rep;
  rep.token_limit = cfg.token_limit;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (references[i].empty())
      throw EmptyReferencesError("instance " + std::to_string(i) + " has no references");
    rep.per_instance.push_back(score_instance(predictions[i], references[i], cfg));
  }
  if (!rep.per_instance.empty()) {
    for (const auto& s : rep.per_instance) {
      rep.rouge1 += s.rouge1.f1;
      rep.rouge2 += s.rouge2.f1;
      rep.rougeL += s.rougeL.f1;
    }
    auto n = static_cast<double>(rep.per_instance.size());
    rep.rouge1 /= n;
    rep.rouge2 /= n;
    rep.rougeL /= n;
  }
  return rep;
}

inline EvalReport evaluate(std::span<const ExtractiveSummary> predictions,
                           std::span<const std::vector<ExtractiveSummary>> references, std::size_t token_limit,
                           const RougeOptions& rouge = {}) {
  if (predictions.size() != references.size())
    throw LengthMismatchError("predictions (" + std::to_string(predictions.size()) + ") and references (" +
                              std::to_string(references.size()) + ") differ in length");
  std::vector<std::string> preds;
  std::vector<std::vector<std::string>> refs;
  preds.reserve(predictions.size());
  for (const auto& p : predictions) preds.push_back(p.text);
  for (const auto& rs : references) {
    std::vector<std::string> v;
    for (const auto& r : rs) v.push_back(r.text);
    refs.push_back(std::move(v));
  }
  return evaluate_texts(preds, refs, EvalConfig{token_limit, rouge});
}

inline nlohmann::json to_json(const RougeScore& s) {
  return {{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}};
}

inline nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json per = nlohmann::json::array();
  for (const auto& s : r.per_instance)
    per.push_back({{"rouge1", to_json(s.rouge1)},
                   {"rouge2", to_json(s.rouge2)},
                   {"rougeL", to_json(s.rougeL)},
                   {"candidate_tokens", s.candidate_tokens}});
  return {{"rouge1", r.rouge1},         {"rouge2", r.rouge2},           {"rougeL", r.rougeL},
          {"n", r.per_instance.size()}, {"token_limit", r.token_limit}, {"aggregation", r.aggregation},
          {"per_instance", per}};
}

}  // namespace psumm::metrics
