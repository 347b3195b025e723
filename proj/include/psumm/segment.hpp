#pragma once

// Rule-based sentence segmentation, numbered rendering, and alignment of
// free-text summaries back onto sentence indices.
//
// Boundary rule: a run of [.?!] (plus any closing quotes/brackets) ends a
// sentence when followed by end of text, or by whitespace and then an
// uppercase letter or an emoji. A lone '.' does not split when it ends a URL
// token, sits between two digits, or ends a known abbreviation.

#include <algorithm>
#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "psumm/errors.hpp"
#include "psumm/text.hpp"
#include "psumm/types.hpp"

namespace psumm::segment {

struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;
};

namespace detail {

inline constexpr std::array<std::string_view, 8> kAbbreviations = {
    "mr.", "mrs.", "dr.", "st.", "vs.", "e.g.", "i.e.", "etc."};

inline bool is_terminal(char c) noexcept { return c == '.' || c == '?' || c == '!'; }
inline bool is_closer(char c) noexcept { return c == ')' || c == ']' || c == '"' || c == '\''; }

// Whitespace-delimited token that ends at position last (inclusive).
inline std::string_view token_ending_at(std::string_view s, std::size_t last) noexcept {
  std::size_t b = last;
  while (b > 0 && !text::is_space(s[b - 1])) --b;
  return s.substr(b, last - b + 1);
}

inline bool is_url_token(std::string_view tok) noexcept {
  while (!tok.empty() && (tok.front() == '(' || tok.front() == '"' || tok.front() == '\'')) tok.remove_prefix(1);
  std::string low = text::lower(tok);
  return low.find("://") != std::string::npos || low.rfind("www.", 0) == 0;
}

inline bool is_abbreviation(std::string_view tok) noexcept {
  while (!tok.empty() && (tok.front() == '(' || tok.front() == '"' || tok.front() == '\'')) tok.remove_prefix(1);
  std::string low = text::lower(tok);
  return std::find(kAbbreviations.begin(), kAbbreviations.end(), low) != kAbbreviations.end();
}

inline bool is_digit(char c) noexcept { return c >= '0' && c <= '9'; }

// True when the lone period at dot is shielded by a guard.
inline bool guarded_period(std::string_view s, std::size_t dot) {
  if (dot > 0 && dot + 1 < s.size() && is_digit(s[dot - 1]) && is_digit(s[dot + 1])) return true;
  std::string_view tok = token_ending_at(s, dot);
  return is_url_token(tok) || is_abbreviation(tok);
}

inline Span trimmed(std::string_view s, std::size_t b, std::size_t e) noexcept {
  while (b < e && text::is_space(s[b])) ++b;
  while (e > b && text::is_space(s[e - 1])) --e;
  return {b, e};
}

}  // namespace detail

// Sentence spans of a single text, in order, trimmed of surrounding whitespace.
inline std::vector<Span> split_text(std::string_view s) {
  std::vector<Span> out;
  std::size_t start = 0;
  std::size_t i = 0;
  const std::size_t n = s.size();
  auto emit = [&](std::size_t end) {
    Span sp = detail::trimmed(s, start, end);
    if (sp.end > sp.begin) out.push_back(sp);
    start = end;
  };
  while (i < n) {
    if (!detail::is_terminal(s[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && detail::is_terminal(s[j])) ++j;
    std::size_t run_end = j;
    while (j < n && detail::is_closer(s[j])) ++j;
    bool boundary = false;
    if (j == n) {
      boundary = true;
    } else if (text::is_space(s[j])) {
      std::size_t k = j;
      while (k < n && text::is_space(s[k])) ++k;
      if (k == n) {
        boundary = true;
      } else {
        std::size_t len = 0;
        char32_t cp = text::decode_utf8(s, k, len);
        boundary = text::is_upper(cp) || text::is_emoji(cp);
      }
    }
    if (boundary && run_end - i == 1 && s[i] == '.' && detail::guarded_period(s, i)) boundary = false;
    if (boundary) emit(j);
    i = j;
  }
  emit(n);
  return out;
}

inline std::vector<std::string> split_text_strings(std::string_view s) {
  std::vector<std::string> out;
  for (auto sp : split_text(s)) out.emplace_back(s.substr(sp.begin, sp.end - sp.begin));
  return out;
}

// Global 1-based numbering across all utterances of the dialog.
inline SentenceTable split_sentences(std::span<const Utterance> turns) {
  if (turns.empty()) throw EmptyDialogError("dialog has no utterances");
  SentenceTable table;
  for (std::size_t u = 0; u < turns.size(); ++u) {
    const auto& t = turns[u];
    for (auto sp : split_text(t.text)) {
      table.entries.push_back(Sentence{table.entries.size() + 1, t.speaker,
                                       t.text.substr(sp.begin, sp.end - sp.begin), u, sp.begin, sp.end});
    }
  }
  return table;
}

inline SentenceTable split_sentences(const Dialog& dialog) { return split_sentences(dialog.turns); }

// Builds a segmented Dialog; validates utterance text.
inline Dialog make_dialog(std::string id, std::vector<Utterance> turns) {
  if (turns.empty()) throw EmptyDialogError("dialog '" + id + "' has no utterances");
  for (std::size_t i = 0; i < turns.size(); ++i) {
    if (text::trim(turns[i].text).empty())
      throw ValidationError(id, "utterance " + std::to_string(i + 1) + " is blank");
  }
  Dialog d{std::move(id), std::move(turns), {}};
  d.sentences = split_sentences(d.turns);
  return d;
}

struct RenderOptions {
  bool speaker_prefix = true;
};

// One line per sentence: "<n>) <text>". With speaker_prefix the first
// sentence of each utterance reads "<n>) Customer: <text>".
inline std::string render_numbered(const SentenceTable& table, RenderOptions opts = {}) {
  std::string out;
  for (std::size_t i = 0; i < table.entries.size(); ++i) {
    const auto& s = table.entries[i];
    if (i) out += '\n';
    out += std::to_string(s.index);
    out += ") ";
    bool first_of_turn = i == 0 || table.entries[i - 1].utterance != s.utterance;
    if (opts.speaker_prefix && first_of_turn) {
      out += speaker_label(s.speaker);
      out += ": ";
    }
    out += s.text;
  }
  return out;
}

// "Customer: ...\nAgent: ..." one line per utterance. Summarizer input format.
inline std::string render_plain(const Dialog& d) {
  std::string out;
  for (std::size_t i = 0; i < d.turns.size(); ++i) {
    if (i) out += '\n';
    out += speaker_label(d.turns[i].speaker);
    out += ": ";
    out += std::string(text::trim(d.turns[i].text));
  }
  return out;
}

// Inverse of render_plain. Lines without a speaker prefix continue the
// previous utterance.
inline std::vector<Utterance> parse_plain(std::string_view s) {
  std::vector<Utterance> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    std::size_t nl = s.find('\n', pos);
    std::string_view line = s.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    line = text::trim(line);
    if (!line.empty()) {
      std::optional<Speaker> sp;
      if (line.rfind("Customer:", 0) == 0) {
        sp = Speaker::Customer;
        line.remove_prefix(9);
      } else if (line.rfind("Agent:", 0) == 0) {
        sp = Speaker::Agent;
        line.remove_prefix(6);
      }
      line = text::trim(line);
      if (sp) {
        if (!line.empty()) out.push_back({*sp, std::string(line)});
      } else if (!out.empty()) {
        out.back().text += ' ';
        out.back().text += line;
      } else {
        out.push_back({Speaker::Customer, std::string(line)});
      }
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return out;
}

// Validates indices against the dialog and renders the summary text.
inline ExtractiveSummary make_summary(const Dialog& d, std::vector<std::size_t> indices) {
  std::vector<bool> seen(d.sentence_count() + 1, false);
  std::string textv;
  for (auto idx : indices) {
    if (idx < 1 || idx > d.sentence_count())
      throw ValidationError(d.id, "summary index " + std::to_string(idx) + " outside 1.." +
                                      std::to_string(d.sentence_count()));
    if (seen[idx]) throw ValidationError(d.id, "duplicate summary index " + std::to_string(idx));
    seen[idx] = true;
    if (!textv.empty()) textv += ' ';
    textv += d.sentences.at(idx).text;
  }
  return {std::move(indices), std::move(textv)};
}

// Keeps the first occurrence of each value.
inline std::vector<std::size_t> dedupe_keep_first(const std::vector<std::size_t>& v) {
  std::vector<std::size_t> out;
  for (auto x : v)
    if (std::find(out.begin(), out.end(), x) == out.end()) out.push_back(x);
  return out;
}

// Tries to read text as whitespace-separated verbatim copies of table
// sentences. Longest candidate first, backtracking; among identical texts
// the lowest index wins.
inline std::optional<std::vector<std::size_t>> decompose_verbatim(std::string_view s, const SentenceTable& table) {
  std::vector<const Sentence*> order;
  for (const auto& e : table.entries)
    if (!e.text.empty()) order.push_back(&e);
  std::stable_sort(order.begin(), order.end(),
                   [](const Sentence* a, const Sentence* b) { return a->text.size() > b->text.size(); });
  std::vector<bool> dead(s.size() + 1, false);
  std::vector<std::size_t> path;

  auto skip_ws = [&](std::size_t p) {
    while (p < s.size() && text::is_space(s[p])) ++p;
    return p;
  };
  // Iterative DFS would be noisier; recursion depth is bounded by sentence count.
  auto dfs = [&](auto&& self, std::size_t p) -> bool {
    p = skip_ws(p);
    if (p == s.size()) return !path.empty();
    if (dead[p]) return false;
    for (const Sentence* e : order) {
      const auto& t = e->text;
      if (s.compare(p, t.size(), t) != 0) continue;
      std::size_t q = p + t.size();
      if (q < s.size() && !text::is_space(s[q])) continue;
      path.push_back(e->index);
      if (self(self, q)) return true;
      path.pop_back();
    }
    dead[p] = true;
    return false;
  };
  if (!dfs(dfs, 0)) return std::nullopt;
  return path;
}

inline constexpr double kAlignThreshold = 0.5;

// Best table index for one summary sentence: exact normalized match, else
// token-overlap F1 >= threshold. Returns nullopt when nothing qualifies.
inline std::optional<std::size_t> align_one(std::string_view sentence, const SentenceTable& table,
                                            double threshold = kAlignThreshold) {
  std::string norm = text::normalize(sentence);
  for (const auto& e : table.entries)
    if (text::normalize(e.text) == norm) return e.index;
  auto toks = text::split_ws(norm);
  double best = -1.0;
  std::size_t best_idx = 0;
  for (const auto& e : table.entries) {
    double f = text::overlap_f1(toks, text::split_ws(text::normalize(e.text)));
    if (f > best) {
      best = f;
      best_idx = e.index;
    }
  }
  if (best_idx != 0 && best >= threshold) return best_idx;
  return std::nullopt;
}

// Aligns an already-split list of summary sentences.
inline std::vector<std::size_t> align_sentences(std::span<const std::string> sentences, const SentenceTable& table,
                                                double threshold = kAlignThreshold) {
  std::vector<std::size_t> out;
  std::vector<std::string> unmatched;
  for (const auto& s : sentences) {
    if (text::normalize(s).empty()) continue;
    if (auto idx = align_one(s, table, threshold))
      out.push_back(*idx);
    else
      unmatched.push_back(s);
  }
  if (!unmatched.empty()) throw AlignmentError(std::move(unmatched));
  if (out.empty()) throw PreconditionError("summary has no alignable content");
  return dedupe_keep_first(out);
}

inline std::vector<std::size_t> align_summary_to_indices(std::string_view summary_text, const SentenceTable& table,
                                                         double threshold = kAlignThreshold) {
  if (text::normalize(summary_text).empty()) throw PreconditionError("summary text is empty");
  if (auto exact = decompose_verbatim(summary_text, table)) return dedupe_keep_first(*exact);
  auto parts = split_text_strings(summary_text);
  return align_sentences(parts, table, threshold);
}

}  // namespace psumm::segment
