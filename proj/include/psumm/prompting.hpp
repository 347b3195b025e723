#pragma once

// Few-shot prompt construction for the numbered-sentence QA framing and the
// plain completion framing, plus parsing of QA answers back into indices.
//
// QA prompt layout (blocks separated by a blank line):
//
//   <instruction>
//
//   Dialog:
//   1) Customer: ...
//   2) ...
//   Customer: 1, 2. Agent: 4.
//
//   Dialog:
//   <numbered target>
//   Customer:

#include <algorithm>
#include <climits>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "psumm/backend_types.hpp"
#include "psumm/errors.hpp"
#include "psumm/segment.hpp"
#include "psumm/text.hpp"
#include "psumm/types.hpp"

namespace psumm::prompting {

struct PromptTemplates {
  std::string qa_instruction =
      "Each dialog below is a customer support conversation split into numbered sentences. "
      "For every dialog, reply with the numbers of the sentences in which the customer describes "
      "their issue, and the numbers of the sentences that best capture the agent's answers. "
      "Use the format \"Customer: <numbers>. Agent: <numbers>.\"";
  std::string completion_instruction =
      "Summarize each customer support dialog below. Build the summary only from sentences copied "
      "word for word from the dialog. Do not write new sentences and do not paraphrase.";
};

inline constexpr std::string_view kDialogHeader = "Dialog:\n";
inline constexpr std::string_view kAnswerCue = "Customer:";
inline constexpr std::string_view kSummaryCue = "Summary:";

struct FewShotExample {
  Dialog dialog;
  std::vector<std::size_t> customer;
  std::vector<std::size_t> agent;
};

// Splits a reference summary's indices by speaker role.
inline FewShotExample make_few_shot(const Dialog& d, const ExtractiveSummary& reference) {
  FewShotExample ex{d, {}, {}};
  for (auto idx : reference.indices) {
    if (idx < 1 || idx > d.sentence_count())
      throw ValidationError(d.id, "few-shot index " + std::to_string(idx) + " out of range");
    (d.sentences.at(idx).speaker == Speaker::Customer ? ex.customer : ex.agent).push_back(idx);
  }
  return ex;
}

inline void validate(const FewShotExample& ex) {
  for (auto idx : ex.customer)
    if (idx < 1 || idx > ex.dialog.sentence_count() || ex.dialog.sentences.at(idx).speaker != Speaker::Customer)
      throw ValidationError(ex.dialog.id, "customer answer index " + std::to_string(idx) + " is not a customer sentence");
  for (auto idx : ex.agent)
    if (idx < 1 || idx > ex.dialog.sentence_count() || ex.dialog.sentences.at(idx).speaker != Speaker::Agent)
      throw ValidationError(ex.dialog.id, "agent answer index " + std::to_string(idx) + " is not an agent sentence");
}

inline std::string render_index_list(const std::vector<std::size_t>& v) {
  if (v.empty()) return "none";
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(v[i]);
  }
  return out;
}

// "Customer: 1, 2. Agent: 4." with "none" for an empty role.
inline std::string render_answer_line(const std::vector<std::size_t>& customer, const std::vector<std::size_t>& agent) {
  return "Customer: " + render_index_list(customer) + ". Agent: " + render_index_list(agent) + ".";
}

struct PromptBudget {
  std::size_t max_total_tokens = 4096;
  std::size_t max_answer_tokens = 64;
  std::size_t shots = 2;

  std::size_t available() const noexcept {
    return max_total_tokens > max_answer_tokens ? max_total_tokens - max_answer_tokens : 0;
  }
};

inline bool is_allowed_shot_count(std::size_t shots) noexcept {
  return shots == 0 || shots == 1 || shots == 2 || shots == 4 || shots == 8;
}

// Largest allowed shot count that does not exceed limit.
inline std::size_t clamp_shot_count(std::size_t limit) noexcept {
  for (std::size_t s : {8u, 4u, 2u, 1u})
    if (s <= limit) return s;
  return 0;
}

inline void validate(const PromptBudget& b) {
  if (!is_allowed_shot_count(b.shots))
    throw PreconditionError("shots must be one of 0, 1, 2, 4, 8 (got " + std::to_string(b.shots) + ")");
  if (b.max_answer_tokens >= b.max_total_tokens)
    throw PreconditionError("max_answer_tokens must be smaller than max_total_tokens");
}

using TokenCounter = std::function<std::size_t(std::string_view)>;

inline TokenCounter default_counter() {
  return [](std::string_view s) { return backends::estimate_tokens(s); };
}

struct PromptBuild {
  std::string text;
  std::size_t shots_requested = 0;
  std::size_t shots_used = 0;
  std::size_t tokens = 0;
  std::vector<std::string> notices;
};

namespace detail {

inline std::string join_blocks(const std::string& instruction, const std::vector<std::string>& blocks,
                               std::size_t n_blocks, const std::string& target) {
  std::string out = instruction;
  for (std::size_t i = 0; i < n_blocks; ++i) {
    out += "\n\n";
    out += blocks[i];
  }
  out += "\n\n";
  out += target;
  return out;
}

inline PromptBuild fit_to_budget(const std::string& instruction, const std::vector<std::string>& shot_blocks,
                                 const std::string& target_block, const PromptBudget& budget,
                                 const TokenCounter& count) {
  PromptBuild build;
  build.shots_requested = shot_blocks.size();
  for (std::size_t n = shot_blocks.size() + 1; n-- > 0;) {
    std::string text = join_blocks(instruction, shot_blocks, n, target_block);
    std::size_t tokens = count(text);
    if (tokens <= budget.available()) {
      build.text = std::move(text);
      build.shots_used = n;
      build.tokens = tokens;
      if (n < shot_blocks.size())
        build.notices.push_back("dropped " + std::to_string(shot_blocks.size() - n) + " of " +
                                std::to_string(shot_blocks.size()) + " shots to fit the token budget");
      return build;
    }
  }
  throw BudgetError("zero-shot prompt needs " + std::to_string(count(join_blocks(instruction, {}, 0, target_block))) +
                    " tokens but only " + std::to_string(budget.available()) + " are available");
}

}  // namespace detail

inline std::string render_qa_block(const FewShotExample& ex) {
  return std::string(kDialogHeader) + segment::render_numbered(ex.dialog.sentences) + "\n" +
         render_answer_line(ex.customer, ex.agent);
}

inline std::string render_qa_target(const Dialog& target) {
  return std::string(kDialogHeader) + segment::render_numbered(target.sentences) + "\n" + std::string(kAnswerCue);
}

// Builds the QA prompt; shots are dropped last-first until the prompt fits.
inline PromptBuild build_qa_prompt(const Dialog& target, std::span<const FewShotExample> shots,
                                   const PromptBudget& budget, const TokenCounter& count = default_counter(),
                                   const PromptTemplates& templates = {}) {
  validate(budget);
  if (shots.size() != budget.shots)
    throw PreconditionError("got " + std::to_string(shots.size()) + " shots but budget asks for " +
                            std::to_string(budget.shots));
  if (target.sentences.empty()) throw PreconditionError("target dialog '" + target.id + "' is not segmented");
  std::vector<std::string> blocks;
  for (const auto& s : shots) {
    validate(s);
    blocks.push_back(render_qa_block(s));
  }
  return detail::fit_to_budget(templates.qa_instruction, blocks, render_qa_target(target), budget, count);
}

struct CompletionShot {
  Dialog dialog;
  std::string summary;
};

inline PromptBuild build_completion_prompt(const Dialog& target, std::span<const CompletionShot> shots,
                                           const PromptBudget& budget, const TokenCounter& count = default_counter(),
                                           const PromptTemplates& templates = {}) {
  validate(budget);
  if (shots.size() != budget.shots)
    throw PreconditionError("got " + std::to_string(shots.size()) + " shots but budget asks for " +
                            std::to_string(budget.shots));
  std::vector<std::string> blocks;
  for (const auto& s : shots)
    blocks.push_back(std::string(kDialogHeader) + segment::render_plain(s.dialog) + "\n" + std::string(kSummaryCue) +
                     " " + s.summary);
  std::string target_block =
      std::string(kDialogHeader) + segment::render_plain(target) + "\n" + std::string(kSummaryCue);
  return detail::fit_to_budget(templates.completion_instruction, blocks, target_block, budget, count);
}

// The numbered target dialog of a QA prompt, or nullopt if the prompt does
// not end with the answer cue.
inline std::optional<std::string_view> qa_prompt_target(std::string_view prompt) {
  std::string suffix = "\n" + std::string(kAnswerCue);
  if (prompt.size() < suffix.size() || prompt.substr(prompt.size() - suffix.size()) != suffix) return std::nullopt;
  std::string_view body = prompt.substr(0, prompt.size() - suffix.size());
  auto pos = body.rfind(kDialogHeader);
  if (pos == std::string_view::npos) return std::nullopt;
  return body.substr(pos + kDialogHeader.size());
}

struct NumberSpan {
  std::size_t token_position = 0;
  double logprob = 0.0;

  friend bool operator==(const NumberSpan&, const NumberSpan&) = default;
};

struct ParsedAnswer {
  std::vector<std::size_t> customer_indices;
  std::vector<std::size_t> agent_indices;
  std::vector<NumberSpan> number_token_spans;  // one per emitted number, text order

  std::size_t index_count() const noexcept { return customer_indices.size() + agent_indices.size(); }

  friend bool operator==(const ParsedAnswer&, const ParsedAnswer&) = default;
};

struct ParseOptions {
  // Role for numbers that appear before any label. The QA prompt ends on
  // the customer cue, so a bare continuation belongs to the customer.
  Speaker leading_role = Speaker::Customer;
};

namespace detail {

struct RawNumber {
  long long value = 0;
  std::size_t offset = 0;
  Speaker role = Speaker::Customer;
};

inline bool word_at(std::string_view low, std::size_t i, std::string_view word) {
  if (low.compare(i, word.size(), word) != 0) return false;
  return i == 0 || !text::is_ascii_alnum(low[i - 1]);
}

inline std::vector<RawNumber> scan_numbers(std::string_view s, const ParseOptions& opts) {
  std::string low = text::lower(s);
  std::vector<RawNumber> out;
  Speaker role = opts.leading_role;
  std::size_t i = 0;
  while (i < low.size()) {
    if (word_at(low, i, "customer")) {
      role = Speaker::Customer;
      i += 8;
      continue;
    }
    if (word_at(low, i, "agent")) {
      role = Speaker::Agent;
      i += 5;
      continue;
    }
    if (low[i] >= '0' && low[i] <= '9') {
      std::size_t j = i;
      long long v = 0;
      bool overflow = false;
      while (j < low.size() && low[j] >= '0' && low[j] <= '9') {
        if (!overflow) {
          if (v > (LLONG_MAX - 9) / 10)
            overflow = true;
          else
            v = v * 10 + (low[j] - '0');
        }
        ++j;
      }
      out.push_back({overflow ? LLONG_MAX : v, i, role});
      i = j;
      continue;
    }
    ++i;
  }
  return out;
}

}  // namespace detail

// Extracts labelled index lists and pairs each number with the logprob of
// the token holding its first digit.
inline ParsedAnswer parse_qa_answer(const backends::CompletionResult& completion, std::size_t n_sentences,
                                    const ParseOptions& opts = {}) {
  if (!completion.has_logprobs()) throw MissingLogprobsError("completion carries no token logprobs");
  backends::validate(completion);
  auto numbers = detail::scan_numbers(completion.text, opts);
  if (numbers.empty()) throw UnparseableAnswerError("no sentence numbers in answer: '" + completion.text + "'");
  std::vector<long long> bad;
  for (const auto& n : numbers)
    if (n.value < 1 || static_cast<unsigned long long>(n.value) > n_sentences) bad.push_back(n.value);
  if (!bad.empty()) throw OutOfRangeIndexError(std::move(bad), n_sentences);

  std::vector<std::size_t> token_begin;
  std::size_t off = 0;
  for (const auto& t : completion.tokens) {
    token_begin.push_back(off);
    off += t.text.size();
  }
  ParsedAnswer ans;
  for (const auto& n : numbers) {
    auto it = std::upper_bound(token_begin.begin(), token_begin.end(), n.offset);
    std::size_t tok = static_cast<std::size_t>(it - token_begin.begin()) - 1;
    (n.role == Speaker::Customer ? ans.customer_indices : ans.agent_indices)
        .push_back(static_cast<std::size_t>(n.value));
    ans.number_token_spans.push_back({tok, completion.tokens[tok].logprob});
  }
  return ans;
}

// Customer indices then agent indices, first occurrence wins.
inline ExtractiveSummary reconstruct_summary(const Dialog& dialog, const ParsedAnswer& answer) {
  std::vector<std::size_t> all = answer.customer_indices;
  all.insert(all.end(), answer.agent_indices.begin(), answer.agent_indices.end());
  return segment::make_summary(dialog, segment::dedupe_keep_first(all));
}

}  // namespace psumm::prompting
