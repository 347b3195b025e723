#pragma once

// Value types and role interfaces shared by every backend (stub or remote).

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "psumm/errors.hpp"

namespace psumm::backends {

struct TokenLogprob {
  std::string text;
  double logprob = 0.0;

  friend bool operator==(const TokenLogprob&, const TokenLogprob&) = default;
};

struct CompletionResult {
  std::string text;
  std::vector<TokenLogprob> tokens;

  bool has_logprobs() const noexcept { return !tokens.empty(); }

  friend bool operator==(const CompletionResult&, const CompletionResult&) = default;
};

// Throws PreconditionError when token texts do not concatenate to text or a
// logprob is non-finite or positive. An empty token list is allowed.
inline void validate(const CompletionResult& r) {
  if (r.tokens.empty()) return;
  std::string joined;
  for (const auto& t : r.tokens) {
    if (!std::isfinite(t.logprob) || t.logprob > 0.0)
      throw PreconditionError("token '" + t.text + "' has invalid logprob " + std::to_string(t.logprob));
    joined += t.text;
  }
  if (joined != r.text) throw PreconditionError("token texts do not reproduce completion text");
}

struct CompletionRequest {
  std::string prompt;
  std::size_t max_tokens = 64;
  bool logprobs = true;
  double temperature = 0.0;
};

struct ModelHandle {
  std::string id;
  std::size_t trained_on = 0;
  std::size_t epochs_completed = 0;

  friend bool operator==(const ModelHandle&, const ModelHandle&) = default;
};

struct TrainingExample {
  std::string input;
  std::string target;

  friend bool operator==(const TrainingExample&, const TrainingExample&) = default;
};

struct EmbeddingVector {
  std::vector<double> values;

  std::size_t dimension() const noexcept { return values.size(); }

  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;
};

// Whitespace token estimate with a 1.3 safety factor, rounded up.
inline std::size_t estimate_tokens(std::string_view s) noexcept {
  std::size_t words = 0;
  bool in_word = false;
  for (char c : s) {
    bool space = c == ' ' || c == '\n' || c == '\t' || c == '\r';
    if (!space && !in_word) ++words;
    in_word = !space;
  }
  return (words * 13 + 9) / 10;
}

class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;
  virtual CompletionResult complete(const CompletionRequest& request) = 0;
  // Backend-side token count when the backend exposes its tokenizer.
  virtual std::optional<std::size_t> count_tokens(std::string_view) const { return std::nullopt; }

  std::size_t tokens_in(std::string_view s) const {
    if (auto n = count_tokens(s)) return *n;
    return estimate_tokens(s);
  }
};

class SummarizerBackend {
 public:
  virtual ~SummarizerBackend() = default;
  virtual ModelHandle train(std::span<const TrainingExample> examples, std::size_t epochs,
                            const nlohmann::json& config) = 0;
  virtual std::string summarize(const ModelHandle& model, std::string_view input, std::size_t max_tokens) = 0;
};

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::vector<EmbeddingVector> embed(std::span<const std::string> sentences) = 0;
};

}  // namespace psumm::backends
