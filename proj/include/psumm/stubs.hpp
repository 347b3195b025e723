#pragma once

// Deterministic in-process backends for offline runs and tests:
//   GoldLabeler          answers QA prompts with registered gold indices,
//                        optionally corrupting them at a seeded rate
//   HeuristicSummarizer  "trains" instantly and summarizes with LONG-1
//   TfidfEmbedder        TF-IDF vectors over a fixed corpus vocabulary

#include <atomic>
#include <cmath>
#include <cstddef>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "psumm/backend_types.hpp"
#include "psumm/errors.hpp"
#include "psumm/heuristics.hpp"
#include "psumm/metrics.hpp"
#include "psumm/prompting.hpp"
#include "psumm/random.hpp"
#include "psumm/segment.hpp"

namespace psumm::stubs {

enum class Corruption {
  InRange,     // replacement drawn from 1..N
  OutOfRange,  // replacement drawn from N+1..2N
};

struct LabelerOptions {
  std::uint64_t seed = 0;
  double corruption_rate = 0.0;
  Corruption corruption = Corruption::InRange;
  std::size_t token_limit = 4096;
  bool supports_logprobs = true;
};

class GoldLabeler : public backends::CompletionBackend {
 public:
  explicit GoldLabeler(LabelerOptions opts = {}) : opts_(opts) {}

  // Registers the gold summary for a dialog. Keyed by the numbered rendering
  // that appears as the target of a QA prompt.
  void register_gold(const Dialog& d, const ExtractiveSummary& gold) {
    Entry e;
    e.n_sentences = d.sentence_count();
    for (auto idx : gold.indices)
      (d.sentences.at(idx).speaker == Speaker::Customer ? e.customer : e.agent).push_back(idx);
    gold_[segment::render_numbered(d.sentences)] = std::move(e);
  }

  std::size_t calls() const noexcept { return calls_.load(); }

  backends::CompletionResult complete(const backends::CompletionRequest& req) override {
    ++calls_;
    if (req.logprobs && !opts_.supports_logprobs)
      throw MissingLogprobsError("stub labeler configured without logprob support");
    std::size_t need = backends::estimate_tokens(req.prompt) + req.max_tokens;
    if (need > opts_.token_limit)
      throw TokenLimitError("prompt plus answer needs " + std::to_string(need) + " tokens, limit is " +
                            std::to_string(opts_.token_limit));
    std::optional<std::string_view> target = prompting::qa_prompt_target(req.prompt);
    auto it = target ? gold_.find(std::string(*target)) : gold_.end();
    backends::CompletionResult out;
    if (it == gold_.end()) {
      append(out, "I cannot summarize this.", -0.5);
    } else {
      answer(out, std::string(*target), it->second);
    }
    if (!req.logprobs) out.tokens.clear();
    return out;
  }

 private:
  struct Entry {
    std::size_t n_sentences = 0;
    std::vector<std::size_t> customer;
    std::vector<std::size_t> agent;
  };

  static void append(backends::CompletionResult& r, std::string_view piece, double lp) {
    r.text += piece;
    r.tokens.push_back({std::string(piece), lp});
  }

  void answer(backends::CompletionResult& out, const std::string& key, const Entry& e) const {
    auto eng = rnd::make_engine(opts_.seed, key);
    auto emit_list = [&](const std::vector<std::size_t>& v) {
      if (v.empty()) {
        append(out, " none", -0.2);
        return;
      }
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) append(out, ",", -0.01);
        std::size_t idx = v[i];
        double lp = -(0.01 + 0.3 * rnd::unit(eng));
        if (opts_.corruption_rate > 0.0 && rnd::unit(eng) < opts_.corruption_rate) {
          std::size_t n = std::max<std::size_t>(e.n_sentences, 1);
          idx = opts_.corruption == Corruption::InRange ? 1 + rnd::below(eng, n) : n + 1 + rnd::below(eng, n);
          lp -= 1.0 + rnd::unit(eng);
        }
        append(out, " " + std::to_string(idx), lp);
      }
    };
    append(out, "Customer", -0.001);
    append(out, ":", -0.001);
    emit_list(e.customer);
    append(out, ".", -0.01);
    append(out, " Agent", -0.01);
    append(out, ":", -0.001);
    emit_list(e.agent);
    append(out, ".", -0.01);
  }

  LabelerOptions opts_;
  std::unordered_map<std::string, Entry> gold_;
  std::atomic<std::size_t> calls_{0};
};

inline GoldLabeler make_oracle_labeler(std::uint64_t seed = 0) { return GoldLabeler({.seed = seed}); }

// Training is bookkeeping only; summaries are the LONG-1 baseline of the
// input dialog. Model ids are content hashes, so equal training sets give
// equal ids across processes.
class HeuristicSummarizer : public backends::SummarizerBackend {
 public:
  backends::ModelHandle train(std::span<const backends::TrainingExample> examples, std::size_t epochs,
                              const nlohmann::json& config) override {
    if (examples.empty()) throw PreconditionError("train requires at least one example");
    if (epochs < 1) throw PreconditionError("train requires epochs >= 1");
    std::uint64_t h = text::fnv1a(std::to_string(epochs));
    for (const auto& ex : examples) {
      h = text::fnv1a(ex.input, h);
      h = text::fnv1a("\x1f", h);
      h = text::fnv1a(ex.target, h);
      h = text::fnv1a("\x1e", h);
    }
    h = text::fnv1a(config.dump(), h);
    backends::ModelHandle handle{"long1-" + text::hex64(h), examples.size(), epochs};
    std::lock_guard lock(mu_);
    models_.insert(handle.id);
    ++trainings_;
    return handle;
  }

  std::string summarize(const backends::ModelHandle& model, std::string_view input, std::size_t) override {
    {
      std::lock_guard lock(mu_);
      if (!models_.count(model.id)) throw UnknownHandleError("unknown model id '" + model.id + "'");
    }
    auto turns = segment::parse_plain(input);
    if (turns.empty()) return {};
    Dialog d = segment::make_dialog("", std::move(turns));
    return heuristics::long_1(d).text;
  }

  std::size_t trainings() const {
    std::lock_guard lock(mu_);
    return trainings_;
  }

 private:
  mutable std::mutex mu_;
  std::set<std::string> models_;
  std::size_t trainings_ = 0;
};

// Smoothed IDF: ln((1 + N) / (1 + df)) + 1. Vectors are L2-normalised;
// text with no in-vocabulary token maps to the zero vector.
class TfidfEmbedder : public backends::Embedder {
 public:
  explicit TfidfEmbedder(std::span<const std::string> corpus) {
    std::map<std::string, std::size_t> df;
    for (const auto& doc : corpus) {
      auto toks = metrics::tokenize_for_rouge(doc);
      std::set<std::string> uniq(toks.begin(), toks.end());
      for (const auto& t : uniq) ++df[t];
    }
    if (df.empty()) throw PreconditionError("TF-IDF corpus has no tokens");
    const double n = static_cast<double>(corpus.size());
    std::size_t dim = 0;
    for (const auto& [tok, count] : df) {
      vocab_[tok] = dim++;
      idf_.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0);
    }
  }

  std::size_t dimension() const noexcept { return idf_.size(); }

  backends::EmbeddingVector embed_one(std::string_view s) const {
    backends::EmbeddingVector v{std::vector<double>(idf_.size(), 0.0)};
    for (const auto& t : metrics::tokenize_for_rouge(s)) {
      auto it = vocab_.find(t);
      if (it != vocab_.end()) v.values[it->second] += 1.0;
    }
    double norm = 0.0;
    for (std::size_t i = 0; i < v.values.size(); ++i) {
      v.values[i] *= idf_[i];
      norm += v.values[i] * v.values[i];
    }
    if (norm > 0.0) {
      norm = std::sqrt(norm);
      for (auto& x : v.values) x /= norm;
    }
    return v;
  }

  std::vector<backends::EmbeddingVector> embed(std::span<const std::string> sentences) override {
    if (sentences.empty()) throw PreconditionError("embed requires at least one sentence");
    std::vector<backends::EmbeddingVector> out;
    out.reserve(sentences.size());
    for (const auto& s : sentences) out.push_back(embed_one(s));
    return out;
  }

 private:
  std::map<std::string, std::size_t> vocab_;
  std::vector<double> idf_;
};

// All sentence texts of a set of dialogs; the usual TF-IDF fitting corpus.
inline std::vector<std::string> sentence_corpus(std::span<const Dialog> dialogs) {
  std::vector<std::string> out;
  for (const auto& d : dialogs)
    for (const auto& s : d.sentences.entries) out.push_back(s.text);
  return out;
}

}  // namespace psumm::stubs
