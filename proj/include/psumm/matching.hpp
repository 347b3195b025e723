#pragma once

// Forces arbitrary generated text onto dialog sentences: each generated
// sentence is replaced by the dialog sentence with the highest cosine
// similarity of embeddings.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "psumm/backend_types.hpp"
#include "psumm/errors.hpp"
#include "psumm/segment.hpp"
#include "psumm/text.hpp"
#include "psumm/types.hpp"

namespace psumm::matching {

inline bool is_zero(const backends::EmbeddingVector& v) noexcept {
  for (double x : v.values)
    if (x != 0.0) return false;
  return true;
}

// Cosine similarity; distance is 1 - similarity.
inline double cosine_similarity(const backends::EmbeddingVector& a, const backends::EmbeddingVector& b) {
  if (a.dimension() != b.dimension())
    throw DimensionMismatchError("cosine of vectors with dimensions " + std::to_string(a.dimension()) + " and " +
                                 std::to_string(b.dimension()));
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    dot += a.values[i] * b.values[i];
    na += a.values[i] * a.values[i];
    nb += b.values[i] * b.values[i];
  }
  if (na == 0.0 || nb == 0.0) throw ZeroVectorError("cosine similarity of a zero vector");
  double c = dot / (std::sqrt(na) * std::sqrt(nb));
  return std::clamp(c, -1.0, 1.0);
}

inline double cosine_distance(const backends::EmbeddingVector& a, const backends::EmbeddingVector& b) {
  return 1.0 - cosine_similarity(a, b);
}

namespace detail {

inline std::optional<std::size_t> exact_match(std::string_view sentence, const SentenceTable& table) {
  std::string norm = text::normalize(sentence);
  for (const auto& e : table.entries)
    if (text::normalize(e.text) == norm) return e.index;
  return std::nullopt;
}

// Highest token-overlap F1; ties and the all-zero case go to the lowest index.
inline std::size_t overlap_match(std::string_view sentence, const SentenceTable& table) {
  auto toks = text::split_ws(text::normalize(sentence));
  double best = -1.0;
  std::size_t best_idx = 1;
  for (const auto& e : table.entries) {
    double f = text::overlap_f1(toks, text::split_ws(text::normalize(e.text)));
    if (f > best) {
      best = f;
      best_idx = e.index;
    }
  }
  return best_idx;
}

}  // namespace detail

// Maps generated text to an extractive summary of dialog. Output indices
// follow generated order with duplicates removed; the text is rendered from
// dialog sentences verbatim.
inline ExtractiveSummary to_extractive(std::string_view generated, const Dialog& dialog,
                                       backends::Embedder& embedder) {
  if (dialog.sentences.empty()) throw PreconditionError("dialog '" + dialog.id + "' is not segmented");
  if (auto verbatim = segment::decompose_verbatim(generated, dialog.sentences))
    return segment::make_summary(dialog, segment::dedupe_keep_first(*verbatim));

  std::vector<std::string> parts = segment::split_text_strings(generated);
  if (parts.empty()) throw EmptyGenerationError("generated summary contains no sentences");

  std::vector<std::optional<std::size_t>> mapped(parts.size());
  bool need_embeddings = false;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    mapped[i] = detail::exact_match(parts[i], dialog.sentences);
    if (!mapped[i]) need_embeddings = true;
  }

  if (need_embeddings) {
    std::vector<std::string> dialog_texts;
    dialog_texts.reserve(dialog.sentence_count());
    for (const auto& e : dialog.sentences.entries) dialog_texts.push_back(e.text);
    auto gen_vecs = embedder.embed(parts);
    auto dia_vecs = embedder.embed(dialog_texts);
    if (gen_vecs.size() != parts.size() || dia_vecs.size() != dialog_texts.size())
      throw DimensionMismatchError("embedder returned the wrong number of vectors");

    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (mapped[i]) continue;
      std::optional<std::size_t> best_idx;
      double best = -2.0;
      if (!is_zero(gen_vecs[i])) {
        for (std::size_t j = 0; j < dia_vecs.size(); ++j) {
          if (is_zero(dia_vecs[j])) continue;
          double sim = cosine_similarity(gen_vecs[i], dia_vecs[j]);
          if (sim > best) {
            best = sim;
            best_idx = j + 1;
          }
        }
      }
      mapped[i] = best_idx ? *best_idx : detail::overlap_match(parts[i], dialog.sentences);
    }
  }

  std::vector<std::size_t> indices;
  for (const auto& m : mapped) indices.push_back(*m);
  return segment::make_summary(dialog, segment::dedupe_keep_first(indices));
}

}  // namespace psumm::matching
