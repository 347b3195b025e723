#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace psumm {

enum class Speaker { Customer, Agent };

inline std::string_view speaker_label(Speaker s) noexcept {
  return s == Speaker::Customer ? "Customer" : "Agent";
}

inline std::string_view speaker_key(Speaker s) noexcept {
  return s == Speaker::Customer ? "customer" : "agent";
}

inline std::optional<Speaker> parse_speaker(std::string_view key) noexcept {
  if (key == "customer" || key == "Customer") return Speaker::Customer;
  if (key == "agent" || key == "Agent") return Speaker::Agent;
  return std::nullopt;
}

struct Utterance {
  Speaker speaker = Speaker::Customer;
  std::string text;

  friend bool operator==(const Utterance&, const Utterance&) = default;
};

struct Sentence {
  std::size_t index = 0;      // 1-based, global across the dialog
  Speaker speaker = Speaker::Customer;
  std::string text;
  std::size_t utterance = 0;  // 0-based position of the source utterance
  std::size_t begin = 0;      // byte range inside the utterance text
  std::size_t end = 0;

  friend bool operator==(const Sentence&, const Sentence&) = default;
};

struct SentenceTable {
  std::vector<Sentence> entries;

  std::size_t size() const noexcept { return entries.size(); }
  bool empty() const noexcept { return entries.empty(); }
  // index is 1-based.
  const Sentence& at(std::size_t index) const { return entries.at(index - 1); }

  friend bool operator==(const SentenceTable&, const SentenceTable&) = default;
};

struct Dialog {
  std::string id;
  std::vector<Utterance> turns;
  SentenceTable sentences;

  std::size_t sentence_count() const noexcept { return sentences.size(); }

  friend bool operator==(const Dialog&, const Dialog&) = default;
};

struct ExtractiveSummary {
  std::vector<std::size_t> indices;  // 1-based, no duplicates
  std::string text;

  friend bool operator==(const ExtractiveSummary&, const ExtractiveSummary&) = default;
};

struct LabeledExample {
  Dialog dialog;
  std::vector<ExtractiveSummary> references;

  friend bool operator==(const LabeledExample&, const LabeledExample&) = default;
};

struct DatasetSplit {
  std::vector<LabeledExample> train;
  std::vector<LabeledExample> validation;
  std::vector<LabeledExample> test;

  friend bool operator==(const DatasetSplit&, const DatasetSplit&) = default;
};

}  // namespace psumm
