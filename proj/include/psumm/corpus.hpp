#pragma once

// Dataset loading (canonical JSONL and TweetSumm import), labelled /
// unlabelled subsampling, and pool transitions across cycles.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "psumm/errors.hpp"
#include "psumm/random.hpp"
#include "psumm/scoring.hpp"
#include "psumm/segment.hpp"
#include "psumm/types.hpp"

namespace psumm::corpus {

enum class Format { Canonical, TweetsummImport };

inline Format parse_format(std::string_view name) {
  if (name == "canonical-jsonl" || name == "canonical") return Format::Canonical;
  if (name == "tweetsumm-import" || name == "tweetsumm") return Format::TweetsummImport;
  throw UnknownFormatError("unknown dataset format '" + std::string(name) + "'");
}

enum class SplitName { Train, Validation, Test };

inline std::string_view split_key(SplitName s) noexcept {
  switch (s) {
    case SplitName::Train: return "train";
    case SplitName::Validation: return "validation";
    case SplitName::Test: return "test";
  }
  return "train";
}

inline std::optional<SplitName> parse_split(std::string_view s) noexcept {
  if (s == "train") return SplitName::Train;
  if (s == "validation" || s == "valid" || s == "val" || s == "dev") return SplitName::Validation;
  if (s == "test") return SplitName::Test;
  return std::nullopt;
}

inline std::vector<LabeledExample>& bucket(DatasetSplit& ds, SplitName s) {
  switch (s) {
    case SplitName::Train: return ds.train;
    case SplitName::Validation: return ds.validation;
    case SplitName::Test: return ds.test;
  }
  return ds.train;
}

inline const std::vector<LabeledExample>& bucket(const DatasetSplit& ds, SplitName s) {
  return bucket(const_cast<DatasetSplit&>(ds), s);
}

// ---------------------------------------------------------------------------
// Canonical JSONL
//   {"id": str, "split": "train"|"validation"|"test",
//    "turns": [{"speaker": "customer"|"agent", "text": str}],
//    "summaries": [[int, ...], ...]}

inline nlohmann::json to_json(const LabeledExample& ex, SplitName split) {
  nlohmann::json turns = nlohmann::json::array();
  for (const auto& t : ex.dialog.turns) turns.push_back({{"speaker", speaker_key(t.speaker)}, {"text", t.text}});
  nlohmann::json sums = nlohmann::json::array();
  for (const auto& s : ex.references) sums.push_back(s.indices);
  return {{"id", ex.dialog.id}, {"split", split_key(split)}, {"turns", turns}, {"summaries", sums}};
}

inline void write_dataset(const DatasetSplit& ds, std::ostream& out) {
  for (auto s : {SplitName::Train, SplitName::Validation, SplitName::Test})
    for (const auto& ex : bucket(ds, s)) out << to_json(ex, s).dump() << '\n';
}

namespace detail {

inline void check_unique(const DatasetSplit& ds) {
  std::set<std::string> ids;
  for (const auto* part : {&ds.train, &ds.validation, &ds.test})
    for (const auto& ex : *part)
      if (!ids.insert(ex.dialog.id).second) throw ValidationError(ex.dialog.id, "duplicate dialog id");
}

template <typename Fn>
void for_each_line(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(lineno, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ParseError(lineno, "record is not a JSON object");
    fn(j, lineno);
  }
}

template <typename T>
T field(const nlohmann::json& j, const char* key, std::size_t lineno) {
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(lineno, std::string("missing field '") + key + "'");
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ParseError(lineno, std::string("field '") + key + "' has the wrong type");
  }
}

}  // namespace detail

inline DatasetSplit read_canonical(std::istream& in) {
  DatasetSplit ds;
  std::size_t records = 0;
  detail::for_each_line(in, [&](const nlohmann::json& j, std::size_t lineno) {
    auto id = detail::field<std::string>(j, "id", lineno);
    auto split_name = detail::field<std::string>(j, "split", lineno);
    auto split = parse_split(split_name);
    if (!split) throw ParseError(lineno, "unknown split '" + split_name + "'");
    auto turns_j = detail::field<nlohmann::json>(j, "turns", lineno);
    if (!turns_j.is_array()) throw ParseError(lineno, "field 'turns' must be an array");
    std::vector<Utterance> turns;
    for (const auto& t : turns_j) {
      if (!t.is_object()) throw ParseError(lineno, "turn is not an object");
      auto sp_name = detail::field<std::string>(t, "speaker", lineno);
      auto sp = parse_speaker(sp_name);
      if (!sp) throw ValidationError(id, "unknown speaker '" + sp_name + "'");
      turns.push_back({*sp, detail::field<std::string>(t, "text", lineno)});
    }
    auto sums = detail::field<std::vector<std::vector<long long>>>(j, "summaries", lineno);
    Dialog d = segment::make_dialog(id, std::move(turns));
    if (sums.empty()) throw ValidationError(id, "no reference summaries");
    LabeledExample ex{std::move(d), {}};
    for (const auto& s : sums) {
      std::vector<std::size_t> idx;
      for (auto v : s) {
        if (v < 1) throw ValidationError(id, "summary index " + std::to_string(v) + " is not positive");
        idx.push_back(static_cast<std::size_t>(v));
      }
      if (idx.empty()) throw ValidationError(id, "empty reference summary");
      ex.references.push_back(segment::make_summary(ex.dialog, std::move(idx)));
    }
    bucket(ds, *split).push_back(std::move(ex));
    ++records;
  });
  if (records == 0) throw ParseError(0, "dataset contains no records");
  detail::check_unique(ds);
  return ds;
}

// ---------------------------------------------------------------------------
// TweetSumm import. One record per line as written by the TweetSumm
// processor:
//   {"dialog": {"dialog_id": str,
//               "turns": [{"is_agent": bool, "sentences": [str]}]},
//    "summaries": {"extractive_summaries": [[{"is_agent": bool,
//                                              "sentences": [str]}]], ...}}
// A directory holds one file per split (name containing train / valid /
// test); a single file needs a top-level "split" field per record.

struct ImportOptions {
  // Drop records whose summaries fail alignment instead of failing the load.
  bool drop_unaligned = false;
};

struct ImportResult {
  DatasetSplit dataset;
  std::size_t dropped = 0;
  std::vector<std::string> drop_reasons;
};

namespace detail {

inline LabeledExample import_tweetsumm_record(const nlohmann::json& j, std::size_t lineno) {
  auto dialog_j = field<nlohmann::json>(j, "dialog", lineno);
  auto id = field<std::string>(dialog_j, "dialog_id", lineno);
  auto turns_j = field<nlohmann::json>(dialog_j, "turns", lineno);
  if (!turns_j.is_array()) throw ParseError(lineno, "dialog.turns must be an array");
  std::vector<Utterance> turns;
  for (const auto& t : turns_j) {
    bool agent = field<bool>(t, "is_agent", lineno);
    auto sents = field<std::vector<std::string>>(t, "sentences", lineno);
    std::string joined;
    for (const auto& s : sents) {
      auto tr = text::trim(s);
      if (tr.empty()) continue;
      if (!joined.empty()) joined += ' ';
      joined += tr;
    }
    if (joined.empty()) continue;
    turns.push_back({agent ? Speaker::Agent : Speaker::Customer, std::move(joined)});
  }
  Dialog d = segment::make_dialog(id, std::move(turns));
  LabeledExample ex{std::move(d), {}};
  auto sums_j = field<nlohmann::json>(j, "summaries", lineno);
  auto ext = sums_j.find("extractive_summaries");
  if (ext == sums_j.end() || !ext->is_array()) throw ValidationError(id, "no extractive summaries");
  for (const auto& summary : *ext) {
    if (!summary.is_array()) throw ParseError(lineno, "extractive summary must be an array");
    std::vector<std::string> sentences;
    for (const auto& part : summary)
      for (const auto& s : field<std::vector<std::string>>(part, "sentences", lineno)) sentences.push_back(s);
    if (sentences.empty()) continue;
    try {
      ex.references.push_back(segment::make_summary(ex.dialog, segment::align_sentences(sentences, ex.dialog.sentences)));
    } catch (const AlignmentError& e) {
      throw ValidationError(id, e.what());
    } catch (const PreconditionError& e) {
      throw ValidationError(id, e.what());
    }
  }
  if (ex.references.empty()) throw ValidationError(id, "no usable extractive summaries");
  return ex;
}

inline void import_stream(std::istream& in, std::optional<SplitName> fixed_split, const ImportOptions& opts,
                          ImportResult& res) {
  detail::for_each_line(in, [&](const nlohmann::json& j, std::size_t lineno) {
    std::optional<SplitName> split = fixed_split;
    if (auto it = j.find("split"); it != j.end() && it->is_string()) split = parse_split(it->get<std::string>());
    if (!split) throw ParseError(lineno, "record has no recognizable split");
    try {
      bucket(res.dataset, *split).push_back(import_tweetsumm_record(j, lineno));
    } catch (const ValidationError& e) {
      if (!opts.drop_unaligned) throw;
      ++res.dropped;
      res.drop_reasons.push_back(e.what());
    } catch (const EmptyDialogError& e) {
      if (!opts.drop_unaligned) throw;
      ++res.dropped;
      res.drop_reasons.push_back(e.what());
    }
  });
}

inline std::optional<SplitName> split_from_filename(const std::filesystem::path& p) {
  std::string name = text::lower(p.filename().string());
  if (name.find("train") != std::string::npos) return SplitName::Train;
  if (name.find("valid") != std::string::npos || name.find("dev") != std::string::npos) return SplitName::Validation;
  if (name.find("test") != std::string::npos) return SplitName::Test;
  return std::nullopt;
}

}  // namespace detail

inline ImportResult import_tweetsumm(const std::filesystem::path& path, const ImportOptions& opts = {}) {
  ImportResult res;
  if (std::filesystem::is_directory(path)) {
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(path))
      if (e.is_regular_file() && detail::split_from_filename(e.path()) && e.path().extension() == ".jsonl")
        files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw ParseError(0, "no train/valid/test .jsonl files in " + path.string());
    for (const auto& f : files) {
      std::ifstream in(f);
      if (!in) throw Error("cannot open " + f.string());
      detail::import_stream(in, detail::split_from_filename(f), opts, res);
    }
  } else {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    detail::import_stream(in, std::nullopt, opts, res);
  }
  std::size_t total = res.dataset.train.size() + res.dataset.validation.size() + res.dataset.test.size();
  if (total == 0) throw ParseError(0, "import produced no records");
  detail::check_unique(res.dataset);
  return res;
}

inline DatasetSplit load_dataset(const std::filesystem::path& path, Format format) {
  if (format == Format::TweetsummImport) return import_tweetsumm(path).dataset;
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return read_canonical(in);
}

// ---------------------------------------------------------------------------
// Pools

struct Pools {
  std::vector<LabeledExample> labeled;
  std::vector<Dialog> unlabeled;
  std::vector<scoring::PseudoLabelCandidate> selected;

  std::size_t total() const noexcept { return labeled.size() + unlabeled.size() + selected.size(); }
  // |labeled ∪ selected|, the training set of the next cycle.
  std::size_t training_size() const noexcept { return labeled.size() + selected.size(); }

  scoring::IdSet selected_ids() const {
    scoring::IdSet ids;
    for (const auto& c : selected) ids.insert(c.id());
    return ids;
  }

  friend bool operator==(const Pools&, const Pools&) = default;
};

// Throws PreconditionError when a dialog id sits in more than one pool.
inline void validate(const Pools& p) {
  std::set<std::string> ids;
  auto add = [&](const std::string& id) {
    if (!ids.insert(id).second) throw PreconditionError("dialog '" + id + "' appears in more than one pool");
  };
  for (const auto& e : p.labeled) add(e.dialog.id);
  for (const auto& d : p.unlabeled) add(d.id);
  for (const auto& c : p.selected) add(c.id());
}

// floor(fraction * |train|) labelled examples by seeded sampling without
// replacement; the rest lose their labels. Both pools keep input order.
inline Pools subsample_labeled(std::span<const LabeledExample> train, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw PreconditionError("fraction must be in [0, 1]");
  const std::size_t n = train.size();
  auto m = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
  m = std::min(m, n);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  auto eng = rnd::make_engine(seed, "subsample_labeled");
  rnd::shuffle(order, eng);
  std::vector<bool> chosen(n, false);
  for (std::size_t i = 0; i < m; ++i) chosen[order[i]] = true;
  Pools p;
  for (std::size_t i = 0; i < n; ++i) {
    if (chosen[i])
      p.labeled.push_back(train[i]);
    else
      p.unlabeled.push_back(train[i].dialog);
  }
  return p;
}

// Moves newly selected dialogs from unlabelled to selected.
inline Pools merge_pools(const Pools& pools, std::span<const scoring::PseudoLabelCandidate> newly_selected) {
  Pools out = pools;
  auto already = pools.selected_ids();
  std::set<std::string> incoming;
  for (const auto& c : newly_selected) {
    if (already.count(c.id()) || !incoming.insert(c.id()).second)
      throw DuplicateSelectionError("dialog '" + c.id() + "' is already selected");
  }
  std::vector<Dialog> remaining;
  std::set<std::string> found;
  for (auto& d : out.unlabeled) {
    if (incoming.count(d.id))
      found.insert(d.id);
    else
      remaining.push_back(std::move(d));
  }
  if (found.size() != incoming.size()) {
    for (const auto& id : incoming)
      if (!found.count(id)) throw PreconditionError("dialog '" + id + "' is not in the unlabeled pool");
  }
  out.unlabeled = std::move(remaining);
  out.selected.insert(out.selected.end(), newly_selected.begin(), newly_selected.end());
  return out;
}

}  // namespace psumm::corpus
