#pragma once

// Flat key=value run configuration and backend construction.
//
//   # comment
//   mode = llm-qa
//   cycles = 10
//   labeler_url = https://labeler.example:8443
//
// Command-line overrides are applied after the file. The labeler credential
// comes only from the LABELER_API_KEY environment variable.
//
// Backend URLs may name an in-process stub instead of a server:
//   stub://oracle                         gold labeler over the dataset
//   stub://noisy?rate=0.3[&mode=out]      gold labeler with corrupted indices
//   stub://long1                          LONG-1 summarizer
//   stub://tfidf                          TF-IDF embedder over the dataset

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "psumm/errors.hpp"
#include "psumm/http.hpp"
#include "psumm/orchestrator.hpp"
#include "psumm/stubs.hpp"
#include "psumm/text.hpp"

namespace psumm::config {

using KeyValues = std::vector<std::pair<std::string, std::string>>;

struct Settings {
  orchestrator::CycleConfig cycle;
  std::string dataset;
  std::string dataset_format = "canonical-jsonl";
  std::string labeler_url;
  std::string trainer_url;
  std::string embedder_url;
  std::string cache_dir;
  std::string run_dir;
  std::string api_key;  // from the environment only
  std::ptrdiff_t max_in_flight = 4;
};

// Blank lines and lines starting with '#' are skipped. A repeated key is an
// error inside one file.
inline KeyValues parse_key_values(std::istream& in) {
  KeyValues out;
  std::set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t(text::trim(line));
    if (t.empty() || t.front() == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string::npos) throw ParseError(lineno, "expected key = value");
    std::string key(text::trim(std::string_view(t).substr(0, eq)));
    std::string value(text::trim(std::string_view(t).substr(eq + 1)));
    if (key.empty()) throw ParseError(lineno, "empty key");
    if (!seen.insert(key).second) throw ParseError(lineno, "duplicate key '" + key + "'");
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

namespace detail {

template <typename T>
T parse_number(std::string_view key, std::string_view v) {
  T out{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty())
    throw ConfigError("'" + std::string(key) + "' expects a number, got '" + std::string(v) + "'");
  return out;
}

inline bool parse_bool(std::string_view key, std::string_view v) {
  std::string l = text::lower(v);
  if (l == "true" || l == "1" || l == "yes" || l == "on") return true;
  if (l == "false" || l == "0" || l == "no" || l == "off") return false;
  throw ConfigError("'" + std::string(key) + "' expects true or false, got '" + std::string(v) + "'");
}

}  // namespace detail

inline void apply(Settings& s, std::string_view key, std::string_view value) {
  using detail::parse_bool;
  using detail::parse_number;
  auto& c = s.cycle;
  if (key == "mode") {
    auto m = orchestrator::parse_mode(value);
    if (!m) throw ConfigError("unknown mode '" + std::string(value) + "'");
    c.mode = *m;
  } else if (key == "selection") {
    auto sel = orchestrator::parse_selection(value);
    if (!sel) throw ConfigError("unknown selection '" + std::string(value) + "'");
    c.selection = *sel;
  } else if (key == "cycles") {
    c.cycles = parse_number<std::size_t>(key, value);
  } else if (key == "k_per_cycle" || key == "k") {
    c.k_per_cycle = parse_number<std::size_t>(key, value);
  } else if (key == "epochs_per_cycle") {
    c.epochs_per_cycle = parse_number<std::size_t>(key, value);
  } else if (key == "seed") {
    c.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "fraction") {
    c.fraction = parse_number<double>(key, value);
  } else if (key == "token_limit") {
    c.token_limit = parse_number<std::size_t>(key, value);
  } else if (key == "shots") {
    c.shots = parse_number<std::size_t>(key, value);
  } else if (key == "max_total_tokens") {
    c.max_total_tokens = parse_number<std::size_t>(key, value);
  } else if (key == "max_answer_tokens") {
    c.max_answer_tokens = parse_number<std::size_t>(key, value);
  } else if (key == "temperature") {
    c.temperature = parse_number<double>(key, value);
  } else if (key == "failure_threshold") {
    c.failure_threshold = parse_number<double>(key, value);
  } else if (key == "normalize_score") {
    c.normalize_score = parse_bool(key, value);
  } else if (key == "continue_training") {
    c.continue_training = parse_bool(key, value);
  } else if (key == "regenerate_pseudo_labels") {
    c.regenerate_pseudo_labels = parse_bool(key, value);
  } else if (key == "summary_max_tokens") {
    c.summary_max_tokens = parse_number<std::size_t>(key, value);
  } else if (key == "concurrency") {
    c.concurrency = parse_number<std::size_t>(key, value);
    s.max_in_flight = static_cast<std::ptrdiff_t>(c.concurrency);
  } else if (key == "train_config") {
    try {
      c.train_config = nlohmann::json::parse(value);
    } catch (const nlohmann::json::parse_error&) {
      throw ConfigError("'train_config' expects a JSON object");
    }
  } else if (key == "dataset") {
    s.dataset = value;
  } else if (key == "dataset_format") {
    s.dataset_format = value;
  } else if (key == "labeler_url") {
    s.labeler_url = value;
  } else if (key == "trainer_url") {
    s.trainer_url = value;
  } else if (key == "embedder_url") {
    s.embedder_url = value;
  } else if (key == "cache_dir") {
    s.cache_dir = value;
  } else if (key == "run_dir") {
    s.run_dir = value;
  } else if (key == "api_key" || key == "labeler_api_key") {
    throw ConfigError("credentials are read from LABELER_API_KEY, not from configuration");
  } else {
    throw ConfigError("unknown configuration key '" + std::string(key) + "'");
  }
}

inline void validate(const Settings& s) {
  orchestrator::validate(s.cycle);
  if (s.cycle.mode == orchestrator::Mode::LlmQa && s.labeler_url.empty())
    throw ConfigError("llm-qa mode requires labeler_url");
  if (s.trainer_url.empty()) throw ConfigError("trainer_url is required");
  if (s.embedder_url.empty()) throw ConfigError("embedder_url is required");
}

using EnvLookup = std::function<std::optional<std::string>(const char*)>;

inline std::optional<std::string> process_env(const char* name) {
  if (const char* v = std::getenv(name)) return std::string(v);
  return std::nullopt;
}

// File values first, then overrides; the result is validated.
inline Settings load(const std::optional<std::filesystem::path>& file, const KeyValues& overrides,
                     const EnvLookup& env = process_env) {
  Settings s;
  if (file) {
    std::ifstream in(*file);
    if (!in) throw ConfigError("cannot open config file " + file->string());
    for (const auto& [k, v] : parse_key_values(in)) apply(s, k, v);
  }
  for (const auto& [k, v] : overrides) apply(s, k, v);
  if (env)
    if (auto key = env("LABELER_API_KEY")) s.api_key = *key;
  validate(s);
  return s;
}

// ---------------------------------------------------------------------------
// Backends

struct StubUrl {
  std::string kind;
  std::vector<std::pair<std::string, std::string>> params;

  std::optional<std::string> param(std::string_view name) const {
    for (const auto& [k, v] : params)
      if (k == name) return v;
    return std::nullopt;
  }
};

inline std::optional<StubUrl> parse_stub_url(std::string_view url) {
  constexpr std::string_view scheme = "stub://";
  if (!url.starts_with(scheme)) return std::nullopt;
  url.remove_prefix(scheme.size());
  StubUrl out;
  auto q = url.find('?');
  out.kind = std::string(url.substr(0, q));
  if (q != std::string_view::npos) {
    std::string_view rest = url.substr(q + 1);
    while (!rest.empty()) {
      auto amp = rest.find('&');
      std::string_view kv = rest.substr(0, amp);
      auto eq = kv.find('=');
      out.params.emplace_back(std::string(kv.substr(0, eq)),
                              eq == std::string_view::npos ? std::string() : std::string(kv.substr(eq + 1)));
      if (amp == std::string_view::npos) break;
      rest.remove_prefix(amp + 1);
    }
  }
  return out;
}

// Owns whatever backends a Settings names.
struct BackendSet {
  std::unique_ptr<backends::CompletionBackend> labeler;
  std::unique_ptr<backends::SummarizerBackend> summarizer;
  std::unique_ptr<backends::Embedder> embedder;

  orchestrator::Backends view() const { return {labeler.get(), summarizer.get(), embedder.get()}; }
};

inline http::ClientOptions client_options(const Settings& s, const std::string& url, bool with_key) {
  http::ClientOptions o;
  o.base_url = url;
  if (with_key) o.api_key = s.api_key;
  o.max_in_flight = s.max_in_flight;
  return o;
}

inline bool is_http_url(std::string_view url) { return url.starts_with("http://") || url.starts_with("https://"); }

// Builds the labeler. Gold labelers are registered with the first reference
// of every example in the dataset.
inline std::unique_ptr<backends::CompletionBackend> make_labeler(const Settings& s, const DatasetSplit& data) {
  if (is_http_url(s.labeler_url))
    return std::make_unique<http::HttpCompletionBackend>(client_options(s, s.labeler_url, true));
  auto stub = parse_stub_url(s.labeler_url);
  if (!stub || (stub->kind != "oracle" && stub->kind != "noisy"))
    throw ConfigError("unsupported labeler_url '" + s.labeler_url + "'");
  stubs::LabelerOptions opts;
  opts.seed = s.cycle.seed;
  if (stub->kind == "noisy") {
    opts.corruption_rate = detail::parse_number<double>("rate", stub->param("rate").value_or("0.3"));
    auto mode = stub->param("mode").value_or("in");
    if (mode == "out") opts.corruption = stubs::Corruption::OutOfRange;
    else if (mode != "in") throw ConfigError("noisy labeler mode must be 'in' or 'out'");
  }
  auto labeler = std::make_unique<stubs::GoldLabeler>(opts);
  for (const auto* split : {&data.train, &data.validation, &data.test})
    for (const auto& ex : *split) labeler->register_gold(ex.dialog, ex.references.front());
  return labeler;
}

inline std::unique_ptr<backends::SummarizerBackend> make_summarizer(const Settings& s) {
  if (is_http_url(s.trainer_url))
    return std::make_unique<http::HttpSummarizerBackend>(client_options(s, s.trainer_url, false));
  auto stub = parse_stub_url(s.trainer_url);
  if (!stub || stub->kind != "long1") throw ConfigError("unsupported trainer_url '" + s.trainer_url + "'");
  return std::make_unique<stubs::HeuristicSummarizer>();
}

inline std::unique_ptr<backends::Embedder> make_embedder(const Settings& s, const DatasetSplit& data) {
  if (is_http_url(s.embedder_url))
    return std::make_unique<http::HttpEmbedder>(client_options(s, s.embedder_url, false));
  auto stub = parse_stub_url(s.embedder_url);
  if (!stub || stub->kind != "tfidf") throw ConfigError("unsupported embedder_url '" + s.embedder_url + "'");
  std::vector<Dialog> dialogs;
  for (const auto* split : {&data.train, &data.validation, &data.test})
    for (const auto& ex : *split) dialogs.push_back(ex.dialog);
  auto corpus = stubs::sentence_corpus(dialogs);
  return std::make_unique<stubs::TfidfEmbedder>(corpus);
}

inline BackendSet make_backends(const Settings& s, const DatasetSplit& data) {
  BackendSet b;
  if (s.cycle.mode == orchestrator::Mode::LlmQa) b.labeler = make_labeler(s, data);
  b.summarizer = make_summarizer(s);
  b.embedder = make_embedder(s, data);
  return b;
}

}  // namespace psumm::config
