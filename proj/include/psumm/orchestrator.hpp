#pragma once

// The C-cycle semi-supervised loop.
//
// Before the first cycle every unlabelled dialog gets one pseudo-label
// (from the completion backend, the current summarizer, or a heuristic,
// depending on mode). Each cycle then selects k candidates that were not
// selected before, moves them into the training pool, trains the
// summarizer on labelled + selected examples, and scores its test-set
// output after forcing it back onto dialog sentences.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "psumm/backend_types.hpp"
#include "psumm/cache.hpp"
#include "psumm/corpus.hpp"
#include "psumm/errors.hpp"
#include "psumm/heuristics.hpp"
#include "psumm/matching.hpp"
#include "psumm/metrics.hpp"
#include "psumm/parallel.hpp"
#include "psumm/prompting.hpp"
#include "psumm/random.hpp"
#include "psumm/scoring.hpp"
#include "psumm/segment.hpp"

namespace psumm::orchestrator {

using nlohmann::json;

enum class Mode { LlmQa, Vanilla, Lead1Iter, Long1Iter };
enum class Selection { TopK, RandomK };

inline std::string_view mode_name(Mode m) noexcept {
  switch (m) {
    case Mode::LlmQa: return "llm-qa";
    case Mode::Vanilla: return "vanilla";
    case Mode::Lead1Iter: return "lead1-iter";
    case Mode::Long1Iter: return "long1-iter";
  }
  return "llm-qa";
}

inline std::optional<Mode> parse_mode(std::string_view s) noexcept {
  if (s == "llm-qa") return Mode::LlmQa;
  if (s == "vanilla") return Mode::Vanilla;
  if (s == "lead1-iter") return Mode::Lead1Iter;
  if (s == "long1-iter") return Mode::Long1Iter;
  return std::nullopt;
}

inline std::string_view selection_name(Selection s) noexcept { return s == Selection::TopK ? "top-k" : "random-k"; }

inline std::optional<Selection> parse_selection(std::string_view s) noexcept {
  if (s == "top-k") return Selection::TopK;
  if (s == "random-k") return Selection::RandomK;
  return std::nullopt;
}

struct CycleConfig {
  std::size_t cycles = 10;
  std::size_t k_per_cycle = 16;
  std::size_t epochs_per_cycle = 10;
  Mode mode = Mode::LlmQa;
  std::optional<Selection> selection;  // unset: top-k for llm-qa, random-k otherwise
  std::uint64_t seed = 0;
  std::size_t token_limit = 80;
  std::size_t shots = 2;
  double fraction = 0.1;

  std::size_t max_total_tokens = 4096;
  std::size_t max_answer_tokens = 64;
  double temperature = 0.0;
  double failure_threshold = 0.5;
  bool normalize_score = false;

  bool continue_training = false;
  bool regenerate_pseudo_labels = false;  // vanilla only
  std::size_t summary_max_tokens = 128;
  std::size_t concurrency = 4;
  json train_config = json::object();

  Selection effective_selection() const noexcept {
    if (selection) return *selection;
    return mode == Mode::LlmQa ? Selection::TopK : Selection::RandomK;
  }
};

inline void validate(const CycleConfig& c) {
  if (c.cycles < 1) throw ConfigError("cycles must be >= 1");
  if (c.k_per_cycle < 1) throw ConfigError("k_per_cycle must be >= 1");
  if (c.epochs_per_cycle < 1) throw ConfigError("epochs_per_cycle must be >= 1");
  if (c.token_limit < 1) throw ConfigError("token_limit must be >= 1");
  if (!(c.fraction >= 0.0 && c.fraction <= 1.0)) throw ConfigError("fraction must be in [0, 1]");
  if (!prompting::is_allowed_shot_count(c.shots)) throw ConfigError("shots must be one of 0, 1, 2, 4, 8");
  if (c.max_answer_tokens >= c.max_total_tokens) throw ConfigError("max_answer_tokens must be < max_total_tokens");
  if (!(c.failure_threshold >= 0.0 && c.failure_threshold <= 1.0))
    throw ConfigError("failure_threshold must be in [0, 1]");
  if (c.concurrency < 1) throw ConfigError("concurrency must be >= 1");
  if (!c.train_config.is_object()) throw ConfigError("train_config must be a JSON object");
}

inline json to_json(const CycleConfig& c) {
  return {{"cycles", c.cycles},
          {"k_per_cycle", c.k_per_cycle},
          {"epochs_per_cycle", c.epochs_per_cycle},
          {"mode", mode_name(c.mode)},
          {"selection", selection_name(c.effective_selection())},
          {"seed", c.seed},
          {"token_limit", c.token_limit},
          {"shots", c.shots},
          {"fraction", c.fraction},
          {"max_total_tokens", c.max_total_tokens},
          {"max_answer_tokens", c.max_answer_tokens},
          {"temperature", c.temperature},
          {"failure_threshold", c.failure_threshold},
          {"normalize_score", c.normalize_score},
          {"continue_training", c.continue_training},
          {"regenerate_pseudo_labels", c.regenerate_pseudo_labels},
          {"summary_max_tokens", c.summary_max_tokens},
          {"train_config", c.train_config}};
}

struct Backends {
  backends::CompletionBackend* labeler = nullptr;  // llm-qa only
  backends::SummarizerBackend* summarizer = nullptr;
  backends::Embedder* embedder = nullptr;
};

// ---------------------------------------------------------------------------
// Pseudo-labelling

struct LabelFailure {
  std::string dialog_id;
  std::string reason;
};

struct PseudolabelStats {
  std::size_t requested = 0;
  std::size_t labeled = 0;
  std::size_t failed = 0;
  std::size_t cache_hits = 0;
  std::size_t shots_used = 0;
  std::vector<LabelFailure> failures;
};

struct LabelerSetup {
  std::vector<prompting::FewShotExample> shots;
  prompting::PromptBudget budget;
  prompting::PromptTemplates templates;
  scoring::ScoreOptions score;
  double temperature = 0.0;
  double failure_threshold = 0.5;
  std::size_t concurrency = 4;
};

struct PseudolabelResult {
  std::vector<scoring::PseudoLabelCandidate> candidates;
  PseudolabelStats stats;
};

// Seeded draw of in-context examples from the labelled pool. The count is
// the largest allowed shot count not above min(requested, pool size).
inline std::vector<prompting::FewShotExample> draw_shots(std::span<const LabeledExample> labeled, std::size_t requested,
                                                         std::uint64_t seed) {
  std::size_t n = prompting::clamp_shot_count(std::min(requested, labeled.size()));
  std::vector<std::size_t> order(labeled.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  auto eng = rnd::make_engine(seed, "draw_shots");
  rnd::shuffle(order, eng);
  std::vector<prompting::FewShotExample> out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& ex = labeled[order[i]];
    out.push_back(prompting::make_few_shot(ex.dialog, ex.references.front()));
  }
  return out;
}

// One completion per dialog (served from cache when possible), parsed into
// scored candidates. Dialogs whose answer cannot be used are reported in
// stats.failures and left out.
inline PseudolabelResult pseudolabel_all(std::span<const Dialog> unlabeled, backends::CompletionBackend& labeler,
                                         const LabelerSetup& setup, const CompletionCache& cache = CompletionCache()) {
  struct Slot {
    std::optional<scoring::PseudoLabelCandidate> candidate;
    std::string failure;
    bool cache_hit = false;
    std::size_t shots_used = 0;
  };
  std::vector<Slot> slots(unlabeled.size());
  prompting::TokenCounter counter = [&labeler](std::string_view s) { return labeler.tokens_in(s); };

  parallel_for(unlabeled.size(), setup.concurrency, [&](std::size_t i) {
    const Dialog& d = unlabeled[i];
    Slot& slot = slots[i];
    try {
      auto build = prompting::build_qa_prompt(d, setup.shots, setup.budget, counter, setup.templates);
      slot.shots_used = build.shots_used;
      backends::CompletionResult completion;
      if (auto hit = cache.get(d.id, build.text)) {
        completion = std::move(*hit);
        slot.cache_hit = true;
      } else {
        completion = labeler.complete({build.text, setup.budget.max_answer_tokens, true, setup.temperature});
        cache.put(d.id, build.text, completion);
      }
      auto answer = prompting::parse_qa_answer(completion, d.sentence_count());
      auto summary = prompting::reconstruct_summary(d, answer);
      double score = scoring::score_candidate(answer, setup.score);
      slot.candidate = scoring::PseudoLabelCandidate{d, std::move(answer), std::move(summary), score};
    } catch (const Error& e) {
      slot.failure = e.what();
    }
  });

  PseudolabelResult res;
  res.stats.requested = unlabeled.size();
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i].cache_hit) ++res.stats.cache_hits;
    res.stats.shots_used = std::max(res.stats.shots_used, slots[i].shots_used);
    if (slots[i].candidate) {
      res.candidates.push_back(std::move(*slots[i].candidate));
    } else {
      res.stats.failures.push_back({unlabeled[i].id, slots[i].failure});
    }
  }
  res.stats.labeled = res.candidates.size();
  res.stats.failed = res.stats.failures.size();
  if (res.stats.requested > 0 &&
      static_cast<double>(res.stats.failed) > setup.failure_threshold * static_cast<double>(res.stats.requested))
    throw LabelerFailureError(std::to_string(res.stats.failed) + " of " + std::to_string(res.stats.requested) +
                              " dialogs failed pseudo-labelling" +
                              (res.stats.failures.empty() ? "" : "; first: " + res.stats.failures.front().reason));
  return res;
}

// Candidate with no logprob evidence (score 0), used by the heuristic and
// vanilla modes.
inline scoring::PseudoLabelCandidate unscored_candidate(const Dialog& d, ExtractiveSummary summary) {
  prompting::ParsedAnswer ans;
  for (auto idx : summary.indices)
    (d.sentences.at(idx).speaker == Speaker::Customer ? ans.customer_indices : ans.agent_indices).push_back(idx);
  return {d, std::move(ans), std::move(summary), 0.0};
}

inline std::vector<scoring::PseudoLabelCandidate> heuristic_candidates(std::span<const Dialog> unlabeled,
                                                                       heuristics::Method method) {
  std::vector<scoring::PseudoLabelCandidate> out;
  out.reserve(unlabeled.size());
  for (const auto& d : unlabeled) out.push_back(unscored_candidate(d, heuristics::apply(method, d)));
  return out;
}

// Runs the summarizer and forces its output onto dialog sentences. An empty
// generation yields an empty summary.
inline std::vector<ExtractiveSummary> summarize_extractive(std::span<const Dialog> dialogs,
                                                           backends::SummarizerBackend& summarizer,
                                                           const backends::ModelHandle& model,
                                                           backends::Embedder& embedder, std::size_t max_tokens,
                                                           std::size_t concurrency) {
  std::vector<ExtractiveSummary> out(dialogs.size());
  parallel_for(dialogs.size(), concurrency, [&](std::size_t i) {
    std::string generated = summarizer.summarize(model, segment::render_plain(dialogs[i]), max_tokens);
    try {
      out[i] = matching::to_extractive(generated, dialogs[i], embedder);
    } catch (const EmptyGenerationError&) {
      out[i] = ExtractiveSummary{};
    }
  });
  return out;
}

inline std::vector<scoring::PseudoLabelCandidate> self_label(std::span<const Dialog> unlabeled,
                                                             backends::SummarizerBackend& summarizer,
                                                             const backends::ModelHandle& model,
                                                             backends::Embedder& embedder, std::size_t max_tokens,
                                                             std::size_t concurrency) {
  auto sums = summarize_extractive(unlabeled, summarizer, model, embedder, max_tokens, concurrency);
  std::vector<scoring::PseudoLabelCandidate> out;
  for (std::size_t i = 0; i < unlabeled.size(); ++i)
    if (!sums[i].indices.empty()) out.push_back(unscored_candidate(unlabeled[i], std::move(sums[i])));
  return out;
}

// ---------------------------------------------------------------------------
// Cycles

struct SelectedInfo {
  std::string id;
  std::vector<std::size_t> indices;
  double score = 0.0;
};

struct CycleReport {
  std::size_t cycle = 0;
  std::size_t training_size = 0;  // |labeled| + |selected| after the merge
  std::size_t new_selections = 0;
  std::vector<SelectedInfo> selected;
  std::string model_id;
  std::size_t test_instances = 0;
  double rouge1 = 0.0;
  double rouge2 = 0.0;
  double rougeL = 0.0;
};

struct RunState {
  corpus::Pools pools;
  std::vector<scoring::PseudoLabelCandidate> candidates;
  std::optional<backends::ModelHandle> model;
  std::vector<CycleReport> reports;
};

inline std::vector<backends::TrainingExample> training_examples(const corpus::Pools& pools) {
  std::vector<backends::TrainingExample> out;
  out.reserve(pools.training_size());
  for (const auto& ex : pools.labeled)
    out.push_back({segment::render_plain(ex.dialog), ex.references.front().text});
  for (const auto& c : pools.selected) out.push_back({segment::render_plain(c.dialog), c.summary.text});
  return out;
}

inline backends::ModelHandle train_on(const corpus::Pools& pools, const CycleConfig& cfg,
                                      backends::SummarizerBackend& summarizer,
                                      const std::optional<backends::ModelHandle>& previous) {
  auto examples = training_examples(pools);
  if (examples.empty()) throw PreconditionError("training set is empty: no labelled or selected examples");
  json tc = cfg.train_config;
  if (cfg.continue_training && previous) tc["continue_from"] = previous->id;
  return summarizer.train(examples, cfg.epochs_per_cycle, tc);
}

inline std::vector<scoring::PseudoLabelCandidate> select_for_cycle(const RunState& state, const CycleConfig& cfg,
                                                                   std::size_t cycle) {
  auto already = state.pools.selected_ids();
  if (cfg.effective_selection() == Selection::TopK)
    return scoring::select_top_k(state.candidates, cfg.k_per_cycle, already);
  return scoring::select_random_k(state.candidates, cfg.k_per_cycle, already,
                                  cfg.seed * 0x9e3779b97f4a7c15ULL + cycle);
}

inline metrics::EvalReport evaluate_model(std::span<const LabeledExample> test, const CycleConfig& cfg,
                                          const Backends& b, const backends::ModelHandle& model) {
  std::vector<Dialog> dialogs;
  std::vector<std::vector<ExtractiveSummary>> refs;
  for (const auto& ex : test) {
    dialogs.push_back(ex.dialog);
    refs.push_back(ex.references);
  }
  auto preds = summarize_extractive(dialogs, *b.summarizer, model, *b.embedder, cfg.summary_max_tokens, cfg.concurrency);
  return metrics::evaluate(preds, refs, cfg.token_limit);
}

// Select, merge, train, evaluate. On a backend error the state is left as
// it was before the call.
inline CycleReport run_cycle(RunState& state, const CycleConfig& cfg, const Backends& b,
                             std::span<const LabeledExample> test) {
  const std::size_t cycle = state.reports.size() + 1;
  auto chosen = select_for_cycle(state, cfg, cycle);
  corpus::Pools next = corpus::merge_pools(state.pools, chosen);
  backends::ModelHandle model = train_on(next, cfg, *b.summarizer, state.model);

  CycleReport rep;
  rep.cycle = cycle;
  rep.training_size = next.training_size();
  rep.new_selections = chosen.size();
  for (const auto& c : chosen) rep.selected.push_back({c.id(), c.summary.indices, c.score});
  rep.model_id = model.id;
  if (!test.empty()) {
    auto eval = evaluate_model(test, cfg, b, model);
    rep.test_instances = eval.per_instance.size();
    rep.rouge1 = eval.rouge1;
    rep.rouge2 = eval.rouge2;
    rep.rougeL = eval.rougeL;
  }
  state.pools = std::move(next);
  state.model = model;
  state.reports.push_back(rep);
  return rep;
}

// ---------------------------------------------------------------------------
// Reports and checkpoints

struct RunReport {
  CycleConfig config;
  std::size_t initial_labeled = 0;
  std::size_t initial_unlabeled = 0;
  std::size_t candidate_count = 0;
  PseudolabelStats labeling;
  std::vector<CycleReport> cycles;
  std::optional<backends::ModelHandle> final_model;
};

inline json to_json(const CycleReport& r) {
  json sel = json::array();
  for (const auto& s : r.selected) sel.push_back({{"id", s.id}, {"indices", s.indices}, {"score", s.score}});
  return {{"cycle", r.cycle},
          {"training_size", r.training_size},
          {"new_selections", r.new_selections},
          {"selected", sel},
          {"model_id", r.model_id},
          {"test_instances", r.test_instances},
          {"rouge1", r.rouge1},
          {"rouge2", r.rouge2},
          {"rougeL", r.rougeL}};
}

inline CycleReport cycle_report_from_json(const json& j) {
  CycleReport r;
  r.cycle = j.at("cycle").get<std::size_t>();
  r.training_size = j.at("training_size").get<std::size_t>();
  r.new_selections = j.at("new_selections").get<std::size_t>();
  for (const auto& s : j.at("selected"))
    r.selected.push_back({s.at("id").get<std::string>(), s.at("indices").get<std::vector<std::size_t>>(),
                          s.at("score").get<double>()});
  r.model_id = j.at("model_id").get<std::string>();
  r.test_instances = j.at("test_instances").get<std::size_t>();
  r.rouge1 = j.at("rouge1").get<double>();
  r.rouge2 = j.at("rouge2").get<double>();
  r.rougeL = j.at("rougeL").get<double>();
  return r;
}

inline json to_json(const PseudolabelStats& s) {
  json failures = json::array();
  for (const auto& f : s.failures) failures.push_back({{"id", f.dialog_id}, {"reason", f.reason}});
  return {{"requested", s.requested}, {"labeled", s.labeled},       {"failed", s.failed},
          {"cache_hits", s.cache_hits}, {"shots_used", s.shots_used}, {"failures", failures}};
}

inline PseudolabelStats stats_from_json(const json& j) {
  PseudolabelStats s;
  s.requested = j.at("requested").get<std::size_t>();
  s.labeled = j.at("labeled").get<std::size_t>();
  s.failed = j.at("failed").get<std::size_t>();
  s.cache_hits = j.at("cache_hits").get<std::size_t>();
  s.shots_used = j.at("shots_used").get<std::size_t>();
  for (const auto& f : j.at("failures"))
    s.failures.push_back({f.at("id").get<std::string>(), f.at("reason").get<std::string>()});
  return s;
}

inline json to_json(const RunReport& r) {
  json cycles = json::array();
  for (const auto& c : r.cycles) cycles.push_back(to_json(c));
  json model = nullptr;
  if (r.final_model)
    model = {{"id", r.final_model->id},
             {"trained_on", r.final_model->trained_on},
             {"epochs_completed", r.final_model->epochs_completed}};
  return {{"config", to_json(r.config)},
          {"initial_labeled", r.initial_labeled},
          {"initial_unlabeled", r.initial_unlabeled},
          {"candidate_count", r.candidate_count},
          {"labeling", to_json(r.labeling)},
          {"cycles", cycles},
          {"final_model", model}};
}

inline json candidate_to_json(const scoring::PseudoLabelCandidate& c) {
  json spans = json::array();
  for (const auto& s : c.answer.number_token_spans) spans.push_back({s.token_position, s.logprob});
  return {{"id", c.id()},
          {"customer", c.answer.customer_indices},
          {"agent", c.answer.agent_indices},
          {"spans", spans},
          {"indices", c.summary.indices},
          {"score", c.score}};
}

inline scoring::PseudoLabelCandidate candidate_from_json(const json& j, const Dialog& d) {
  scoring::PseudoLabelCandidate c;
  c.dialog = d;
  c.answer.customer_indices = j.at("customer").get<std::vector<std::size_t>>();
  c.answer.agent_indices = j.at("agent").get<std::vector<std::size_t>>();
  for (const auto& s : j.at("spans")) c.answer.number_token_spans.push_back({s.at(0).get<std::size_t>(), s.at(1).get<double>()});
  c.summary = segment::make_summary(d, j.at("indices").get<std::vector<std::size_t>>());
  c.score = j.at("score").get<double>();
  return c;
}

inline constexpr const char* kCheckpointFile = "checkpoint.json";
inline constexpr const char* kReportFile = "report.json";

inline void write_json_atomic(const std::filesystem::path& path, const json& j) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << j.dump(2) << '\n';
  }
  std::filesystem::rename(tmp, path);
}

inline void write_checkpoint(const std::filesystem::path& run_dir, const CycleConfig& cfg, const RunState& state,
                             const RunReport& partial) {
  std::filesystem::create_directories(run_dir);
  json cands = json::array();
  for (const auto& c : state.candidates) cands.push_back(candidate_to_json(c));
  json model = nullptr;
  if (state.model)
    model = {{"id", state.model->id},
             {"trained_on", state.model->trained_on},
             {"epochs_completed", state.model->epochs_completed}};
  json cycles = json::array();
  for (const auto& r : state.reports) cycles.push_back(to_json(r));
  json ck = {{"config", to_json(cfg)},    {"completed_cycles", state.reports.size()},
             {"candidates", cands},       {"cycles", cycles},
             {"model", model},            {"labeling", to_json(partial.labeling)}};
  write_json_atomic(run_dir / kCheckpointFile, ck);
}

struct RunOptions {
  std::filesystem::path cache_dir;  // empty: no completion cache
  std::filesystem::path run_dir;    // empty: no checkpoints
  bool resume = false;
  prompting::PromptTemplates templates;
  std::function<void(std::string_view)> log;
};

namespace detail {

inline void say(const RunOptions& o, const std::string& msg) {
  if (o.log) o.log(msg);
}

// Settings that must agree between a checkpoint and the resuming config.
inline json resume_key(const CycleConfig& c) {
  json j = to_json(c);
  j.erase("cycles");
  return j;
}

}  // namespace detail

// subsample -> pseudo-label -> C cycles. Deterministic for deterministic
// backends. With run_dir set, state is checkpointed after every cycle and
// resume continues after the last completed one.
inline RunReport run(const CycleConfig& cfg, const DatasetSplit& data, const Backends& b,
                     const RunOptions& opts = {}) {
  validate(cfg);
  if (!b.summarizer) throw ConfigError("a summarizer backend is required");
  if (!b.embedder) throw ConfigError("an embedder backend is required");
  if (cfg.mode == Mode::LlmQa && !b.labeler) throw ConfigError("llm-qa mode requires a labeler backend");

  RunReport report;
  report.config = cfg;
  RunState state;
  state.pools = corpus::subsample_labeled(data.train, cfg.fraction, cfg.seed);
  report.initial_labeled = state.pools.labeled.size();
  report.initial_unlabeled = state.pools.unlabeled.size();
  if (cfg.mode == Mode::Vanilla && state.pools.labeled.empty())
    throw ConfigError("vanilla mode needs at least one labelled example to train the first summarizer");

  std::map<std::string, const Dialog*> by_id;
  for (const auto& d : state.pools.unlabeled) by_id[d.id] = &d;

  std::optional<json> checkpoint;
  if (opts.resume) {
    if (opts.run_dir.empty()) throw ConfigError("resume requires a run directory");
    std::ifstream in(opts.run_dir / kCheckpointFile);
    if (!in) throw ConfigError("no checkpoint in " + opts.run_dir.string());
    checkpoint = json::parse(in);
    if (checkpoint->at("config").contains("cycles")) {
      json saved = checkpoint->at("config");
      saved.erase("cycles");
      if (saved != detail::resume_key(cfg)) throw ConfigError("checkpoint was written with a different configuration");
    }
  }

  if (checkpoint) {
    for (const auto& cj : checkpoint->at("candidates")) {
      auto it = by_id.find(cj.at("id").get<std::string>());
      if (it == by_id.end()) throw ConfigError("checkpoint names unknown dialog '" + cj.at("id").get<std::string>() + "'");
      state.candidates.push_back(candidate_from_json(cj, *it->second));
    }
    report.labeling = stats_from_json(checkpoint->at("labeling"));
    std::map<std::string, const scoring::PseudoLabelCandidate*> cand_by_id;
    for (const auto& c : state.candidates) cand_by_id[c.id()] = &c;
    for (const auto& rj : checkpoint->at("cycles")) {
      CycleReport r = cycle_report_from_json(rj);
      std::vector<scoring::PseudoLabelCandidate> chosen;
      for (const auto& s : r.selected) {
        auto it = cand_by_id.find(s.id);
        if (it == cand_by_id.end()) throw ConfigError("checkpoint selects unknown candidate '" + s.id + "'");
        chosen.push_back(*it->second);
      }
      state.pools = corpus::merge_pools(state.pools, chosen);
      state.reports.push_back(std::move(r));
    }
    if (const auto& m = checkpoint->at("model"); !m.is_null())
      state.model = backends::ModelHandle{m.at("id").get<std::string>(), m.at("trained_on").get<std::size_t>(),
                                          m.at("epochs_completed").get<std::size_t>()};
    detail::say(opts, "resumed after cycle " + std::to_string(state.reports.size()));
  } else {
    switch (cfg.mode) {
      case Mode::LlmQa: {
        LabelerSetup setup;
        setup.shots = draw_shots(state.pools.labeled, cfg.shots, cfg.seed);
        setup.budget = {cfg.max_total_tokens, cfg.max_answer_tokens, setup.shots.size()};
        setup.templates = opts.templates;
        setup.score.normalize_by_count = cfg.normalize_score;
        setup.temperature = cfg.temperature;
        setup.failure_threshold = cfg.failure_threshold;
        setup.concurrency = cfg.concurrency;
        auto res = pseudolabel_all(state.pools.unlabeled, *b.labeler, setup, CompletionCache(opts.cache_dir));
        state.candidates = std::move(res.candidates);
        report.labeling = std::move(res.stats);
        break;
      }
      case Mode::Lead1Iter:
        state.candidates = heuristic_candidates(state.pools.unlabeled, heuristics::Method::Lead1);
        break;
      case Mode::Long1Iter:
        state.candidates = heuristic_candidates(state.pools.unlabeled, heuristics::Method::Long1);
        break;
      case Mode::Vanilla: {
        auto initial = train_on(state.pools, cfg, *b.summarizer, std::nullopt);
        state.candidates = self_label(state.pools.unlabeled, *b.summarizer, initial, *b.embedder,
                                      cfg.summary_max_tokens, cfg.concurrency);
        state.model = initial;
        break;
      }
    }
    if (cfg.mode != Mode::LlmQa) {
      report.labeling.requested = state.pools.unlabeled.size();
      report.labeling.labeled = state.candidates.size();
      report.labeling.failed = report.labeling.requested - report.labeling.labeled;
    }
    detail::say(opts, std::to_string(state.candidates.size()) + " pseudo-labelled candidates from " +
                          std::to_string(state.pools.unlabeled.size()) + " unlabelled dialogs");
  }

  while (state.reports.size() < cfg.cycles) {
    if (cfg.mode == Mode::Vanilla && cfg.regenerate_pseudo_labels && !state.reports.empty()) {
      backends::ModelHandle current = *state.model;
      std::vector<scoring::PseudoLabelCandidate> fresh;
      try {
        fresh = self_label(state.pools.unlabeled, *b.summarizer, current, *b.embedder, cfg.summary_max_tokens,
                           cfg.concurrency);
      } catch (const UnknownHandleError&) {
        current = train_on(state.pools, cfg, *b.summarizer, std::nullopt);
        fresh = self_label(state.pools.unlabeled, *b.summarizer, current, *b.embedder, cfg.summary_max_tokens,
                           cfg.concurrency);
      }
      // Selected candidates keep the label they were selected with.
      std::vector<scoring::PseudoLabelCandidate> merged = state.pools.selected;
      for (auto& c : fresh) merged.push_back(std::move(c));
      state.candidates = std::move(merged);
    }
    const auto& rep = run_cycle(state, cfg, b, data.test);
    detail::say(opts, "cycle " + std::to_string(rep.cycle) + ": train=" + std::to_string(rep.training_size) +
                          " new=" + std::to_string(rep.new_selections) + " R-1=" + std::to_string(rep.rouge1) +
                          " R-2=" + std::to_string(rep.rouge2) + " R-L=" + std::to_string(rep.rougeL));
    report.candidate_count = state.candidates.size();
    if (!opts.run_dir.empty()) write_checkpoint(opts.run_dir, cfg, state, report);
  }

  report.candidate_count = state.candidates.size();
  report.cycles = state.reports;
  report.final_model = state.model;
  if (!opts.run_dir.empty()) write_json_atomic(opts.run_dir / kReportFile, to_json(report));
  return report;
}

}  // namespace psumm::orchestrator
