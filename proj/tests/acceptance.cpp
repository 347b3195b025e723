// Acceptance checks. One line per criterion:
//   PASS <name>: ...   FAIL <name>: ...   SKIP <name>: ...
// Exit status is 1 if anything failed, 77 if everything selected was
// skipped, else 0. --only <name> runs a single criterion.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fake_server.hpp"
#include "oracle_rouge.hpp"
#include "psumm/corpus.hpp"
#include "psumm/heuristics.hpp"
#include "psumm/http.hpp"
#include "psumm/matching.hpp"
#include "psumm/metrics.hpp"
#include "psumm/orchestrator.hpp"
#include "psumm/prompting.hpp"
#include "psumm/scoring.hpp"
#include "psumm/stubs.hpp"
#include "psumm/wire.hpp"
#include "support.hpp"

using namespace psumm;
namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

enum class Verdict { Pass, Fail, Skip };

struct Outcome {
  Verdict verdict = Verdict::Pass;
  std::string detail;
};

// Collects the first few mismatches so a FAIL line says what broke.
struct Check {
  std::size_t failures = 0;
  std::vector<std::string> notes;

  void expect(bool ok, const std::string& what) {
    if (ok) return;
    if (++failures <= 5) notes.push_back(what);
  }

  Outcome result(std::string summary) const {
    if (failures == 0) return {Verdict::Pass, std::move(summary)};
    std::string d = std::to_string(failures) + " mismatches";
    for (const auto& n : notes) d += "; " + n;
    return {Verdict::Fail, d};
  }
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int prec = 2) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

void within_time(Check& c, double secs, double limit) {
  c.expect(secs < limit, "runtime " + fmt(secs) + "s over " + fmt(limit, 0) + "s");
}

DatasetSplit random_dataset(std::size_t train, std::size_t test, std::uint64_t seed) {
  return {testkit::random_examples(seed, train, "tr"), {}, testkit::random_examples(seed + 1, test, "te")};
}

struct Stubs {
  stubs::GoldLabeler labeler;
  stubs::HeuristicSummarizer summarizer;
  std::vector<std::string> corpus;
  std::unique_ptr<stubs::TfidfEmbedder> embedder;

  explicit Stubs(const DatasetSplit& ds) {
    std::vector<Dialog> all;
    for (const auto* part : {&ds.train, &ds.validation, &ds.test})
      for (const auto& ex : *part) {
        labeler.register_gold(ex.dialog, ex.references.front());
        all.push_back(ex.dialog);
      }
    corpus = stubs::sentence_corpus(all);
    embedder = std::make_unique<stubs::TfidfEmbedder>(corpus);
  }

  orchestrator::Backends view() { return {&labeler, &summarizer, embedder.get()}; }
};

// ---------------------------------------------------------------------------
// Heuristic baselines on the public test split

Outcome heuristic_table() {
  const char* dir = std::getenv("PSUMM_TWEETSUMM");
  if (!dir || !*dir) return {Verdict::Skip, "set PSUMM_TWEETSUMM to the TweetSumm data directory"};
  auto t0 = Clock::now();
  auto imported = corpus::import_tweetsumm(dir, {.drop_unaligned = true});
  const auto& test = imported.dataset.test;
  if (test.empty()) return {Verdict::Fail, "no test split found under " + std::string(dir)};

  struct Row {
    const char* name;
    heuristics::Method method;
    double r1, r2, rl;
  };
  const Row rows[] = {{"LEAD-1", heuristics::Method::Lead1, 40.89, 34.22, 38.74},
                      {"LEAD-2", heuristics::Method::Lead2, 53.51, 43.27, 47.76},
                      {"LONG-1", heuristics::Method::Long1, 54.47, 46.56, 50.58}};
  constexpr double kTol = 3.0;
  Check c;
  std::string got;
  for (const auto& row : rows) {
    std::vector<ExtractiveSummary> preds;
    std::vector<std::vector<ExtractiveSummary>> refs;
    for (const auto& ex : test) {
      preds.push_back(heuristics::apply(row.method, ex.dialog));
      refs.push_back(ex.references);
    }
    auto rep = metrics::evaluate(preds, refs, 80);
    double r[3] = {100 * rep.rouge1, 100 * rep.rouge2, 100 * rep.rougeL};
    double want[3] = {row.r1, row.r2, row.rl};
    const char* metric[3] = {"R-1", "R-2", "R-L"};
    for (int m = 0; m < 3; ++m)
      c.expect(std::abs(r[m] - want[m]) <= kTol, std::string(row.name) + " " + metric[m] + " " + fmt(r[m]) +
                                                      " vs " + fmt(want[m]));
    got += std::string(got.empty() ? "" : ", ") + row.name + " " + fmt(r[0]) + "/" + fmt(r[1]) + "/" + fmt(r[2]);
  }
  double secs = seconds_since(t0);
  within_time(c, secs, 60);
  return c.result(got + " on " + std::to_string(test.size()) + " dialogs (" + std::to_string(imported.dropped) +
                  " unaligned dropped), " + fmt(secs) + "s");
}

// ---------------------------------------------------------------------------
// ROUGE against brute-force enumeration

Outcome rouge_oracle() {
  auto t0 = Clock::now();
  auto eng = rnd::make_engine(1000, "rouge-acceptance");
  const metrics::Tokens vocab{"a", "b", "c", "d", "e", "f"};
  Check c;
  for (int i = 0; i < 1000; ++i) {
    metrics::Tokens cand, ref;
    for (std::size_t k = rnd::below(eng, 9); k > 0; --k) cand.push_back(vocab[rnd::below(eng, vocab.size())]);
    for (std::size_t k = rnd::below(eng, 9); k > 0; --k) ref.push_back(vocab[rnd::below(eng, vocab.size())]);
    for (std::size_t n = 1; n <= 2; ++n) {
      auto got = metrics::rouge_n(cand, ref, n);
      auto want = oracle::rouge_n(cand, ref, n);
      c.expect(got.precision == want.p && got.recall == want.r && got.f1 == want.f,
               "rouge-" + std::to_string(n) + " pair " + std::to_string(i));
    }
    auto gl = metrics::rouge_l(cand, ref);
    auto wl = oracle::rouge_l(cand, ref);
    c.expect(gl.precision == wl.p && gl.recall == wl.r && gl.f1 == wl.f, "rouge-l pair " + std::to_string(i));

    if (!cand.empty()) {
      c.expect(metrics::rouge_n(cand, cand, 1).f1 == 1.0 && metrics::rouge_l(cand, cand).f1 == 1.0,
               "identity pair " + std::to_string(i));
      if (cand.size() >= 2) c.expect(metrics::rouge_n(cand, cand, 2).f1 == 1.0, "identity bigram " + std::to_string(i));
      metrics::Tokens other;
      for (const auto& t : cand) other.push_back(t + "x");
      c.expect(metrics::rouge_n(cand, other, 1).f1 == 0.0 && metrics::rouge_n(cand, other, 2).f1 == 0.0 &&
                   metrics::rouge_l(cand, other).f1 == 0.0,
               "disjoint pair " + std::to_string(i));
    }
  }
  double secs = seconds_since(t0);
  within_time(c, secs, 10);
  return c.result("1000 pairs exact, " + fmt(secs) + "s");
}

// ---------------------------------------------------------------------------
// to_extractive output is verbatim and a fixed point

std::string perturb(rnd::Engine& eng, const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> words;
  for (std::string w; in >> w;) words.push_back(w);
  if (words.size() > 2) words.erase(words.begin() + static_cast<std::ptrdiff_t>(rnd::below(eng, words.size() - 1)));
  std::string out;
  for (const auto& w : words) out += (out.empty() ? "" : " ") + w;
  for (auto& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return out;
}

Outcome extractiveness() {
  auto t0 = Clock::now();
  auto eng = rnd::make_engine(500, "extractive-acceptance");
  std::vector<Dialog> dialogs;
  for (int i = 0; i < 50; ++i) dialogs.push_back(testkit::random_dialog(eng, "x" + std::to_string(i)));
  auto corpus = stubs::sentence_corpus(dialogs);
  stubs::TfidfEmbedder emb(corpus);
  Check c;
  std::size_t by_kind[3] = {0, 0, 0};
  for (int i = 0; i < 500; ++i) {
    const Dialog& d = dialogs[static_cast<std::size_t>(i) % dialogs.size()];
    std::string gen;
    for (std::size_t k = 1 + rnd::below(eng, 3); k > 0; --k) {
      const auto& pick = d.sentences.entries[rnd::below(eng, d.sentence_count())].text;
      std::size_t kind = rnd::below(eng, 3);
      ++by_kind[kind];
      std::string piece = kind == 0 ? pick : kind == 1 ? perturb(eng, pick) : testkit::random_sentence(eng);
      gen += (gen.empty() ? "" : " ") + piece;
    }
    auto s = matching::to_extractive(gen, d, emb);
    std::set<std::string> texts;
    for (const auto& e : d.sentences.entries) texts.insert(e.text);
    c.expect(!s.indices.empty(), "empty output for pair " + std::to_string(i));
    for (auto idx : s.indices)
      c.expect(texts.count(d.sentences.at(idx).text) > 0, "non-verbatim sentence in pair " + std::to_string(i));
    c.expect(s == segment::make_summary(d, s.indices), "text does not match indices in pair " + std::to_string(i));
    c.expect(matching::to_extractive(s.text, d, emb) == s, "not idempotent on pair " + std::to_string(i));
  }
  double secs = seconds_since(t0);
  within_time(c, secs, 30);
  return c.result("500 pairs (" + std::to_string(by_kind[0]) + " verbatim, " + std::to_string(by_kind[1]) +
                  " perturbed, " + std::to_string(by_kind[2]) + " unrelated pieces), " + fmt(secs) + "s");
}

// ---------------------------------------------------------------------------
// Selection and pool growth

std::vector<scoring::PseudoLabelCandidate> random_candidates(rnd::Engine& eng, std::size_t n, std::string prefix) {
  auto ex = testkit::random_examples(rnd::below(eng, 1u << 30), n, std::move(prefix));
  std::vector<scoring::PseudoLabelCandidate> out;
  for (auto& e : ex) {
    scoring::PseudoLabelCandidate c;
    c.dialog = e.dialog;
    c.summary = e.references.front();
    // Coarse scores so ties are common.
    c.score = -0.25 * static_cast<double>(rnd::below(eng, 12));
    out.push_back(std::move(c));
  }
  rnd::shuffle(out, eng);
  return out;
}

Outcome selection_laws() {
  auto t0 = Clock::now();
  constexpr std::size_t k = 16, C = 10;
  auto eng = rnd::make_engine(16, "selection-acceptance");
  Check c;
  std::size_t trials = 0;
  for (std::size_t pool_size : {40u, 100u, 159u, 160u, 161u, 300u, 792u}) {
    for (bool top : {true, false}) {
      ++trials;
      auto cands = random_candidates(eng, pool_size, "p");
      corpus::Pools pools;
      pools.labeled = testkit::random_examples(rnd::below(eng, 1000), 1 + rnd::below(eng, 90), "L");
      for (const auto& cd : cands) pools.unlabeled.push_back(cd.dialog);
      const std::size_t base = pools.labeled.size();
      std::string tag = (top ? "top-k" : "random-k") + std::string(" |D_P|=") + std::to_string(pool_size);
      for (std::size_t cycle = 1; cycle <= C; ++cycle) {
        auto taken = pools.selected_ids();
        auto chosen = top ? scoring::select_top_k(cands, k, taken)
                          : scoring::select_random_k(cands, k, taken, 99 + cycle);
        for (const auto& ch : chosen) c.expect(!taken.count(ch.id()), tag + " reselected " + ch.id());
        if (top) {
          std::set<std::string> picked;
          double worst = 0.0;
          for (const auto& ch : chosen) {
            picked.insert(ch.id());
            worst = std::min(worst, ch.score);
          }
          for (const auto& other : cands)
            if (!taken.count(other.id()) && !picked.count(other.id()))
              c.expect(other.score <= worst, tag + " skipped a better candidate " + other.id());
        }
        pools = corpus::merge_pools(pools, chosen);
        c.expect(pools.training_size() == base + std::min(cycle * k, pool_size),
                 tag + " cycle " + std::to_string(cycle) + " size " + std::to_string(pools.training_size()));
        c.expect(pools.total() == base + pool_size, tag + " pools lost or duplicated dialogs");
      }
    }
  }

  // The same law through the orchestrator with stub backends.
  auto ds = random_dataset(880, 0, 5);
  Stubs s(ds);
  orchestrator::CycleConfig cfg;
  cfg.cycles = C;
  cfg.k_per_cycle = k;
  cfg.epochs_per_cycle = 1;
  cfg.shots = 0;
  auto rep = orchestrator::run(cfg, ds, s.view());
  std::set<std::string> seen;
  for (const auto& cyc : rep.cycles) {
    c.expect(cyc.training_size == rep.initial_labeled + std::min(cyc.cycle * k, rep.candidate_count),
             "orchestrator cycle " + std::to_string(cyc.cycle) + " size " + std::to_string(cyc.training_size));
    for (const auto& sel : cyc.selected) c.expect(seen.insert(sel.id).second, "orchestrator reselected " + sel.id);
  }
  c.expect(rep.cycles.size() == C, "orchestrator ran " + std::to_string(rep.cycles.size()) + " cycles");
  double secs = seconds_since(t0);
  return c.result(std::to_string(trials) + " pools x " + std::to_string(C) + " cycles, k=16; orchestrator |D_L|=" +
                  std::to_string(rep.initial_labeled) + " -> " +
                  std::to_string(rep.cycles.empty() ? 0 : rep.cycles.back().training_size) + ", " + fmt(secs) + "s");
}

// ---------------------------------------------------------------------------
// Whole loop with stubs

Outcome end_to_end() {
  auto t0 = Clock::now();
  auto ds = random_dataset(30, 10, 30);
  orchestrator::CycleConfig cfg;
  cfg.cycles = 2;
  cfg.seed = 11;
  cfg.epochs_per_cycle = 2;

  auto run_dir = fs::temp_directory_path() / "psumm_acceptance_e2e";
  fs::remove_all(run_dir);
  std::string first, second;
  {
    Stubs s(ds);
    orchestrator::RunOptions opts;
    opts.run_dir = run_dir;
    first = orchestrator::to_json(orchestrator::run(cfg, ds, s.view(), opts)).dump(2);
  }
  {
    Stubs s(ds);
    second = orchestrator::to_json(orchestrator::run(cfg, ds, s.view())).dump(2);
  }
  Check c;
  c.expect(first == second, "RunReport differs between two runs");

  std::map<std::string, const LabeledExample*> gold;
  for (const auto& ex : ds.train) gold[ex.dialog.id] = &ex;
  std::ifstream in(run_dir / orchestrator::kCheckpointFile);
  json ck = json::parse(in);
  std::size_t checked = 0;
  auto gold_f1 = [&](const std::string& id, const std::vector<std::size_t>& indices) {
    const auto& ex = *gold.at(id);
    auto pred = segment::make_summary(ex.dialog, indices);
    std::vector<std::string> refs{ex.references.front().text};
    return metrics::score_instance(pred.text, refs, {.token_limit = 80, .rouge = {}}).rouge1.f1;
  };
  for (const auto& cand : ck.at("candidates")) {
    auto id = cand.at("id").get<std::string>();
    auto idx = cand.at("indices").get<std::vector<std::size_t>>();
    c.expect(idx == gold.at(id)->references.front().indices, "pseudo-label for " + id + " differs from gold");
    c.expect(gold_f1(id, idx) == 1.0, "pseudo-label ROUGE-1 for " + id + " below 1.0");
    ++checked;
  }
  auto report = json::parse(first);
  const auto& cycle1 = report.at("cycles").at(0).at("selected");
  for (const auto& sel : cycle1) {
    auto id = sel.at("id").get<std::string>();
    c.expect(gold_f1(id, sel.at("indices").get<std::vector<std::size_t>>()) == 1.0, "cycle-1 selection " + id);
  }
  c.expect(checked == ds.train.size() - report.at("initial_labeled").get<std::size_t>(),
           "expected a candidate for every unlabelled dialog, got " + std::to_string(checked));
  fs::remove_all(run_dir);
  double secs = seconds_since(t0);
  within_time(c, secs, 20);
  return c.result("30 dialogs, C=2, identical reports, " + std::to_string(checked) + " pseudo-labels equal gold (" +
                  std::to_string(cycle1.size()) + " selected in cycle 1), " + fmt(secs) + "s");
}

// ---------------------------------------------------------------------------
// Parser on a fixed set of answers

// Leading whitespace joins the following run of digits, letters or a single
// other character, roughly as a BPE tokenizer would split these answers.
std::vector<backends::TokenLogprob> tokenize_answer(const std::string& s) {
  std::vector<backends::TokenLogprob> out;
  auto cls = [](unsigned char ch) { return std::isdigit(ch) ? 0 : std::isalpha(ch) ? 1 : 2; };
  std::size_t i = 0;
  while (i < s.size()) {
    std::size_t j = i;
    while (j < s.size() && std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j < s.size()) {
      int k = cls(static_cast<unsigned char>(s[j]));
      ++j;
      if (k != 2)
        while (j < s.size() && cls(static_cast<unsigned char>(s[j])) == k) ++j;
    }
    out.push_back({s.substr(i, j - i), -0.01 * static_cast<double>(out.size() + 1)});
    i = j;
  }
  return out;
}

Outcome parser_robustness() {
  std::ifstream in(fs::path(PSUMM_FIXTURE_DIR) / "parser_answers.json");
  if (!in) return {Verdict::Fail, "missing parser_answers.json fixture"};
  json cases = json::parse(in);
  Check c;
  std::map<std::string, std::size_t> tally;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& tc = cases[i];
    std::string text = tc.at("text");
    std::string want = tc.at("outcome");
    std::string label = "#" + std::to_string(i + 1) + " (" + tc.at("note").get<std::string>() + ")";
    backends::CompletionResult r{text, {}};
    if (tc.value("logprobs", true)) r.tokens = tokenize_answer(text);
    std::string got;
    try {
      auto ans = prompting::parse_qa_answer(r, tc.at("sentences").get<std::size_t>());
      got = "ok";
      if (want == "ok") {
        c.expect(ans.customer_indices == tc.at("customer").get<std::vector<std::size_t>>() &&
                     ans.agent_indices == tc.at("agent").get<std::vector<std::size_t>>(),
                 label + " wrong indices");
        c.expect(ans.number_token_spans.size() == ans.index_count(), label + " span count");
        for (const auto& sp : ans.number_token_spans)
          c.expect(sp.token_position < r.tokens.size() && sp.logprob == r.tokens[sp.token_position].logprob,
                   label + " span logprob");
      }
    } catch (const OutOfRangeIndexError&) {
      got = "out_of_range";
    } catch (const UnparseableAnswerError&) {
      got = "unparseable";
    } catch (const MissingLogprobsError&) {
      got = "missing_logprobs";
    } catch (const std::exception& e) {
      got = std::string("unexpected exception: ") + e.what();
    }
    c.expect(got == want, label + " gave " + got + ", documented " + want);
    ++tally[got];
  }
  c.expect(cases.size() == 25, "fixture has " + std::to_string(cases.size()) + " answers");
  std::string summary = std::to_string(cases.size()) + " answers:";
  for (const auto& [k, v] : tally) summary += " " + k + "=" + std::to_string(v);
  return c.result(summary);
}

// ---------------------------------------------------------------------------
// What stands in for the hosted-model results: wire contract conformance.

Outcome desk_scale_substitute() {
  auto t0 = Clock::now();
  Check c;
  const fs::path wire_dir = fs::path(PSUMM_FIXTURE_DIR) / "wire";
  auto load = [](const fs::path& p) {
    std::ifstream in(p);
    return json::parse(in);
  };
  using Fn = std::function<json(const json&)>;
  const std::map<std::string, Fn> parsers = {
      {"complete_request", [](const json& j) { return wire::complete_request(wire::parse_complete_request(j)); }},
      {"complete_response", [](const json& j) { return wire::complete_response(wire::parse_complete_response(j)); }},
      {"train_request", [](const json& j) { return wire::train_request(wire::parse_train_request(j)); }},
      {"train_response", [](const json& j) { return wire::train_response(wire::parse_train_response(j)); }},
      {"summarize_request", [](const json& j) { return wire::summarize_request(wire::parse_summarize_request(j)); }},
      {"summarize_response", [](const json& j) { return wire::summarize_response(wire::parse_summarize_response(j)); }},
      {"embed_request", [](const json& j) { return wire::embed_request(wire::parse_embed_request(j)); }},
      {"embed_response", [](const json& j) { return wire::embed_response(wire::parse_embed_response(j).vectors); }},
      {"error", [](const json& j) { return wire::error_body(wire::parse_error_body(j)); }},
  };
  std::size_t valid = 0, invalid = 0;
  for (const auto& [name, fn] : parsers) {
    auto p = wire_dir / (name + ".json");
    json j = load(p);
    try {
      c.expect(fn(j) == j, name + " does not round-trip");
    } catch (const std::exception& e) {
      c.expect(false, name + ": " + e.what());
    }
    ++valid;
  }
  for (const auto& e : fs::directory_iterator(wire_dir / "invalid")) {
    std::string stem = e.path().stem().string();
    const Fn* best = nullptr;
    std::size_t best_len = 0;
    for (const auto& [name, fn] : parsers)
      if (stem.rfind(name, 0) == 0 && name.size() > best_len) {
        best = &fn;
        best_len = name.size();
      }
    if (!best) {
      c.expect(false, "no parser for " + stem);
      continue;
    }
    bool rejected = false;
    try {
      (*best)(load(e.path()));
    } catch (const wire::SchemaError&) {
      rejected = true;
    } catch (const std::exception&) {
    }
    c.expect(rejected, stem + " was not rejected as a schema error");
    ++invalid;
  }

  // A full llm-qa run through the HTTP adapters must equal the in-process run.
  auto ds = random_dataset(40, 8, 77);
  orchestrator::CycleConfig cfg;
  cfg.cycles = 2;
  cfg.k_per_cycle = 8;
  cfg.epochs_per_cycle = 3;
  cfg.seed = 4;
  std::string local, remote;
  {
    Stubs s(ds);
    local = orchestrator::to_json(orchestrator::run(cfg, ds, s.view())).dump();
  }
  {
    Stubs s(ds);
    testkit::FakeBackend server;
    server.labeler = &s.labeler;
    server.summarizer = &s.summarizer;
    server.embedder = s.embedder.get();
    server.queue_fault("/v1/complete", {503});
    server.queue_fault("/v1/embed", {429});
    http::ClientOptions o;
    o.base_url = server.url();
    o.retry.initial_backoff = std::chrono::milliseconds(1);
    o.retry.max_backoff = std::chrono::milliseconds(4);
    http::HttpCompletionBackend labeler(o);
    http::HttpSummarizerBackend summarizer(o);
    http::HttpEmbedder embedder(o);
    remote = orchestrator::to_json(orchestrator::run(cfg, ds, {&labeler, &summarizer, &embedder})).dump();
  }
  c.expect(local == remote, "RunReport over HTTP differs from the in-process run");
  double secs = seconds_since(t0);
  return c.result("scores that need a hosted completion model and GPU fine-tuning are not reproduced here; "
                  "substituted by the suites above plus contract conformance: " +
                  std::to_string(valid) + " valid and " + std::to_string(invalid) +
                  " invalid wire samples, HTTP run identical to in-process run, " + fmt(secs) + "s");
}

const std::vector<std::pair<std::string, std::function<Outcome()>>>& criteria() {
  static const std::vector<std::pair<std::string, std::function<Outcome()>>> all = {
      {"heuristic_table", heuristic_table},     {"rouge_oracle", rouge_oracle},
      {"extractiveness", extractiveness},       {"selection_laws", selection_laws},
      {"end_to_end", end_to_end},               {"parser_robustness", parser_robustness},
      {"desk_scale_substitute", desk_scale_substitute},
  };
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  std::string only;
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) {
      only = argv[++i];
    } else {
      std::cerr << "usage: psumm_acceptance [--only <criterion>]\n";
      return 2;
    }
  }
  std::size_t ran = 0, failed = 0, skipped = 0;
  for (const auto& [name, fn] : criteria()) {
    if (!only.empty() && name != only) continue;
    ++ran;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {Verdict::Fail, std::string("exception: ") + e.what()};
    }
    const char* tag = o.verdict == Verdict::Pass ? "PASS" : o.verdict == Verdict::Fail ? "FAIL" : "SKIP";
    std::cout << tag << ' ' << name << ": " << o.detail << std::endl;
    if (o.verdict == Verdict::Fail) ++failed;
    if (o.verdict == Verdict::Skip) ++skipped;
  }
  if (ran == 0) {
    std::cerr << "unknown criterion '" << only << "'\n";
    return 2;
  }
  if (failed) return 1;
  if (skipped == ran) return 77;
  return 0;
}
