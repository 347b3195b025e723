// psumm: command-line front end for the pseudo-labelling toolkit.
//
//   psumm ingest     --input <file|dir> --output <canonical.jsonl>
//   psumm baseline   --data <file> --method lead1|lead2|long1 [--token-limit N]
//   psumm pseudolabel --config <file> [key=value ...] --output <candidates.jsonl>
//   psumm run        [--config <file>] [key=value | --key value ...] [--resume <run-dir>]
//   psumm evaluate   --data <file> --predictions <file> [--token-limit N]
//
// Exit status: 0 on success, 1 on data/config/backend errors, 2 on usage errors.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "psumm/config.hpp"
#include "psumm/corpus.hpp"
#include "psumm/heuristics.hpp"
#include "psumm/metrics.hpp"
#include "psumm/orchestrator.hpp"

using namespace psumm;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kUsage = 2;
constexpr const char* kRunConf = "run.conf";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::string pct(double f1) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * f1);
  return buf;
}

void print_scores(const metrics::EvalReport& r) {
  std::cout << "R-1=" << pct(r.rouge1) << " R-2=" << pct(r.rouge2) << " R-L=" << pct(r.rougeL)
            << " n=" << r.per_instance.size() << '\n';
}

// Accepts "key=value", "--key=value" and "--key value"; dashes in keys
// become underscores so --token-limit and token_limit are the same key.
config::KeyValues parse_overrides(const std::vector<std::string>& args) {
  config::KeyValues out;
  auto norm = [](std::string k) {
    while (!k.empty() && k.front() == '-') k.erase(k.begin());
    for (auto& ch : k)
      if (ch == '-') ch = '_';
    return k;
  };
  for (std::size_t i = 0; i < args.size(); ++i) {
    const auto& a = args[i];
    auto eq = a.find('=');
    if (eq != std::string::npos) {
      out.emplace_back(norm(a.substr(0, eq)), a.substr(eq + 1));
    } else if (a.starts_with("--")) {
      if (i + 1 >= args.size()) throw UsageError("option " + a + " needs a value");
      out.emplace_back(norm(a), args[++i]);
    } else {
      throw UsageError("unexpected argument '" + a + "'");
    }
  }
  return out;
}

// Later entries win; the result has each key once, in first-seen order.
config::KeyValues collapse(const config::KeyValues& kv) {
  config::KeyValues out;
  std::map<std::string, std::size_t> at;
  for (const auto& [k, v] : kv) {
    if (auto it = at.find(k); it != at.end()) {
      out[it->second].second = v;
    } else {
      at[k] = out.size();
      out.emplace_back(k, v);
    }
  }
  return out;
}

config::KeyValues read_conf(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw ConfigError("cannot open config file " + p.string());
  return config::parse_key_values(in);
}

DatasetSplit load_settings_dataset(const config::Settings& s) {
  if (s.dataset.empty()) throw ConfigError("dataset is required");
  return corpus::load_dataset(s.dataset, corpus::parse_format(s.dataset_format));
}

void log_line(std::string_view msg) { std::cerr << msg << '\n'; }

// ---------------------------------------------------------------------------

int cmd_ingest(const std::string& input, const std::string& format, const std::string& output, bool drop_unaligned) {
  corpus::ImportResult res;
  if (corpus::parse_format(format) == corpus::Format::TweetsummImport) {
    res = corpus::import_tweetsumm(input, {.drop_unaligned = drop_unaligned});
  } else {
    res.dataset = corpus::load_dataset(input, corpus::Format::Canonical);
  }
  for (const auto& why : res.drop_reasons) std::cerr << "dropped: " << why << '\n';
  if (!output.empty()) {
    fs::path out(output);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    std::ofstream f(out, std::ios::trunc);
    if (!f) throw Error("cannot write " + output);
    corpus::write_dataset(res.dataset, f);
  }
  std::cout << "train=" << res.dataset.train.size() << " val=" << res.dataset.validation.size()
            << " test=" << res.dataset.test.size() << '\n'
            << "alignment_failures=" << res.dropped << '\n';
  return 0;
}

int cmd_baseline(const std::string& data, const std::string& format, const std::string& method, std::size_t limit,
                 const std::string& output) {
  auto m = heuristics::parse_method(method);
  if (!m) throw UsageError("unknown method '" + method + "'");
  auto ds = corpus::load_dataset(data, corpus::parse_format(format));
  if (ds.test.empty()) throw Error("dataset has no test split");
  std::vector<ExtractiveSummary> preds;
  std::vector<std::vector<ExtractiveSummary>> refs;
  for (const auto& ex : ds.test) {
    preds.push_back(heuristics::apply(*m, ex.dialog));
    refs.push_back(ex.references);
  }
  auto rep = metrics::evaluate(preds, refs, limit);
  json j = metrics::to_json(rep);
  j["method"] = method;
  if (!output.empty()) write_json(output, j);
  print_scores(rep);
  return 0;
}

int cmd_pseudolabel(const std::optional<std::string>& conf, const std::vector<std::string>& extra,
                    const std::string& output) {
  auto s = config::load(conf ? std::optional<fs::path>(*conf) : std::nullopt, parse_overrides(extra));
  if (s.cycle.mode != orchestrator::Mode::LlmQa) throw ConfigError("pseudolabel needs mode llm-qa");
  auto ds = load_settings_dataset(s);
  auto b = config::make_backends(s, ds);
  auto pools = corpus::subsample_labeled(ds.train, s.cycle.fraction, s.cycle.seed);

  orchestrator::LabelerSetup setup;
  setup.shots = orchestrator::draw_shots(pools.labeled, s.cycle.shots, s.cycle.seed);
  setup.budget = {s.cycle.max_total_tokens, s.cycle.max_answer_tokens, setup.shots.size()};
  setup.score.normalize_by_count = s.cycle.normalize_score;
  setup.temperature = s.cycle.temperature;
  setup.failure_threshold = s.cycle.failure_threshold;
  setup.concurrency = s.cycle.concurrency;
  auto res = orchestrator::pseudolabel_all(pools.unlabeled, *b.labeler, setup, CompletionCache(s.cache_dir));

  fs::path out(output);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  std::ofstream f(out, std::ios::trunc);
  if (!f) throw Error("cannot write " + output);
  for (const auto& c : res.candidates) {
    json j = orchestrator::candidate_to_json(c);
    j["summary"] = c.summary.text;
    f << j.dump() << '\n';
  }
  for (const auto& fail : res.stats.failures) std::cerr << "failed: " << fail.dialog_id << ": " << fail.reason << '\n';
  std::cout << "requested=" << res.stats.requested << " labeled=" << res.stats.labeled << " failed=" << res.stats.failed
            << " cache_hits=" << res.stats.cache_hits << " shots=" << res.stats.shots_used << '\n';
  return 0;
}

int cmd_run(const std::optional<std::string>& conf, const std::vector<std::string>& extra,
            const std::optional<std::string>& resume, const std::string& report_path) {
  config::KeyValues kv;
  if (conf) {
    kv = read_conf(*conf);
  } else if (resume) {
    kv = read_conf(fs::path(*resume) / kRunConf);
  }
  for (auto& p : parse_overrides(extra)) kv.push_back(std::move(p));
  if (resume) kv.emplace_back("run_dir", *resume);
  kv = collapse(kv);

  auto s = config::load(std::nullopt, kv);
  auto ds = load_settings_dataset(s);
  auto b = config::make_backends(s, ds);

  orchestrator::RunOptions opts;
  opts.cache_dir = s.cache_dir;
  opts.run_dir = s.run_dir;
  opts.resume = resume.has_value();
  opts.log = log_line;
  if (!s.run_dir.empty()) {
    fs::create_directories(s.run_dir);
    std::ofstream rc(fs::path(s.run_dir) / kRunConf, std::ios::trunc);
    for (const auto& [k, v] : kv)
      if (k != "run_dir") rc << k << " = " << v << '\n';
  }

  auto report = orchestrator::run(s.cycle, ds, {b.labeler.get(), b.summarizer.get(), b.embedder.get()}, opts);
  json j = orchestrator::to_json(report);
  if (!report_path.empty()) {
    write_json(report_path, j);
  } else if (s.run_dir.empty()) {
    std::cout << j.dump(2) << '\n';
  }
  if (!report.cycles.empty()) {
    const auto& last = report.cycles.back();
    std::cout << "cycles=" << report.cycles.size() << " train=" << last.training_size << " R-1=" << pct(last.rouge1)
              << " R-2=" << pct(last.rouge2) << " R-L=" << pct(last.rougeL) << '\n';
  }
  return 0;
}

// Predictions are JSONL records {"id": ..., "summary": "..."} or
// {"id": ..., "indices": [...]}; every example of the split needs one.
int cmd_evaluate(const std::string& data, const std::string& format, const std::string& split,
                 const std::string& predictions, std::size_t limit, const std::string& output) {
  auto ds = corpus::load_dataset(data, corpus::parse_format(format));
  auto which = corpus::parse_split(split);
  if (!which) throw UsageError("unknown split '" + split + "'");
  const auto& examples = corpus::bucket(ds, *which);

  std::ifstream in(predictions);
  if (!in) throw Error("cannot open " + predictions);
  std::map<std::string, json> by_id;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(lineno, std::string("predictions: ") + e.what());
    }
    if (!j.is_object() || !j.contains("id") || !j["id"].is_string())
      throw ParseError(lineno, "predictions: missing string field 'id'");
    auto id = j["id"].get<std::string>();
    by_id[id] = std::move(j);
  }

  std::vector<std::string> preds;
  std::vector<std::vector<std::string>> refs;
  for (const auto& ex : examples) {
    auto it = by_id.find(ex.dialog.id);
    if (it == by_id.end()) throw ValidationError(ex.dialog.id, "no prediction");
    const json& p = it->second;
    if (p.contains("summary")) {
      preds.push_back(p["summary"].get<std::string>());
    } else if (p.contains("indices")) {
      preds.push_back(segment::make_summary(ex.dialog, p["indices"].get<std::vector<std::size_t>>()).text);
    } else {
      throw ValidationError(ex.dialog.id, "prediction has neither summary nor indices");
    }
    std::vector<std::string> r;
    for (const auto& s : ex.references) r.push_back(s.text);
    refs.push_back(std::move(r));
  }
  auto rep = metrics::evaluate_texts(preds, refs, {.token_limit = limit, .rouge = {}});
  if (!output.empty()) write_json(output, metrics::to_json(rep));
  print_scores(rep);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pseudo-labelling toolkit for extractive dialog summarization"};
  app.require_subcommand(1);

  std::string input, output, data, method, predictions, report_path;
  std::string format = "tweetsumm-import", data_format = "canonical-jsonl", split = "test";
  std::optional<std::string> conf, resume;
  std::vector<std::string> extra;
  std::size_t token_limit = 80;
  bool drop_unaligned = false;

  auto* ingest = app.add_subcommand("ingest", "Convert a TweetSumm export to canonical JSONL");
  ingest->add_option("--input", input, "TweetSumm file or directory")->required();
  ingest->add_option("--format", format, "tweetsumm-import or canonical-jsonl");
  ingest->add_option("--output", output, "Canonical JSONL to write");
  ingest->add_flag("--drop-unaligned", drop_unaligned, "Skip records whose summaries do not align");

  auto* baseline = app.add_subcommand("baseline", "Score a heuristic on the test split");
  baseline->add_option("--data", data, "Dataset path")->required();
  baseline->add_option("--data-format", data_format);
  baseline->add_option("--method", method, "lead1, lead2 or long1")
      ->required()
      ->check(CLI::IsMember({"lead1", "lead2", "long1"}));
  baseline->add_option("--token-limit", token_limit)->check(CLI::PositiveNumber);
  baseline->add_option("--output", output, "EvalReport JSON to write");

  auto* pseudo = app.add_subcommand("pseudolabel", "Pseudo-label the unlabelled pool once");
  pseudo->add_option("--config", conf, "key=value config file");
  pseudo->add_option("--output", output, "Candidate JSONL to write")->required();
  pseudo->allow_extras();

  auto* run = app.add_subcommand("run", "Run the self-training cycles");
  run->add_option("--config", conf, "key=value config file");
  run->add_option("--resume", resume, "Continue the run in this directory");
  run->add_option("--report", report_path, "RunReport JSON to write");
  run->allow_extras();

  auto* eval = app.add_subcommand("evaluate", "Score predictions against a split");
  eval->add_option("--data", data, "Dataset path")->required();
  eval->add_option("--data-format", data_format);
  eval->add_option("--split", split);
  eval->add_option("--predictions", predictions, "JSONL predictions")->required();
  eval->add_option("--token-limit", token_limit)->check(CLI::PositiveNumber);
  eval->add_option("--output", output, "EvalReport JSON to write");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kUsage;
  }

  try {
    if (*ingest) return cmd_ingest(input, format, output, drop_unaligned);
    if (*baseline) return cmd_baseline(data, data_format, method, token_limit, output);
    if (*pseudo) return cmd_pseudolabel(conf, pseudo->remaining(), output);
    if (*run) return cmd_run(conf, run->remaining(), resume, report_path);
    if (*eval) return cmd_evaluate(data, data_format, split, predictions, token_limit, output);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kUsage;
}
