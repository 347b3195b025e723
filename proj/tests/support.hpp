#pragma once

// Shared fixtures for the unit and acceptance tests.

#include <algorithm>
#include <cstddef>
#include <cstdio>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "psumm/random.hpp"
#include "psumm/segment.hpp"
#include "psumm/types.hpp"

namespace psumm::testkit {

inline Dialog toy_dialog(std::string id = "toy") {
  return segment::make_dialog(std::move(id), {{Speaker::Customer, "Hi, my order 123 never arrived. Can you help?"},
                                              {Speaker::Agent, "Sorry about that. I have issued a refund."}});
}

inline const std::vector<std::string>& word_pool() {
  static const std::vector<std::string> words = {
      "order",   "package", "refund",  "delivery", "account", "password", "flight",  "ticket",  "seat",
      "battery", "screen",  "charger", "invoice",  "payment", "card",     "store",   "manager", "tracking",
      "number",  "address", "email",   "phone",    "update",  "app",      "login",   "error",   "message",
      "today",   "week",    "again",   "still",    "never",   "already",  "please",  "thanks",  "sorry",
      "check",   "send",    "reset",   "cancel",   "change",  "arrive",   "help",    "issue",   "late",
      "broken",  "missing", "wrong",   "new",      "old",     "quick",    "long",    "support", "team"};
  return words;
}

// A sentence of 3..max_words pool words, capitalized, ending with '.', '?'
// or '!'. Never contains a sentence boundary of its own.
inline std::string random_sentence(rnd::Engine& eng, std::size_t max_words = 12) {
  const auto& pool = word_pool();
  std::size_t n = 3 + rnd::below(eng, max_words - 2);
  std::string s;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) s += ' ';
    s += pool[rnd::below(eng, pool.size())];
  }
  s[0] = static_cast<char>(s[0] - 'a' + 'A');
  static const char enders[] = {'.', '.', '.', '?', '!'};
  s += enders[rnd::below(eng, sizeof enders)];
  return s;
}

// Alternating customer/agent turns of 1..3 sentences each; sentence texts
// are unique within the dialog.
inline Dialog random_dialog(rnd::Engine& eng, std::string id, std::size_t min_turns = 2, std::size_t max_turns = 6) {
  std::size_t turns = min_turns + rnd::below(eng, max_turns - min_turns + 1);
  std::set<std::string> used;
  std::vector<Utterance> utts;
  for (std::size_t t = 0; t < turns; ++t) {
    std::size_t k = 1 + rnd::below(eng, 3);
    std::string text;
    for (std::size_t i = 0; i < k; ++i) {
      std::string s;
      do s = random_sentence(eng);
      while (!used.insert(s).second);
      if (!text.empty()) text += ' ';
      text += s;
    }
    utts.push_back({t % 2 == 0 ? Speaker::Customer : Speaker::Agent, std::move(text)});
  }
  return segment::make_dialog(std::move(id), std::move(utts));
}

// Gold summary: one or two sentences per role, chosen by seed.
inline ExtractiveSummary random_gold(rnd::Engine& eng, const Dialog& d) {
  std::vector<std::size_t> cust, agent;
  for (const auto& s : d.sentences.entries) (s.speaker == Speaker::Customer ? cust : agent).push_back(s.index);
  std::vector<std::size_t> idx;
  for (auto* role : {&cust, &agent}) {
    if (role->empty()) continue;
    std::size_t take = 1 + rnd::below(eng, std::min<std::size_t>(2, role->size()));
    rnd::shuffle(*role, eng);
    for (std::size_t i = 0; i < take; ++i) idx.push_back((*role)[i]);
  }
  return segment::make_summary(d, idx);
}

inline std::vector<LabeledExample> random_examples(std::uint64_t seed, std::size_t n, std::string prefix = "d") {
  auto eng = rnd::make_engine(seed, "random_examples");
  std::vector<LabeledExample> out;
  for (std::size_t i = 0; i < n; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04zu", i);
    Dialog d = random_dialog(eng, prefix + buf);
    ExtractiveSummary gold = random_gold(eng, d);
    out.push_back({std::move(d), {std::move(gold)}});
  }
  return out;
}

}  // namespace psumm::testkit
