#include <gtest/gtest.h>

#include <filesystem>

#include "psumm/cache.hpp"
#include "psumm/prompting.hpp"
#include "psumm/stubs.hpp"
#include "support.hpp"

using namespace psumm;
using psumm::testkit::toy_dialog;

namespace {

backends::CompletionRequest qa_request(const Dialog& d, std::size_t max_tokens = 64) {
  return {prompting::build_qa_prompt(d, {}, {4096, 64, 0}).text, max_tokens, true, 0.0};
}

}  // namespace

TEST(GoldLabeler, AnswersWithGoldIndices) {
  Dialog d = toy_dialog();
  stubs::GoldLabeler lab;
  lab.register_gold(d, segment::make_summary(d, {1, 4}));
  auto r = lab.complete(qa_request(d));
  EXPECT_EQ(r.text, "Customer: 1. Agent: 4.");
  backends::validate(r);
  auto a = prompting::parse_qa_answer(r, d.sentence_count());
  EXPECT_EQ(a.customer_indices, (std::vector<std::size_t>{1}));
  EXPECT_EQ(a.agent_indices, (std::vector<std::size_t>{4}));
  EXPECT_EQ(a.number_token_spans.size(), 2u);
  for (const auto& s : a.number_token_spans) {
    EXPECT_LT(s.logprob, 0.0);
    EXPECT_GT(s.logprob, -0.32);
  }
  EXPECT_EQ(lab.calls(), 1u);
  EXPECT_EQ(lab.complete(qa_request(d)), r);
}

TEST(GoldLabeler, UnknownDialogGivesUnparseableText) {
  stubs::GoldLabeler lab;
  auto r = lab.complete(qa_request(toy_dialog()));
  EXPECT_THROW(prompting::parse_qa_answer(r, 4), UnparseableAnswerError);
}

TEST(GoldLabeler, TokenLimitAndLogprobSupport) {
  Dialog d = toy_dialog();
  stubs::GoldLabeler small({.token_limit = 60});
  EXPECT_THROW(small.complete(qa_request(d)), TokenLimitError);
  stubs::GoldLabeler nolp({.supports_logprobs = false});
  EXPECT_THROW(nolp.complete(qa_request(d)), MissingLogprobsError);
}

TEST(GoldLabeler, CorruptionModes) {
  auto ex = testkit::random_examples(2, 30);
  stubs::GoldLabeler out({.seed = 1, .corruption_rate = 1.0, .corruption = stubs::Corruption::OutOfRange});
  stubs::GoldLabeler in({.seed = 1, .corruption_rate = 1.0, .corruption = stubs::Corruption::InRange});
  for (const auto& e : ex) {
    out.register_gold(e.dialog, e.references[0]);
    in.register_gold(e.dialog, e.references[0]);
  }
  for (const auto& e : ex) {
    EXPECT_THROW(prompting::parse_qa_answer(out.complete(qa_request(e.dialog)), e.dialog.sentence_count()),
                 OutOfRangeIndexError);
    EXPECT_NO_THROW(prompting::parse_qa_answer(in.complete(qa_request(e.dialog)), e.dialog.sentence_count()));
  }
}

TEST(HeuristicSummarizer, LongOneOfInput) {
  stubs::HeuristicSummarizer s;
  std::vector<backends::TrainingExample> train{{segment::render_plain(toy_dialog()), "x"}};
  auto h = s.train(train, 10, nlohmann::json::object());
  EXPECT_EQ(h.epochs_completed, 10u);
  EXPECT_EQ(h.trained_on, 1u);
  EXPECT_EQ(h.id.rfind("long1-", 0), 0u);
  EXPECT_EQ(s.summarize(h, segment::render_plain(toy_dialog()), 128),
            "Hi, my order 123 never arrived. I have issued a refund.");
  EXPECT_EQ(s.summarize(h, "", 128), "");
  EXPECT_EQ(s.train(train, 10, nlohmann::json::object()).id, h.id);
  EXPECT_NE(s.train(train, 9, nlohmann::json::object()).id, h.id);
  EXPECT_EQ(s.trainings(), 3u);
}

TEST(HeuristicSummarizer, Errors) {
  stubs::HeuristicSummarizer s;
  EXPECT_THROW(s.train({}, 10, nlohmann::json::object()), PreconditionError);
  std::vector<backends::TrainingExample> train{{"Customer: Hi.", "Hi."}};
  EXPECT_THROW(s.train(train, 0, nlohmann::json::object()), PreconditionError);
  EXPECT_THROW(s.summarize({"long1-nope", 0, 0}, "Customer: Hi.", 10), UnknownHandleError);
}

TEST(Cache, RoundTripAndMisses) {
  auto dir = std::filesystem::temp_directory_path() / "psumm_cache_test";
  std::filesystem::remove_all(dir);
  CompletionCache cache(dir);
  backends::CompletionResult r{"Customer: 1.", {{"Customer", -0.1}, {":", -0.1}, {" 1", -0.2}, {".", -0.1}}};
  EXPECT_FALSE(cache.get("d/1", "prompt"));
  cache.put("d/1", "prompt", r);
  EXPECT_EQ(cache.get("d/1", "prompt"), r);
  EXPECT_FALSE(cache.get("d/1", "other prompt"));
  EXPECT_FALSE(cache.get("d_1", "prompt"));
  // A corrupt entry is a miss, not an error.
  {
    std::ofstream f(cache.path_for("d/2", "p"));
    f << "{broken";
  }
  EXPECT_FALSE(cache.get("d/2", "p"));
  CompletionCache off;
  EXPECT_FALSE(off.enabled());
  off.put("x", "p", r);
  EXPECT_FALSE(off.get("x", "p"));
  std::filesystem::remove_all(dir);
}
