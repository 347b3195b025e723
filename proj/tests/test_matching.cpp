#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "psumm/matching.hpp"
#include "psumm/stubs.hpp"
#include "support.hpp"

using namespace psumm;
using backends::EmbeddingVector;
using psumm::testkit::toy_dialog;

namespace {

stubs::TfidfEmbedder toy_embedder() {
  std::vector<Dialog> ds{toy_dialog()};
  auto corpus = stubs::sentence_corpus(ds);
  return stubs::TfidfEmbedder(corpus);
}

// Fixed vectors per sentence text; lets tests steer the argmax.
class TableEmbedder : public backends::Embedder {
 public:
  std::map<std::string, std::vector<double>> table;
  std::size_t calls = 0;
  std::vector<EmbeddingVector> embed(std::span<const std::string> s) override {
    ++calls;
    std::vector<EmbeddingVector> out;
    for (const auto& x : s) {
      auto it = table.find(x);
      out.push_back({it == table.end() ? std::vector<double>{0, 0, 0} : it->second});
    }
    return out;
  }
};

}  // namespace

TEST(Cosine, IdentityOrthogonalAntipodal) {
  EmbeddingVector a{{1, 2, 3}}, b{{-3, 0, 1}}, neg{{-1, -2, -3}};
  EXPECT_DOUBLE_EQ(matching::cosine_similarity(a, a), 1.0);
  EXPECT_DOUBLE_EQ(matching::cosine_similarity(a, b), 0.0);
  EXPECT_DOUBLE_EQ(matching::cosine_similarity(a, neg), -1.0);
  EXPECT_DOUBLE_EQ(matching::cosine_distance(a, b), 1.0);
}

TEST(Cosine, Errors) {
  EXPECT_THROW(matching::cosine_similarity({{1, 2}}, {{1, 2, 3}}), DimensionMismatchError);
  EXPECT_THROW(matching::cosine_similarity({{0, 0}}, {{1, 2}}), ZeroVectorError);
}

TEST(Tfidf, HandComputedToyVectors) {
  auto emb = toy_embedder();
  // Every toy token occurs in exactly one of four sentences: idf = ln(5/2) + 1.
  const double idf = std::log(5.0 / 2.0) + 1.0;
  EXPECT_EQ(emb.dimension(), 6u + 3u + 3u + 5u);
  auto v = emb.embed_one("my package 123 did not arrive");
  // Only "my" and "123" are in vocabulary, with equal weight.
  double nonzero = 0;
  for (double x : v.values)
    if (x != 0.0) {
      ++nonzero;
      EXPECT_NEAR(x, idf / std::sqrt(2 * idf * idf), 1e-12);
    }
  EXPECT_EQ(nonzero, 2);
  auto s1 = emb.embed_one("Hi, my order 123 never arrived.");
  EXPECT_NEAR(matching::cosine_similarity(v, s1), 1.0 / std::sqrt(3.0), 1e-12);
}

TEST(Tfidf, DeterministicShapeAndDisjointZero) {
  auto emb = toy_embedder();
  std::vector<std::string> ab{"a", "b"};
  auto vs = emb.embed(ab);
  EXPECT_EQ(vs.size(), 2u);
  EXPECT_EQ(vs[0].dimension(), vs[1].dimension());
  EXPECT_EQ(emb.embed_one("can you help"), emb.embed_one("can you help"));
  EXPECT_DOUBLE_EQ(matching::cosine_similarity(emb.embed_one("can you help"), emb.embed_one("sorry about that")), 0.0);
  EXPECT_THROW(emb.embed({}), PreconditionError);
}

TEST(ToExtractive, VerbatimSentences) {
  auto emb = toy_embedder();
  Dialog d = toy_dialog();
  auto s = matching::to_extractive("Hi, my order 123 never arrived. I have issued a refund.", d, emb);
  EXPECT_EQ(s.indices, (std::vector<std::size_t>{1, 4}));
  EXPECT_EQ(s.text, "Hi, my order 123 never arrived. I have issued a refund.");
}

TEST(ToExtractive, ParaphraseMapsToSentenceOne) {
  auto emb = toy_embedder();
  Dialog d = toy_dialog();
  auto s = matching::to_extractive("my package 123 did not arrive", d, emb);
  EXPECT_EQ(s.indices, (std::vector<std::size_t>{1}));
}

TEST(ToExtractive, TwoSentencesNearestToSameIndexAreDeduped) {
  auto emb = toy_embedder();
  Dialog d = toy_dialog();
  auto s = matching::to_extractive("We are sorry about this. So sorry about all that!", d, emb);
  EXPECT_EQ(s.indices, (std::vector<std::size_t>{3}));
}

TEST(ToExtractive, EmptyGeneration) {
  auto emb = toy_embedder();
  Dialog d = toy_dialog();
  EXPECT_THROW(matching::to_extractive("   ", d, emb), EmptyGenerationError);
}

TEST(ToExtractive, OneEmbedCallPerSideAndTiesToLowestIndex) {
  Dialog d = segment::make_dialog("t", {{Speaker::Customer, "Alpha one. Beta two."}, {Speaker::Agent, "Gamma three."}});
  TableEmbedder emb;
  emb.table["Alpha one."] = {1, 0, 0};
  emb.table["Beta two."] = {1, 0, 0};
  emb.table["Gamma three."] = {0, 1, 0};
  emb.table["Something else."] = {1, 0.1, 0};
  emb.table["Other words!"] = {0, 1, 0.2};
  auto s = matching::to_extractive("Something else. Other words!", d, emb);
  EXPECT_EQ(emb.calls, 2u);
  EXPECT_EQ(s.indices, (std::vector<std::size_t>{1, 3}));
}

TEST(ToExtractive, ZeroVectorFallsBackToOverlap) {
  Dialog d = segment::make_dialog("t", {{Speaker::Customer, "Alpha one. Beta two."}, {Speaker::Agent, "Gamma three."}});
  TableEmbedder emb;  // every vector is zero
  auto s = matching::to_extractive("gamma three four", d, emb);
  EXPECT_EQ(s.indices, (std::vector<std::size_t>{3}));
  auto none = matching::to_extractive("Nothing shared", d, emb);
  EXPECT_EQ(none.indices, (std::vector<std::size_t>{1}));
}

TEST(ToExtractive, OutputIsVerbatimAndIdempotentOnRandomText) {
  auto eng = rnd::make_engine(8, "match");
  std::vector<Dialog> ds;
  for (int i = 0; i < 30; ++i) ds.push_back(testkit::random_dialog(eng, "m" + std::to_string(i)));
  auto corpus = stubs::sentence_corpus(ds);
  stubs::TfidfEmbedder emb(corpus);
  for (int i = 0; i < 150; ++i) {
    const Dialog& d = ds[i % ds.size()];
    std::string gen;
    for (std::size_t k = 1 + rnd::below(eng, 3); k > 0; --k) gen += testkit::random_sentence(eng) + " ";
    auto s = matching::to_extractive(gen, d, emb);
    std::set<std::string> texts;
    for (const auto& e : d.sentences.entries) texts.insert(e.text);
    for (auto idx : s.indices) EXPECT_TRUE(texts.count(d.sentences.at(idx).text));
    EXPECT_EQ(s, segment::make_summary(d, s.indices));
    EXPECT_EQ(matching::to_extractive(s.text, d, emb), s);
  }
}
