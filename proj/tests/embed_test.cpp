#include <cmath>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "dprag/embed.hpp"
#include "dprag/error.hpp"
#include "dprag/rng.hpp"

namespace dprag {
namespace {

double brute_cosine(const std::vector<double>& a, const std::vector<double>& b) {
  long double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<long double>(a[i]) * b[i];
    na += static_cast<long double>(a[i]) * a[i];
    nb += static_cast<long double>(b[i]) * b[i];
  }
  return static_cast<double>(dot / std::sqrt(na * nb));
}

TEST(Cosine, HandValues) {
  EXPECT_DOUBLE_EQ(cosine_similarity(Embedding({3, 4}), Embedding({3, 4})), 1.0);
  EXPECT_DOUBLE_EQ(cosine_similarity(Embedding({1, 0}), Embedding({0, 1})), 0.0);
  EXPECT_NEAR(cosine_similarity(Embedding({1, 0}), Embedding({1, 1})),
              0.70710678, 1e-8);
  EXPECT_NEAR(cosine_similarity(Embedding({1, 0}), Embedding({1, 1})),
              brute_cosine({1, 0}, {1, 1}), 1e-15);
}

TEST(Cosine, DimensionMismatch) {
  try {
    cosine_similarity(Embedding({1, 0}), Embedding({1, 0, 0}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
}

TEST(Embedding, RejectsDegenerateVectors) {
  EXPECT_THROW(Embedding({}), Error);
  EXPECT_THROW(Embedding({0.0, 0.0}), Error);
  EXPECT_THROW(Embedding({1.0, std::nan("")}), Error);
  EXPECT_THROW(Embedding({1.0, INFINITY}), Error);
}

TEST(Cosine, SymmetricScaleInvariantAndClamped) {
  RngState rng(5);
  for (int i = 0; i < 500; ++i) {
    std::vector<double> a(7), b(7);
    for (auto& x : a) x = rng.uniform() * 2 - 1;
    for (auto& x : b) x = rng.uniform() * 2 - 1;
    const Embedding ea(a), eb(b);
    const double ab = cosine_similarity(ea, eb);
    EXPECT_EQ(ab, cosine_similarity(eb, ea));
    std::vector<double> scaled(a);
    const double lambda = 1e-3 + rng.uniform() * 1e3;
    for (auto& x : scaled) x *= lambda;
    EXPECT_NEAR(cosine_similarity(Embedding(scaled), eb), ab, 1e-12);
    EXPECT_NEAR(ab, brute_cosine(a, b), 1e-12);
    EXPECT_LE(std::abs(ab), 1.0);
    EXPECT_LE(cosine_similarity(ea, Embedding(scaled)), 1.0);
  }
}

TEST(Scores, AffineRescaling) {
  const auto s = SimilarityScores::from_raw({{"a", -1.0}, {"b", 0.0}, {"c", 1.0}});
  EXPECT_EQ(s.rescaled.at("a"), 0.0);
  EXPECT_EQ(s.rescaled.at("b"), 0.5);
  EXPECT_EQ(s.rescaled.at("c"), 1.0);
  EXPECT_EQ(rescale_cosine(0.2), 0.6);
}

TEST(ToyEmbedder, Deterministic) {
  const ToyEmbedder e(64, 1);
  EXPECT_EQ(e.embed_one("hello world").vector(), e.embed_one("hello world").vector());
  EXPECT_EQ(e.embed_one("a b").vector(), e.embed_one("b a").vector());
  EXPECT_EQ(e.embed_one("Hello, WORLD!").vector(), e.embed_one("hello world").vector());
  EXPECT_NEAR(e.embed_one("some text here").norm(), 1.0, 1e-12);
  EXPECT_NE(ToyEmbedder(64, 2).embed_one("hello world").vector(),
            e.embed_one("hello world").vector());
}

TEST(ToyEmbedder, EmptyTextIsAnError) {
  const ToyEmbedder e(16);
  try {
    e.embed_one("  ...  ");
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::kEmptyText);
  }
}

TEST(ToyEmbedder, DisjointVocabulariesAreNearlyOrthogonal) {
  const ToyEmbedder e(256, 0);
  RngState rng(77);
  auto random_text = [&](char prefix) {
    std::string t;
    for (int w = 0; w < 20; ++w) {
      t += prefix;
      for (int c = 0; c < 6; ++c) t += static_cast<char>('a' + rng.uniform() * 26);
      t += ' ';
    }
    return t;
  };
  for (int i = 0; i < 100; ++i) {
    const auto a = e.embed_one(random_text('p'));
    const auto b = e.embed_one(random_text('q'));
    const double c = cosine_similarity(a, b);
    EXPECT_LE(std::abs(c), 0.2) << i;
    EXPECT_NEAR(c, brute_cosine(a.vector(), b.vector()), 1e-12);
  }
}

TEST(ScoreCorpus, GoldenTriple) {
  Corpus corpus = ingest({{"d1", "u1", "the cat sat on the mat"},
                          {"d2", "u2", "a dog chased the cat"},
                          {"d3", "u3", "stock prices fell sharply today"}},
                         DuplicatePolicy::kReject);
  const ToyEmbedder e(32, 7);
  const auto s = score_corpus("where is the cat", corpus, e);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_NEAR(s.rescaled.at("u1"), 0.75, 1e-12);
  EXPECT_NEAR(s.rescaled.at("u2"), 0.63363062095621225, 1e-12);
  EXPECT_NEAR(s.rescaled.at("u3"), 0.658113883008419, 1e-12);
  for (const auto& [pu, v] : s.rescaled) {
    EXPECT_NEAR(v, (s.raw.at(pu) + 1) / 2, 1e-15);
  }
}

TEST(ScoreCorpus, StoredEmbeddingsAreUsedAndKeysMatch) {
  Corpus corpus = ingest({{"d1", "u1", "alpha"}, {"d2", "u2", "beta"}},
                         DuplicatePolicy::kReject);
  const ToyEmbedder e(32, 0);
  embed_corpus(corpus, e);
  EXPECT_TRUE(corpus.fully_embedded());
  const auto s = score_corpus("alpha", corpus, e);
  EXPECT_DOUBLE_EQ(s.rescaled.at("u1"), 1.0);
  EXPECT_EQ(s.rescaled.size(), corpus.size());
  for (const auto& [pu, v] : s.rescaled) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

class FailingProvider final : public EmbeddingProvider {
 public:
  std::vector<Embedding> embed(std::span<const std::string>) const override {
    throw Error(ErrorCode::kProviderUnavailable, "down");
  }
};

TEST(ScoreCorpus, ProviderFailureFailsWholeCall) {
  Corpus corpus = ingest({{"d1", "u1", "alpha"}}, DuplicatePolicy::kReject);
  try {
    score_corpus("alpha", corpus, FailingProvider{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kProviderUnavailable);
  }
}

}  // namespace
}  // namespace dprag
