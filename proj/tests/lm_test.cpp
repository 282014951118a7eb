#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "dprag/error.hpp"
#include "dprag/lm.hpp"
#include "dprag/numeric.hpp"
#include "dprag/rng.hpp"
#include "dprag/toy_lm.hpp"

namespace dprag {
namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error";
  return ErrorCode::kInvalidArgument;
}

// Returns whatever vector it was given, so the validation in
// next_token_distribution can be exercised.
class ScriptedModel final : public LanguageModel {
 public:
  ScriptedModel(std::vector<double> out, std::size_t limit = 16)
      : vocab_({"</s>", "a", "b", "c"}, Token{0}), out_(std::move(out)), limit_(limit) {}
  const Vocabulary& vocabulary() const override { return vocab_; }
  std::vector<Token> tokenize(std::string_view) const override { return {Token{1}}; }
  std::string detokenize(std::span<const Token> t) const override {
    std::string s;
    for (Token x : t) s += vocab_.text(x);
    return s;
  }
  std::size_t context_limit() const override { return limit_; }
  std::vector<double> raw_log_probs(std::span<const Token>) const override { return out_; }

 private:
  Vocabulary vocab_;
  std::vector<double> out_;
  std::size_t limit_;
};

TEST(Vocabulary, LookupAndErrors) {
  const Vocabulary v({"x", "y"}, Token{1});
  EXPECT_EQ(v.find("y"), Token{1});
  EXPECT_FALSE(v.find("z").has_value());
  EXPECT_EQ(v.text(Token{0}), "x");
  EXPECT_THROW(v.text(Token{2}), Error);
  EXPECT_THROW(Vocabulary({"x", "x"}, std::nullopt), Error);
  EXPECT_THROW(Vocabulary({"x", ""}, std::nullopt), Error);
  EXPECT_THROW(Vocabulary({"x"}, Token{3}), Error);
}

TEST(TokenDistribution, NormalizationContract) {
  const double l = std::log(0.25);
  const auto d = TokenDistribution::from_log_probs({l, l, l, l + 5e-7});
  EXPECT_NEAR(log_sum_exp(d.log_probs), 0.0, 1e-15);
  EXPECT_EQ(code_of([] { TokenDistribution::from_log_probs({0.0, 0.0}); }),
            ErrorCode::kNotNormalized);
  EXPECT_EQ(code_of([] { TokenDistribution::from_log_probs({std::nan(""), 0.0}); }),
            ErrorCode::kNotNormalized);
  const double ninf = -std::numeric_limits<double>::infinity();
  const auto z = TokenDistribution::from_log_probs({0.0, ninf});
  EXPECT_EQ(z.argmax(), Token{0});
  EXPECT_EQ(z.probability(Token{1}), 0.0);
  const auto u = TokenDistribution::uniform(7);
  for (double x : u.log_probs) EXPECT_DOUBLE_EQ(x, -std::log(7.0));
}

TEST(Prompt, DocumentComesBeforeQuestion) {
  PromptTemplate t;
  const auto s = render_prompt(t, "Q", "D");
  ASSERT_NE(s.find('D'), std::string::npos);
  EXPECT_LT(s.find('D'), s.find('Q'));
  EXPECT_EQ(s, "Document: D\nQuestion: Q\nAnswer:");
  EXPECT_EQ(render_prompt(t, "Q", std::nullopt), "Question: Q\nAnswer:");
  EXPECT_NE(render_prompt(t, "Q", "(no private context)").find("(no private context)"),
            std::string::npos);
}

TEST(Prompt, ErrorsAndDeterminism) {
  PromptTemplate bad;
  bad.document_slot = "{document}{document}";
  EXPECT_EQ(code_of([&] { render_prompt(bad, "Q", "D"); }), ErrorCode::kTemplateMalformed);
  bad = {};
  bad.question_slot = "no placeholder";
  EXPECT_EQ(code_of([&] { bad.validate(); }), ErrorCode::kTemplateMalformed);
  EXPECT_EQ(code_of([] { render_prompt({}, "", "D"); }), ErrorCode::kInvalidArgument);

  const std::vector<std::string> texts = {"Document: Question: Answer: the cat"};
  const ToyLanguageModel lm(ToyLanguageModel::build_vocabulary(texts), {});
  const auto a = assemble_prompt({}, lm, "the cat", "the dog");
  EXPECT_EQ(a, assemble_prompt({}, lm, "the cat", "the dog"));
  const auto q = lm.tokenize("the cat");
  const auto d = lm.tokenize("the dog");
  const auto overhead = lm.tokenize(render_prompt({}, "x", "y")).size() - 2;
  EXPECT_LE(a.size(), q.size() + d.size() + overhead);
}

TEST(NextToken, ValidatesProviderOutput) {
  const double l = std::log(0.25);
  const std::vector<Token> ctx = {Token{1}};
  EXPECT_NO_THROW(next_token_distribution(ScriptedModel({l, l, l, l}), ctx));
  EXPECT_EQ(code_of([&] { next_token_distribution(ScriptedModel({l, l, l}), ctx); }),
            ErrorCode::kVocabMismatch);
  EXPECT_EQ(code_of([&] { next_token_distribution(ScriptedModel({0, 0, 0, 0}), ctx); }),
            ErrorCode::kNotNormalized);
  EXPECT_EQ(code_of([&] { next_token_distribution(ScriptedModel({l, l, l, l}), {}); }),
            ErrorCode::kInvalidArgument);
  const std::vector<Token> long_ctx(5, Token{1});
  EXPECT_EQ(code_of([&] {
              next_token_distribution(ScriptedModel({l, l, l, l}, 4), long_ctx);
            }),
            ErrorCode::kContextTooLong);
}

TEST(Baseline, GreedyFollowsArgmaxAndStopsAtEos) {
  const double ninf = -std::numeric_limits<double>::infinity();
  RngState rng(1);
  const ScriptedModel stops({0.0, ninf, ninf, ninf});
  const auto r = generate_non_private({}, stops, "q", {}, 5, 0.0, rng);
  ASSERT_EQ(r.tokens.size(), 1u);
  EXPECT_EQ(r.tokens[0], Token{0});
  EXPECT_EQ(r.text, "");

  const ScriptedModel loops({std::log(0.1), std::log(0.2), std::log(0.6), std::log(0.1)});
  const auto g = generate_non_private({}, loops, "q", {}, 3, 0.0, rng);
  EXPECT_EQ(g.text, "bbb");

  // T = 1 samples from L itself.
  int hits = 0;
  for (int i = 0; i < 4000; ++i) {
    hits += generate_non_private({}, loops, "q", {}, 1, 1.0, rng).tokens[0] == Token{2};
  }
  EXPECT_NEAR(hits / 4000.0, 0.6, 0.03);
}

}  // namespace
}  // namespace dprag
