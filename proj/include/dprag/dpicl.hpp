#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dprag/accountant.hpp"
#include "dprag/core.hpp"
#include "dprag/lm.hpp"
#include "dprag/rng.hpp"

namespace dprag {

enum class ScoreStage { kNorm, kCentered, kClipped };

const char* to_string(ScoreStage stage);

struct TransformedScores {
  std::vector<double> values;
  ScoreStage stage = ScoreStage::kNorm;
};

// (exp(alpha * (ln L - ln max L)) - 1) / alpha via expm1. The argmax maps to
// exactly 0 and zero-probability tokens to -1/alpha, so every value lies in
// [-1/alpha, 0]. alpha = 1 gives L / L_max - 1.
TransformedScores transform_norm(const TokenDistribution& dist, double alpha);

// Subtracts the midrange (max + min) / 2. Requires the norm stage.
TransformedScores transform_center(const TransformedScores& scores);

// Scales by c / ||x||_inf when the norm exceeds c. Requires the centered
// stage.
TransformedScores transform_clip(const TransformedScores& scores, double c);

// norm -> center -> clip.
TransformedScores clipped_scores(const TokenDistribution& dist, double alpha,
                                 double c);

// Public log-probabilities are floored here before scaling by theta, so a
// zero-probability public token yields a very negative but finite utility.
inline constexpr double kPublicLogProbFloor = -744.4400719213812;

// theta * max(ln L_pub, floor) + sum_j clipped_j. Each per-document vector
// must be at the clipped stage and have the public vocabulary size, else
// Error{kWrongStage} / Error{kVocabMismatch}.
std::vector<double> icl_utility(std::span<const TransformedScores> per_doc,
                                const TokenDistribution& public_dist,
                                double theta);

// log softmax(epsilon * utility / (2c)). With clipped per-document scores the
// utility has sensitivity c in every coordinate, so one draw is epsilon-DP.
std::vector<double> token_log_probabilities(std::span<const double> utility,
                                            double epsilon, double c);

Token sample_token(std::span<const double> utility, double epsilon, double c,
                   RngState& rng);

struct TokenStepReport {
  Token chosen;
  std::vector<double> utility;
  double epsilon_spent = 0.0;
  std::size_t num_documents = 0;
  double public_logprob_of_chosen = 0.0;
};

enum class StopReason { kEos, kMaxTokens, kBudget };

const char* to_string(StopReason reason);

struct GenerationResult {
  // Includes the EOS token when generation stopped on it.
  std::vector<Token> tokens;
  // Detokenized answer without EOS.
  std::string text;
  // epsilon_retrieval + tokens.size() * epsilon_per_token.
  double total_epsilon = 0.0;
  StopReason stop_reason = StopReason::kMaxTokens;
};

struct GenerationOptions {
  PromptTemplate prompt;
  // Put in the document slot of the public prompt; empty drops the slot.
  std::string public_context;
  // Provider calls in flight per step.
  std::size_t concurrency = 1;
  std::string charge_label = "query/tokens";
  // Diagnostic hook, called after every step. The reports are not private.
  std::function<void(std::size_t step, const TokenStepReport&)> trace;
};

// Generates one answer token by token. Every step sends the k per-document
// prompts and the public prompt, each followed by the shared response so
// far, runs the transform chain per document and samples the next token.
//
// max_tokens * epsilon_per_token is charged to `accountant` up front (or as
// many whole tokens as the budget still allows, ending with kBudget) and the
// unused part is refunded when generation stops early or a provider call
// fails. A failed step samples nothing and costs nothing; the error is
// rethrown after the refund.
GenerationResult generate(const LanguageModel& lm, std::string_view question,
                          std::span<const Document> documents,
                          const PrivacyParams& params, Accountant& accountant,
                          RngState& rng, const GenerationOptions& options = {});

}  // namespace dprag
