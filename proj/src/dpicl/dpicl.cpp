#include "dprag/dpicl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "dprag/error.hpp"
#include "dprag/numeric.hpp"
#include "dprag/parallel.hpp"

namespace dprag {

const char* to_string(ScoreStage stage) {
  switch (stage) {
    case ScoreStage::kNorm:
      return "norm";
    case ScoreStage::kCentered:
      return "centered";
    case ScoreStage::kClipped:
      return "clipped";
  }
  return "?";
}

const char* to_string(StopReason reason) {
  switch (reason) {
    case StopReason::kEos:
      return "eos";
    case StopReason::kMaxTokens:
      return "max_tokens";
    case StopReason::kBudget:
      return "budget";
  }
  return "?";
}

namespace {

void require_stage(const TransformedScores& s, ScoreStage want) {
  if (s.stage != want) {
    throw Error(ErrorCode::kWrongStage, std::string("expected stage ") +
                                            to_string(want) + ", got " +
                                            to_string(s.stage));
  }
}

}  // namespace

TransformedScores transform_norm(const TokenDistribution& dist, double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw Error(ErrorCode::kInvalidArgument, "alpha_icl must be positive");
  }
  if (dist.log_probs.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "empty distribution");
  }
  const double top =
      *std::max_element(dist.log_probs.begin(), dist.log_probs.end());
  TransformedScores out{std::vector<double>(dist.size()), ScoreStage::kNorm};
  for (std::size_t i = 0; i < dist.size(); ++i) {
    // -inf log-probs give expm1(-inf) = -1.
    out.values[i] = std::expm1(alpha * (dist.log_probs[i] - top)) / alpha;
  }
  return out;
}

TransformedScores transform_center(const TransformedScores& scores) {
  require_stage(scores, ScoreStage::kNorm);
  TransformedScores out{scores.values, ScoreStage::kCentered};
  if (out.values.empty()) return out;
  const auto [lo, hi] = std::minmax_element(out.values.begin(), out.values.end());
  const double mid = *lo / 2.0 + *hi / 2.0;
  for (double& v : out.values) v -= mid;
  return out;
}

TransformedScores transform_clip(const TransformedScores& scores, double c) {
  require_stage(scores, ScoreStage::kCentered);
  if (!(c > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "clip_c must be positive");
  }
  TransformedScores out{scores.values, ScoreStage::kClipped};
  double norm = 0.0;
  for (double v : out.values) norm = std::max(norm, std::abs(v));
  if (norm > c) {
    const double scale = c / norm;
    for (double& v : out.values) v *= scale;
  }
  return out;
}

TransformedScores clipped_scores(const TokenDistribution& dist, double alpha,
                                 double c) {
  return transform_clip(transform_center(transform_norm(dist, alpha)), c);
}

std::vector<double> icl_utility(std::span<const TransformedScores> per_doc,
                                const TokenDistribution& public_dist,
                                double theta) {
  if (!(theta >= 0.0) || !std::isfinite(theta)) {
    throw Error(ErrorCode::kInvalidArgument, "theta must be finite and >= 0");
  }
  const std::size_t v = public_dist.size();
  std::vector<double> out(v);
  for (std::size_t i = 0; i < v; ++i) {
    out[i] = theta * std::max(public_dist.log_probs[i], kPublicLogProbFloor);
  }
  for (const auto& doc : per_doc) {
    require_stage(doc, ScoreStage::kClipped);
    if (doc.values.size() != v) {
      throw Error(ErrorCode::kVocabMismatch,
                  "document scores have length " +
                      std::to_string(doc.values.size()) + ", public has " +
                      std::to_string(v));
    }
    for (std::size_t i = 0; i < v; ++i) out[i] += doc.values[i];
  }
  return out;
}

std::vector<double> token_log_probabilities(std::span<const double> utility,
                                            double epsilon, double c) {
  if (!(epsilon > 0.0) || !(c > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "epsilon and c must be positive");
  }
  if (utility.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "empty utility");
  }
  std::vector<double> logits(utility.size());
  const double scale = epsilon / (2.0 * c);
  for (std::size_t i = 0; i < utility.size(); ++i) {
    logits[i] = scale * utility[i];
  }
  return log_normalize(logits);
}

Token sample_token(std::span<const double> utility, double epsilon, double c,
                   RngState& rng) {
  const auto log_probs = token_log_probabilities(utility, epsilon, c);
  return Token{
      static_cast<std::uint32_t>(sample_from_log_probs(log_probs, rng.uniform()))};
}

namespace {

// Largest n <= max_tokens with spent + n * eps within budget, charged in one
// event. Returns the number of tokens charged.
std::size_t precharge(Accountant& accountant, const std::string& label,
                      std::size_t max_tokens, double eps) {
  if (accountant.try_spend(label, static_cast<double>(max_tokens) * eps)) {
    return max_tokens;
  }
  const double room = accountant.remaining();
  auto n = static_cast<std::size_t>(
      std::min(static_cast<double>(max_tokens), std::floor(room / eps)));
  for (; n > 0; --n) {
    if (accountant.try_spend(label, static_cast<double>(n) * eps)) return n;
  }
  return 0;
}

}  // namespace

GenerationResult generate(const LanguageModel& lm, std::string_view question,
                          std::span<const Document> documents,
                          const PrivacyParams& params, Accountant& accountant,
                          RngState& rng, const GenerationOptions& options) {
  params.validate();
  const double eps = params.epsilon_per_token;

  // Prompts are tokenized once; the response is appended per step.
  std::vector<std::vector<Token>> prompts;
  prompts.reserve(documents.size() + 1);
  for (const auto& d : documents) {
    prompts.push_back(assemble_prompt(options.prompt, lm, question, d.text));
  }
  prompts.push_back(assemble_prompt(
      options.prompt, lm, question,
      options.public_context.empty()
          ? std::nullopt
          : std::optional<std::string_view>(options.public_context)));
  const std::size_t k = documents.size();
  const auto eos = lm.vocabulary().eos();

  const std::size_t charged =
      precharge(accountant, options.charge_label, params.max_tokens, eps);

  GenerationResult result;
  result.stop_reason =
      charged < params.max_tokens ? StopReason::kBudget : StopReason::kMaxTokens;

  auto settle = [&] {
    const std::size_t unused = charged - result.tokens.size();
    if (unused > 0) {
      accountant.refund(options.charge_label, static_cast<double>(unused) * eps);
    }
  };

  try {
    for (std::size_t step = 0; step < charged; ++step) {
      auto dists = parallel_map(prompts.size(), options.concurrency,
                                [&](std::size_t i) {
                                  std::vector<Token> context = prompts[i];
                                  context.insert(context.end(),
                                                 result.tokens.begin(),
                                                 result.tokens.end());
                                  return next_token_distribution(lm, context);
                                });
      const TokenDistribution& public_dist = dists.back();
      std::vector<TransformedScores> per_doc;
      per_doc.reserve(k);
      for (std::size_t j = 0; j < k; ++j) {
        per_doc.push_back(
            clipped_scores(dists[j], params.alpha_icl, params.clip_c));
      }

      TokenStepReport report;
      report.utility = icl_utility(per_doc, public_dist, params.theta);
      report.chosen = sample_token(report.utility, eps, params.clip_c, rng);
      report.epsilon_spent = eps;
      report.num_documents = k;
      report.public_logprob_of_chosen = public_dist.log_probs[report.chosen.id];

      result.tokens.push_back(report.chosen);
      if (options.trace) options.trace(step, report);
      if (eos && report.chosen == *eos) {
        result.stop_reason = StopReason::kEos;
        break;
      }
    }
  } catch (...) {
    settle();
    throw;
  }
  settle();

  std::vector<Token> visible;
  visible.reserve(result.tokens.size());
  for (Token t : result.tokens) {
    if (!eos || t != *eos) visible.push_back(t);
  }
  result.text = lm.detokenize(visible);
  result.total_epsilon = params.epsilon_retrieval +
                         static_cast<double>(result.tokens.size()) * eps;
  return result;
}

}  // namespace dprag
