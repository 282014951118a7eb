#include "dprag/lm.hpp"

#include <cmath>
#include <limits>

#include "dprag/error.hpp"
#include "dprag/numeric.hpp"

namespace dprag {

Vocabulary::Vocabulary(std::vector<std::string> tokens, std::optional<Token> eos)
    : tokens_(std::move(tokens)), eos_(eos) {
  ids_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i].empty()) {
      throw Error(ErrorCode::kInvalidArgument, "empty vocabulary entry");
    }
    if (!ids_.emplace(tokens_[i], static_cast<std::uint32_t>(i)).second) {
      throw Error(ErrorCode::kInvalidArgument,
                  "duplicate vocabulary entry '" + tokens_[i] + "'");
    }
  }
  if (eos_ && !contains(*eos_)) {
    throw Error(ErrorCode::kInvalidArgument, "EOS id outside vocabulary");
  }
}

const std::string& Vocabulary::text(Token t) const {
  if (!contains(t)) {
    throw Error(ErrorCode::kInvalidArgument,
                "token id " + std::to_string(t.id) + " outside vocabulary");
  }
  return tokens_[t.id];
}

std::optional<Token> Vocabulary::find(std::string_view text) const {
  auto it = ids_.find(std::string(text));
  if (it == ids_.end()) return std::nullopt;
  return Token{it->second};
}

TokenDistribution TokenDistribution::from_log_probs(
    std::vector<double> log_probs) {
  if (log_probs.empty()) {
    throw Error(ErrorCode::kNotNormalized, "empty distribution");
  }
  for (double v : log_probs) {
    if (std::isnan(v) || v == std::numeric_limits<double>::infinity()) {
      throw Error(ErrorCode::kNotNormalized, "NaN or +inf log-probability");
    }
  }
  const double lse = log_sum_exp(log_probs);
  if (!(std::abs(lse) <= kNormalizationTolerance)) {
    throw Error(ErrorCode::kNotNormalized,
                "logsumexp = " + std::to_string(lse));
  }
  for (double& v : log_probs) v -= lse;
  return TokenDistribution{std::move(log_probs)};
}

TokenDistribution TokenDistribution::uniform(std::size_t vocab_size) {
  if (vocab_size == 0) {
    throw Error(ErrorCode::kInvalidArgument, "empty vocabulary");
  }
  return TokenDistribution{std::vector<double>(
      vocab_size, -std::log(static_cast<double>(vocab_size)))};
}

Token TokenDistribution::argmax() const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < log_probs.size(); ++i) {
    if (log_probs[i] > log_probs[best]) best = i;
  }
  return Token{static_cast<std::uint32_t>(best)};
}

double TokenDistribution::probability(Token t) const {
  return std::exp(log_probs.at(t.id));
}

namespace {

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
  std::size_t count = 0;
  for (auto pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + needle.size())) {
    ++count;
  }
  return count;
}

void replace_once(std::string& s, std::string_view placeholder,
                  std::string_view value) {
  const auto pos = s.find(placeholder);
  s.replace(pos, placeholder.size(), value);
}

}  // namespace

void PromptTemplate::validate() const {
  if (count_occurrences(document_slot, "{document}") != 1) {
    throw Error(ErrorCode::kTemplateMalformed,
                "document_slot needs exactly one {document}");
  }
  if (count_occurrences(question_slot, "{question}") != 1) {
    throw Error(ErrorCode::kTemplateMalformed,
                "question_slot needs exactly one {question}");
  }
}

std::string render_prompt(const PromptTemplate& tmpl, std::string_view question,
                          std::optional<std::string_view> document) {
  tmpl.validate();
  if (question.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "empty question");
  }
  std::string out = tmpl.system_preamble;
  if (document) {
    std::string slot = tmpl.document_slot;
    replace_once(slot, "{document}", *document);
    out += slot;
  }
  std::string slot = tmpl.question_slot;
  replace_once(slot, "{question}", question);
  out += slot;
  return out;
}

std::vector<Token> assemble_prompt(const PromptTemplate& tmpl,
                                   const LanguageModel& lm,
                                   std::string_view question,
                                   std::optional<std::string_view> document) {
  return lm.tokenize(render_prompt(tmpl, question, document));
}

TokenDistribution next_token_distribution(const LanguageModel& lm,
                                          std::span<const Token> context) {
  if (context.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "empty context");
  }
  if (context.size() > lm.context_limit()) {
    throw Error(ErrorCode::kContextTooLong,
                std::to_string(context.size()) + " tokens exceed the limit of " +
                    std::to_string(lm.context_limit()));
  }
  auto raw = lm.raw_log_probs(context);
  if (raw.size() != lm.vocabulary().size()) {
    throw Error(ErrorCode::kVocabMismatch,
                "provider returned " + std::to_string(raw.size()) +
                    " log-probs for a vocabulary of " +
                    std::to_string(lm.vocabulary().size()));
  }
  return TokenDistribution::from_log_probs(std::move(raw));
}

BaselineResult generate_non_private(const PromptTemplate& tmpl,
                                    const LanguageModel& lm,
                                    std::string_view question,
                                    std::span<const std::string> documents,
                                    std::size_t max_tokens, double temperature,
                                    RngState& rng) {
  std::optional<std::string> joined;
  for (const auto& d : documents) {
    if (!joined) {
      joined = d;
    } else {
      *joined += "\n\n";
      *joined += d;
    }
  }
  std::vector<Token> context = assemble_prompt(
      tmpl, lm, question,
      joined ? std::optional<std::string_view>(*joined) : std::nullopt);

  BaselineResult result;
  const auto eos = lm.vocabulary().eos();
  for (std::size_t step = 0; step < max_tokens; ++step) {
    const auto dist = next_token_distribution(lm, context);
    Token next;
    if (temperature <= 0.0) {
      next = dist.argmax();
    } else {
      std::vector<double> tempered(dist.log_probs);
      for (double& v : tempered) v /= temperature;
      const auto normalized = log_normalize(tempered);
      next = Token{static_cast<std::uint32_t>(
          sample_from_log_probs(normalized, rng.uniform()))};
    }
    result.tokens.push_back(next);
    context.push_back(next);
    if (eos && next == *eos) break;
  }
  std::vector<Token> visible;
  for (Token t : result.tokens) {
    if (!eos || t != *eos) visible.push_back(t);
  }
  result.text = lm.detokenize(visible);
  return result;
}

}  // namespace dprag
