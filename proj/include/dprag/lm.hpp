#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dprag/core.hpp"
#include "dprag/rng.hpp"

namespace dprag {

// Fixed token list of one backend. Token ids are positions in the list.
class Vocabulary {
 public:
  Vocabulary() = default;
  // Throws Error{kInvalidArgument} on duplicate or empty token strings.
  Vocabulary(std::vector<std::string> tokens, std::optional<Token> eos);

  std::size_t size() const noexcept { return tokens_.size(); }
  const std::string& text(Token t) const;
  std::optional<Token> find(std::string_view text) const;
  bool contains(Token t) const noexcept { return t.id < tokens_.size(); }
  std::optional<Token> eos() const noexcept { return eos_; }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::uint32_t> ids_;
  std::optional<Token> eos_;
};

// ln L(s | context) for every token s of the vocabulary.
struct TokenDistribution {
  std::vector<double> log_probs;

  // Accepts a provider's output: entries must be finite or -inf and
  // logsumexp must be 0 within kNormalizationTolerance, else
  // Error{kNotNormalized}. The residual is subtracted so the stored vector
  // is normalized to rounding.
  static TokenDistribution from_log_probs(std::vector<double> log_probs);
  static TokenDistribution uniform(std::size_t vocab_size);

  std::size_t size() const noexcept { return log_probs.size(); }
  Token argmax() const;
  double probability(Token t) const;
};

inline constexpr double kNormalizationTolerance = 1e-6;

// <q, d>_RAG. Rendered text is preamble + document slot + question slot;
// the document slot is dropped entirely when no document is given.
struct PromptTemplate {
  std::string system_preamble;
  std::string document_slot = "Document: {document}\n";
  std::string question_slot = "Question: {question}\nAnswer:";

  // Each placeholder must occur exactly once in its slot, else
  // Error{kTemplateMalformed}.
  void validate() const;
};

std::string render_prompt(const PromptTemplate& tmpl, std::string_view question,
                          std::optional<std::string_view> document);

// Next-token provider contract. Implementations must accept concurrent
// calls.
class LanguageModel {
 public:
  virtual ~LanguageModel() = default;

  virtual const Vocabulary& vocabulary() const = 0;
  virtual std::vector<Token> tokenize(std::string_view text) const = 0;
  virtual std::string detokenize(std::span<const Token> tokens) const = 0;
  virtual std::size_t context_limit() const = 0;

  // Unchecked log-probabilities for the token after `context`. Callers go
  // through next_token_distribution, which validates the result.
  virtual std::vector<double> raw_log_probs(
      std::span<const Token> context) const = 0;
};

// Tokenized render_prompt. Throws Error{kInvalidArgument} on an empty
// question and Error{kTemplateMalformed} on a bad template.
std::vector<Token> assemble_prompt(const PromptTemplate& tmpl,
                                   const LanguageModel& lm,
                                   std::string_view question,
                                   std::optional<std::string_view> document);

// Validated L(. | context). Errors: kInvalidArgument (empty context),
// kContextTooLong, kVocabMismatch (wrong vector length), kNotNormalized.
// Provider transport errors propagate as raised by the provider.
TokenDistribution next_token_distribution(const LanguageModel& lm,
                                          std::span<const Token> context);

// Plain (non-private) RAG generation used as the evaluation baseline: all
// documents in one prompt, greedy decoding when temperature == 0, else
// sampling from L^(1/T). Provides no privacy guarantee.
struct BaselineResult {
  std::vector<Token> tokens;
  std::string text;
};

BaselineResult generate_non_private(const PromptTemplate& tmpl,
                                    const LanguageModel& lm,
                                    std::string_view question,
                                    std::span<const std::string> documents,
                                    std::size_t max_tokens, double temperature,
                                    RngState& rng);

}  // namespace dprag
