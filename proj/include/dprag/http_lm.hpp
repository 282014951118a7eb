#pragma once

#include <cstddef>
#include <string>

#include "dprag/http_json.hpp"
#include "dprag/lm.hpp"
#include "dprag/retry.hpp"

namespace dprag {

// Client for a remote full-vocabulary logits server:
//   GET  /vocab               -> {"tokens": [string, ...]}
//   POST /next_token_logprobs {"tokens": [int, ...]} or {"text": string}
//                             -> {"log_probs": [float, ...]}  (length V)
//
// The server's tokenizer is not exposed, so text is tokenized locally by
// greedy longest match over the vocabulary strings and detokenized by plain
// concatenation. In text mode the request carries the detokenized context
// instead of ids, which lets the server re-tokenize it with its own rules.
class HttpLanguageModel final : public LanguageModel {
 public:
  enum class RequestMode { kTokens, kText };

  struct Options {
    RetryPolicy retry;
    RequestMode mode = RequestMode::kTokens;
    std::string eos_token = "</s>";
    std::size_t context_limit = 4096;
  };

  // Fetches the vocabulary; throws Error{kProviderUnavailable} when the
  // server cannot be reached after retries.
  HttpLanguageModel(HttpEndpoint endpoint, Options options);

  const Vocabulary& vocabulary() const override { return vocabulary_; }
  std::vector<Token> tokenize(std::string_view text) const override;
  std::string detokenize(std::span<const Token> tokens) const override;
  std::size_t context_limit() const override { return options_.context_limit; }
  std::vector<double> raw_log_probs(
      std::span<const Token> context) const override;

 private:
  HttpEndpoint endpoint_;
  Options options_;
  Vocabulary vocabulary_;
  std::size_t longest_token_ = 0;
};

}  // namespace dprag
