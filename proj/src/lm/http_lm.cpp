#include "dprag/http_lm.hpp"

#include <algorithm>
#include <limits>

#include "dprag/error.hpp"

namespace dprag {

namespace {

double parse_log_prob(const nlohmann::json& v) {
  // JSON has no infinity; servers send null or a string for -inf.
  if (v.is_null()) return -std::numeric_limits<double>::infinity();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "-inf" || s == "-Infinity") {
      return -std::numeric_limits<double>::infinity();
    }
    throw Error(ErrorCode::kNotNormalized, "bad log-prob '" + s + "'");
  }
  return v.get<double>();
}

}  // namespace

HttpLanguageModel::HttpLanguageModel(HttpEndpoint endpoint, Options options)
    : endpoint_(std::move(endpoint)), options_(std::move(options)) {
  const auto response = call_with_retries(options_.retry, "vocabulary request",
                                          [&] { return http_get_json(endpoint_, "/vocab"); });
  std::vector<std::string> tokens;
  try {
    tokens = response.at("tokens").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kProviderUnavailable,
                std::string("bad /vocab response: ") + e.what());
  }
  std::optional<Token> eos;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] == options_.eos_token) eos = Token{static_cast<std::uint32_t>(i)};
    longest_token_ = std::max(longest_token_, tokens[i].size());
  }
  vocabulary_ = Vocabulary(std::move(tokens), eos);
}

std::vector<Token> HttpLanguageModel::tokenize(std::string_view text) const {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const std::size_t max_len = std::min(longest_token_, text.size() - i);
    bool matched = false;
    for (std::size_t len = max_len; len > 0; --len) {
      if (auto t = vocabulary_.find(text.substr(i, len))) {
        out.push_back(*t);
        i += len;
        matched = true;
        break;
      }
    }
    // Bytes no vocabulary entry covers are dropped.
    if (!matched) ++i;
  }
  return out;
}

std::string HttpLanguageModel::detokenize(std::span<const Token> tokens) const {
  std::string out;
  for (Token t : tokens) out += vocabulary_.text(t);
  return out;
}

std::vector<double> HttpLanguageModel::raw_log_probs(
    std::span<const Token> context) const {
  nlohmann::json request;
  if (options_.mode == RequestMode::kText) {
    request["text"] = detokenize(context);
  } else {
    std::vector<std::uint32_t> ids;
    ids.reserve(context.size());
    for (Token t : context) ids.push_back(t.id);
    request["tokens"] = std::move(ids);
  }
  const auto response = call_with_retries(options_.retry, "logits request", [&] {
    return http_post_json(endpoint_, "/next_token_logprobs", request);
  });
  std::vector<double> out;
  try {
    const auto& values = response.at("log_probs");
    if (!values.is_array()) {
      throw Error(ErrorCode::kProviderUnavailable, "log_probs is not an array");
    }
    out.reserve(values.size());
    for (const auto& v : values) out.push_back(parse_log_prob(v));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kProviderUnavailable,
                std::string("bad /next_token_logprobs response: ") + e.what());
  }
  return out;
}

}  // namespace dprag
