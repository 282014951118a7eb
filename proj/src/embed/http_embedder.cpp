#include "dprag/http_embedder.hpp"

#include "dprag/error.hpp"

namespace dprag {

HttpEmbeddingProvider::HttpEmbeddingProvider(HttpEndpoint endpoint,
                                             RetryPolicy retry)
    : endpoint_(std::move(endpoint)), retry_(retry) {}

std::vector<Embedding> HttpEmbeddingProvider::embed(
    std::span<const std::string> texts) const {
  if (texts.empty()) return {};
  const nlohmann::json request = {
      {"texts", std::vector<std::string>(texts.begin(), texts.end())}};
  const auto response = call_with_retries(retry_, "embedding request", [&] {
    return http_post_json(endpoint_, "/embed", request);
  });

  std::vector<std::vector<double>> rows;
  try {
    rows = response.at("embeddings").get<std::vector<std::vector<double>>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kProviderUnavailable,
                std::string("bad /embed response: ") + e.what());
  }
  if (rows.size() != texts.size()) {
    throw Error(ErrorCode::kProviderUnavailable,
                "/embed returned " + std::to_string(rows.size()) +
                    " embeddings for " + std::to_string(texts.size()) +
                    " texts");
  }

  std::vector<Embedding> out;
  out.reserve(rows.size());
  for (auto& row : rows) {
    std::size_t expected = 0;
    if (!dim_.compare_exchange_strong(expected, row.size()) &&
        expected != row.size()) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "server switched from dimension " + std::to_string(expected) +
                      " to " + std::to_string(row.size()));
    }
    out.emplace_back(std::move(row));
  }
  return out;
}

}  // namespace dprag
