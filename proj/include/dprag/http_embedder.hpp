#pragma once

#include <atomic>
#include <cstddef>

#include "dprag/embed.hpp"
#include "dprag/http_json.hpp"
#include "dprag/retry.hpp"

namespace dprag {

// Client for a remote embedding server:
//   POST /embed  {"texts": [string, ...]}  ->  {"embeddings": [[float...]...]}
// Embeddings come back in request order with one dimension per server; a
// change of dimension between calls throws DimensionMismatch.
class HttpEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit HttpEmbeddingProvider(HttpEndpoint endpoint,
                                 RetryPolicy retry = {});

  std::vector<Embedding> embed(
      std::span<const std::string> texts) const override;

  // 0 until the first successful call.
  std::size_t dim() const noexcept { return dim_.load(); }

 private:
  HttpEndpoint endpoint_;
  RetryPolicy retry_;
  mutable std::atomic<std::size_t> dim_{0};
};

}  // namespace dprag
