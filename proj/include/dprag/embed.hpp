#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dprag/core.hpp"

namespace dprag {

// Finite, non-zero real vector.
class Embedding {
 public:
  // Throws Error{kInvalidArgument} on empty, non-finite or zero-norm input.
  explicit Embedding(std::vector<double> values);

  std::span<const double> values() const noexcept { return values_; }
  const std::vector<double>& vector() const noexcept { return values_; }
  std::size_t dim() const noexcept { return values_.size(); }
  double norm() const noexcept { return norm_; }

 private:
  std::vector<double> values_;
  double norm_;
};

// <a,b> / (|a| |b|), clamped to [-1, 1]. Throws DimensionMismatch.
double cosine_similarity(const Embedding& a, const Embedding& b);

// Similarity of the query to every document, keyed by privacy unit.
// rescaled = (raw + 1) / 2 maps cosines onto the threshold domain [0, 1].
struct SimilarityScores {
  std::map<std::string, double> raw;
  std::map<std::string, double> rescaled;

  static SimilarityScores from_raw(std::map<std::string, double> raw);
  // Inverse construction, mostly for tests that reason in [0,1] directly.
  static SimilarityScores from_rescaled(std::map<std::string, double> scaled);

  std::size_t size() const noexcept { return raw.size(); }
};

double rescale_cosine(double cosine);

// Implementations must tolerate concurrent calls.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  // Embeddings in input order, all of the same dimension.
  virtual std::vector<Embedding> embed(
      std::span<const std::string> texts) const = 0;
};

// Deterministic bag-of-words test embedder: every whitespace token
// (ASCII-lowercased, leading/trailing punctuation trimmed) hashes with
// FNV-1a into one of `dim` buckets with a +-1 sign; the counts are then
// L2-normalized. Throws Error{kEmptyText} when no token survives.
class ToyEmbedder final : public EmbeddingProvider {
 public:
  explicit ToyEmbedder(std::size_t dim, std::uint64_t seed = 0);

  std::vector<Embedding> embed(
      std::span<const std::string> texts) const override;
  Embedding embed_one(std::string_view text) const;

  std::size_t dim() const noexcept { return dim_; }
  std::uint64_t seed() const noexcept { return seed_; }

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

// Splits on ASCII whitespace and normalizes as ToyEmbedder does; empty
// tokens are dropped.
std::vector<std::string> bag_of_words_tokens(std::string_view text);

struct EmbedOptions {
  std::size_t batch_size = 64;
  std::size_t concurrency = 1;
};

// Embeds every document that lacks an embedding.
void embed_corpus(Corpus& corpus, const EmbeddingProvider& provider,
                  const EmbedOptions& options = {});

// One score per privacy unit. Stored document embeddings are used when
// present; missing ones are computed through the provider. Any provider
// failure fails the whole call so the threshold mechanism never sees a
// partial score set.
SimilarityScores score_corpus(std::string_view query, const Corpus& corpus,
                              const EmbeddingProvider& provider,
                              const EmbedOptions& options = {});

}  // namespace dprag
