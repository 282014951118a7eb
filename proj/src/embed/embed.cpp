#include "dprag/embed.hpp"

#include <algorithm>
#include <cmath>

#include "dprag/error.hpp"
#include "dprag/parallel.hpp"

namespace dprag {

Embedding::Embedding(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "embedding has no entries");
  }
  double sq = 0.0;
  for (double v : values_) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kInvalidArgument, "non-finite embedding entry");
    }
    sq += v * v;
  }
  norm_ = std::sqrt(sq);
  if (!(norm_ > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "zero-norm embedding");
  }
}

double cosine_similarity(const Embedding& a, const Embedding& b) {
  if (a.dim() != b.dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
  }
  double dot = 0.0;
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) dot += av[i] * bv[i];
  const double cosine = dot / (a.norm() * b.norm());
  return std::clamp(cosine, -1.0, 1.0);
}

double rescale_cosine(double cosine) {
  return std::clamp((cosine + 1.0) / 2.0, 0.0, 1.0);
}

SimilarityScores SimilarityScores::from_raw(std::map<std::string, double> raw) {
  SimilarityScores s;
  for (const auto& [pu, c] : raw) {
    if (!(c >= -1.0 && c <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "cosine outside [-1,1] for '" + pu + "'");
    }
    s.rescaled.emplace(pu, rescale_cosine(c));
  }
  s.raw = std::move(raw);
  return s;
}

SimilarityScores SimilarityScores::from_rescaled(
    std::map<std::string, double> scaled) {
  SimilarityScores s;
  for (const auto& [pu, v] : scaled) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "rescaled score outside [0,1] for '" + pu + "'");
    }
    s.raw.emplace(pu, 2.0 * v - 1.0);
  }
  s.rescaled = std::move(scaled);
  return s;
}

namespace {

// Embeds texts[i] for the listed indices, batch by batch.
std::vector<Embedding> embed_batched(const EmbeddingProvider& provider,
                                     const std::vector<std::string>& texts,
                                     const EmbedOptions& options) {
  const std::size_t batch = std::max<std::size_t>(1, options.batch_size);
  const std::size_t batches = (texts.size() + batch - 1) / batch;
  auto chunks = parallel_map(batches, options.concurrency, [&](std::size_t b) {
    const std::size_t begin = b * batch;
    const std::size_t end = std::min(texts.size(), begin + batch);
    std::span<const std::string> slice(texts.data() + begin, end - begin);
    auto out = provider.embed(slice);
    if (out.size() != slice.size()) {
      throw Error(ErrorCode::kProviderUnavailable,
                  "provider returned " + std::to_string(out.size()) +
                      " embeddings for " + std::to_string(slice.size()) +
                      " texts");
    }
    return out;
  });
  std::vector<Embedding> all;
  all.reserve(texts.size());
  for (auto& chunk : chunks) {
    for (auto& e : chunk) all.push_back(std::move(e));
  }
  return all;
}

}  // namespace

void embed_corpus(Corpus& corpus, const EmbeddingProvider& provider,
                  const EmbedOptions& options) {
  std::vector<std::string> units;
  std::vector<std::string> texts;
  for (const auto& [pu, doc] : corpus.documents()) {
    if (!doc.embedding.empty()) continue;
    units.push_back(pu);
    texts.push_back(doc.text);
  }
  auto embeddings = embed_batched(provider, texts, options);
  for (std::size_t i = 0; i < units.size(); ++i) {
    corpus.set_embedding(units[i], embeddings[i].vector());
  }
}

SimilarityScores score_corpus(std::string_view query, const Corpus& corpus,
                              const EmbeddingProvider& provider,
                              const EmbedOptions& options) {
  const std::string query_text(query);
  auto query_embedding = provider.embed(std::span(&query_text, 1));
  if (query_embedding.size() != 1) {
    throw Error(ErrorCode::kProviderUnavailable,
                "provider returned no query embedding");
  }
  const Embedding& q = query_embedding.front();

  std::vector<std::string> missing_units;
  std::vector<std::string> missing_texts;
  for (const auto& [pu, doc] : corpus.documents()) {
    if (doc.embedding.empty()) {
      missing_units.push_back(pu);
      missing_texts.push_back(doc.text);
    }
  }
  auto computed = embed_batched(provider, missing_texts, options);

  std::map<std::string, double> raw;
  std::size_t next_missing = 0;
  for (const auto& [pu, doc] : corpus.documents()) {
    if (doc.embedding.empty()) {
      raw.emplace(pu, cosine_similarity(q, computed[next_missing++]));
    } else {
      raw.emplace(pu, cosine_similarity(q, Embedding(doc.embedding)));
    }
  }
  return SimilarityScores::from_raw(std::move(raw));
}

}  // namespace dprag
