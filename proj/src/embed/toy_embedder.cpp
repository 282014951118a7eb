#include <cctype>
#include <cmath>

#include "dprag/embed.hpp"
#include "dprag/error.hpp"

namespace dprag {

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

std::uint64_t fnv1a(std::string_view s, std::uint64_t seed) {
  std::uint64_t h = kFnvOffset ^ seed;
  for (unsigned char c : s) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

bool is_word_char(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

}  // namespace

std::vector<std::string> bag_of_words_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() &&
           std::isspace(static_cast<unsigned char>(text[i]))) {
      ++i;
    }
    std::size_t j = i;
    while (j < text.size() &&
           !std::isspace(static_cast<unsigned char>(text[j]))) {
      ++j;
    }
    std::size_t b = i;
    std::size_t e = j;
    while (b < e && !is_word_char(static_cast<unsigned char>(text[b]))) ++b;
    while (e > b && !is_word_char(static_cast<unsigned char>(text[e - 1]))) --e;
    if (b < e) {
      std::string token(text.substr(b, e - b));
      for (char& c : token) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      }
      out.push_back(std::move(token));
    }
    i = j;
  }
  return out;
}

ToyEmbedder::ToyEmbedder(std::size_t dim, std::uint64_t seed)
    : dim_(dim), seed_(seed) {
  if (dim == 0) {
    throw Error(ErrorCode::kInvalidArgument, "embedding dimension must be > 0");
  }
}

Embedding ToyEmbedder::embed_one(std::string_view text) const {
  const auto tokens = bag_of_words_tokens(text);
  if (tokens.empty()) {
    throw Error(ErrorCode::kEmptyText, "nothing to embed");
  }
  std::vector<double> v(dim_, 0.0);
  for (const auto& t : tokens) {
    const std::uint64_t h = fnv1a(t, seed_);
    const double sign = (h >> 63) != 0 ? -1.0 : 1.0;
    v[h % dim_] += sign;
  }
  double sq = 0.0;
  for (double x : v) sq += x * x;
  if (sq == 0.0) {
    // Every token cancelled against another in the same bucket.
    v[fnv1a(text, seed_) % dim_] = 1.0;
    sq = 1.0;
  }
  const double inv = 1.0 / std::sqrt(sq);
  for (double& x : v) x *= inv;
  return Embedding(std::move(v));
}

std::vector<Embedding> ToyEmbedder::embed(
    std::span<const std::string> texts) const {
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed_one(t));
  return out;
}

}  // namespace dprag
