#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dprag/lm.hpp"

namespace dprag {

inline constexpr std::string_view kEosToken = "</s>";
inline constexpr std::string_view kUnknownToken = "<unk>";

// Lowercased word pieces: maximal runs of [A-Za-z0-9] (and non-ASCII bytes)
// are words; every other non-space character is a piece of its own.
std::vector<std::string> word_pieces(std::string_view text);

// "If `trigger` occurs in the context, put `mass` on `target`."
struct ToyRule {
  std::string trigger;
  std::string target;
  double mass = 0.9;
};

// Tab-separated "trigger<TAB>target<TAB>mass" lines; '#' starts a comment.
std::vector<ToyRule> read_toy_rules(std::istream& in);
void write_toy_rules(std::ostream& out, std::span<const ToyRule> rules);

// Deterministic stand-in for a real model. The context is detokenized and a
// rule fires when its normalized trigger occurs in it on word boundaries.
// With firing rules F, each puts mass/|F| on its target and the remainder is
// spread evenly over all other tokens; with none the output is uniform.
// `smoothing` mixes the result with the uniform distribution:
// (1 - smoothing) * L + smoothing / V.
class ToyLanguageModel final : public LanguageModel {
 public:
  // Throws Error{kUnknownTargetToken} for targets outside the vocabulary and
  // Error{kInvalidArgument} for masses outside (0,1).
  ToyLanguageModel(Vocabulary vocabulary, std::vector<ToyRule> rules,
                   double smoothing = 0.0, std::size_t context_limit = 8192);

  // Word-level vocabulary: "</s>", "<unk>", then the sorted distinct pieces
  // of `texts`.
  static Vocabulary build_vocabulary(std::span<const std::string> texts);

  const Vocabulary& vocabulary() const override { return vocabulary_; }
  std::vector<Token> tokenize(std::string_view text) const override;
  std::string detokenize(std::span<const Token> tokens) const override;
  std::size_t context_limit() const override { return context_limit_; }
  std::vector<double> raw_log_probs(
      std::span<const Token> context) const override;

 private:
  struct CompiledRule {
    std::string needle;  // " trigger words "
    Token target;
    double mass;
  };

  Vocabulary vocabulary_;
  std::vector<CompiledRule> rules_;
  double smoothing_;
  std::size_t context_limit_;
  Token unknown_;
};

}  // namespace dprag
