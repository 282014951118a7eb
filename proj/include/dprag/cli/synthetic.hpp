#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "dprag/core.hpp"
#include "dprag/toy_lm.hpp"

namespace dprag::cli {

// Patient records over invented disease/treatment names, one record per
// patient. Every requested frequency gets one "target" disease mentioned in
// exactly that many records; the remaining records each describe a
// singleton filler disease. Target diseases have pairwise disjoint symptom
// words that no filler uses, so a symptom question singles out its records.
struct SyntheticSpec {
  std::vector<std::size_t> frequencies;
  std::size_t corpus_size = 1000;
  std::uint64_t seed = 0;
};

struct SyntheticDisease {
  std::string name;
  std::string treatment;
  std::vector<std::string> symptoms;
  std::size_t frequency = 0;
};

struct SyntheticCorpus {
  std::vector<Record> records;
  // Targets first, in the order of spec.frequencies.
  std::vector<SyntheticDisease> diseases;
  std::size_t num_targets = 0;
};

// Throws Error{kInvalidArgument} when the frequencies do not fit in
// corpus_size or there are too many targets for the symptom vocabulary.
SyntheticCorpus make_synthetic_corpus(const SyntheticSpec& spec);

enum class RuleTarget { kDisease, kTreatment };

// "diagnosed with <disease>" -> disease, or "treated with <treatment>" ->
// treatment, for every disease.
std::vector<ToyRule> synthetic_rules(const SyntheticCorpus& corpus,
                                     RuleTarget target, double mass = 0.9);

std::string symptom_question(const SyntheticDisease& disease);

// True when `word` occurs in `answer` as a whole word, case-insensitively.
bool mentions_word(std::string_view answer, std::string_view word);

}  // namespace dprag::cli
