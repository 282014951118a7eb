#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dprag/accountant.hpp"
#include "dprag/core.hpp"
#include "dprag/dpicl.hpp"
#include "dprag/embed.hpp"
#include "dprag/lm.hpp"
#include "dprag/retrieval.hpp"
#include "dprag/rng.hpp"
#include "dprag/toy_lm.hpp"

namespace dprag::cli {

struct QueryOutcome {
  ThresholdDraw retrieval;
  std::vector<Document> selected;
  GenerationResult generation;
  PrivacyReport report;
};

// Admission, similarity scoring, the private threshold draw and private
// generation over the selected documents. The admission check runs before
// any provider call. Retrieval is charged as "query/retrieval" and token
// steps as options.charge_label.
QueryOutcome answer_query(const Corpus& corpus,
                          const EmbeddingProvider& embedder,
                          const LanguageModel& lm, std::string_view question,
                          const PrivacyParams& params, Accountant& accountant,
                          RngState& rng, const GenerationOptions& options = {},
                          const EmbedOptions& embed_options = {});

// Word vocabulary covering the corpus, the prompt template, the public
// context, the given questions and every rule target.
Vocabulary toy_vocabulary(const Corpus& corpus, const PromptTemplate& prompt,
                          std::string_view public_context,
                          std::span<const std::string> questions,
                          std::span<const ToyRule> rules);

}  // namespace dprag::cli
