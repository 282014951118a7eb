#include "dprag/cli/pipeline.hpp"

namespace dprag::cli {

QueryOutcome answer_query(const Corpus& corpus,
                          const EmbeddingProvider& embedder,
                          const LanguageModel& lm, std::string_view question,
                          const PrivacyParams& params, Accountant& accountant,
                          RngState& rng, const GenerationOptions& options,
                          const EmbedOptions& embed_options) {
  admit_query(params, accountant);
  const auto scores = score_corpus(question, corpus, embedder, embed_options);
  const auto utility = build_threshold_utility(scores, params);

  QueryOutcome out;
  accountant.spend("query/retrieval", params.epsilon_retrieval);
  out.retrieval = sample_threshold(utility, params.epsilon_retrieval, rng);

  out.selected.reserve(out.retrieval.selected_indices.size());
  for (std::size_t i : out.retrieval.selected_indices) {
    out.selected.push_back(corpus.at(utility.units[i]));
  }

  out.generation =
      generate(lm, question, out.selected, params, accountant, rng, options);
  out.report = accountant.report();
  return out;
}

Vocabulary toy_vocabulary(const Corpus& corpus, const PromptTemplate& prompt,
                          std::string_view public_context,
                          std::span<const std::string> questions,
                          std::span<const ToyRule> rules) {
  std::vector<std::string> texts;
  texts.reserve(corpus.size() + questions.size() + rules.size() + 4);
  for (const auto& [unit, doc] : corpus.documents()) texts.push_back(doc.text);
  texts.push_back(prompt.system_preamble);
  texts.push_back(prompt.document_slot);
  texts.push_back(prompt.question_slot);
  texts.emplace_back(public_context);
  texts.insert(texts.end(), questions.begin(), questions.end());
  for (const auto& r : rules) {
    if (r.target != kEosToken) texts.push_back(r.target);
  }
  return ToyLanguageModel::build_vocabulary(texts);
}

}  // namespace dprag::cli
