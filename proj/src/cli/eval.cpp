#include "dprag/cli/eval.hpp"

#include <algorithm>
#include <ostream>
#include <sstream>

#include "dprag/cli/pipeline.hpp"
#include "dprag/cli/synthetic.hpp"
#include "dprag/error.hpp"
#include "dprag/parallel.hpp"
#include "dprag/toy_lm.hpp"

namespace dprag::cli {

void EvalSpec::validate() const {
  if (frequencies.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no frequencies");
  }
  std::size_t total = 0;
  for (std::size_t f : frequencies) {
    if (f == 0) throw Error(ErrorCode::kInvalidArgument, "frequency 0");
    total += f;
  }
  if (total > corpus_size) {
    throw Error(ErrorCode::kInvalidArgument,
                "frequencies exceed corpus_size");
  }
  if (trials_per_frequency < 1) {
    throw Error(ErrorCode::kInvalidArgument, "trials_per_frequency must be >= 1");
  }
  engine.params.validate();
}

namespace {

struct Trial {
  bool correct = false;
  bool failed = false;
  std::string error;
};

// Top-k by raw similarity, ties broken by unit order.
std::vector<std::string> top_documents(const Corpus& corpus,
                                       const SimilarityScores& scores,
                                       std::size_t k) {
  std::vector<std::pair<double, std::string>> ranked;
  for (const auto& [unit, s] : scores.raw) ranked.emplace_back(s, unit);
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<std::string> texts;
  for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) {
    texts.push_back(corpus.at(ranked[i].second).text);
  }
  return texts;
}

}  // namespace

EvalResult run_eval(const EvalSpec& spec, std::ostream* log) {
  spec.validate();
  const auto synthetic = make_synthetic_corpus(
      {spec.frequencies, spec.corpus_size, spec.seed});
  Corpus corpus = ingest(synthetic.records, DuplicatePolicy::kReject);
  const ToyEmbedder embedder(spec.engine.embedding_dim,
                             spec.engine.embedding_seed);
  embed_corpus(corpus, embedder);

  std::vector<std::string> questions;
  for (std::size_t t = 0; t < synthetic.num_targets; ++t) {
    questions.push_back(symptom_question(synthetic.diseases[t]));
  }
  const auto rules =
      synthetic_rules(synthetic, RuleTarget::kDisease, spec.rule_mass);
  const ToyLanguageModel lm(
      toy_vocabulary(corpus, spec.engine.prompt, spec.engine.public_context,
                     questions, rules),
      rules, spec.engine.toy_smoothing, spec.engine.lm_context_limit);

  const PrivacyParams& params = spec.engine.params;
  GenerationOptions options;
  options.prompt = spec.engine.prompt;
  options.public_context = spec.engine.public_context;
  // Trials are the unit of parallelism; steps stay sequential inside.
  options.concurrency = 1;

  const std::size_t n = spec.frequencies.size() * spec.trials_per_frequency;
  const RngState root(spec.seed);
  auto trials = parallel_map(n, spec.jobs, [&](std::size_t i) {
    const std::size_t target = i / spec.trials_per_frequency;
    Trial trial;
    try {
      RngState rng = root.split(i);
      Accountant accountant(params.epsilon_budget, params.delta);
      const auto outcome = answer_query(corpus, embedder, lm, questions[target],
                                        params, accountant, rng, options);
      trial.correct = mentions_word(outcome.generation.text,
                                    synthetic.diseases[target].name);
    } catch (const std::exception& e) {
      trial.failed = true;
      trial.error = e.what();
    }
    return trial;
  });

  EvalResult result;
  result.per_query_epsilon = params.max_query_epsilon();
  result.delta = params.delta;
  for (std::size_t t = 0; t < spec.frequencies.size(); ++t) {
    const std::size_t f = spec.frequencies[t];
    std::size_t correct = 0, failed = 0;
    for (std::size_t j = 0; j < spec.trials_per_frequency; ++j) {
      const auto& trial = trials[t * spec.trials_per_frequency + j];
      correct += trial.correct;
      failed += trial.failed;
      if (trial.failed && log) {
        *log << "trial " << t * spec.trials_per_frequency + j
             << " (frequency " << f << ") failed: " << trial.error << '\n';
      }
    }
    result.correct[f] = correct;
    result.failed[f] = failed;
    result.per_frequency[f] = static_cast<double>(correct) /
                              static_cast<double>(spec.trials_per_frequency);
  }

  if (spec.baseline) {
    const std::size_t k = std::holds_alternative<TopK>(params.mode)
                              ? std::get<TopK>(params.mode).k
                              : corpus.size();
    for (std::size_t t = 0; t < spec.frequencies.size(); ++t) {
      const auto scores = score_corpus(questions[t], corpus, embedder);
      const auto docs = top_documents(corpus, scores, k);
      RngState rng = root.split(n + t);
      const auto answer = generate_non_private(
          spec.engine.prompt, lm, questions[t], docs, params.max_tokens, 0.0, rng);
      result.baseline[spec.frequencies[t]] =
          mentions_word(answer.text, synthetic.diseases[t].name) ? 1.0 : 0.0;
    }
  }
  return result;
}

EvalSpec eval_spec_from_config(const ConfigMap& config,
                               const std::filesystem::path& base_dir) {
  EvalSpec spec;
  apply_config(config, spec.engine, base_dir,
               {"frequencies", "corpus_size", "trials_per_frequency", "seed",
                "rule_mass", "jobs", "baseline"});
  spec.engine.finalize();
  spec.frequencies = config_size_list(config, "frequencies", spec.frequencies);
  spec.corpus_size = config_size(config, "corpus_size", spec.corpus_size);
  spec.trials_per_frequency =
      config_size(config, "trials_per_frequency", spec.trials_per_frequency);
  spec.seed = config_u64(config, "seed", spec.seed);
  spec.rule_mass = config_double(config, "rule_mass", spec.rule_mass);
  spec.jobs = config_size(config, "jobs", spec.jobs);
  spec.baseline = config_size(config, "baseline", 0) != 0;
  return spec;
}

EvalSpec load_eval_spec(const std::filesystem::path& path) {
  return eval_spec_from_config(load_config(path), path.parent_path());
}

void write_accuracy_csv(std::ostream& out, const EvalResult& result) {
  std::ostringstream os;
  os.precision(17);
  os << "frequency,accuracy\n";
  for (const auto& [f, acc] : result.per_frequency) os << f << ',' << acc << '\n';
  out << os.str();
}

}  // namespace dprag::cli
