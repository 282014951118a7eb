#include "dprag/cli/commands.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dprag/cli/config.hpp"
#include "dprag/cli/eval.hpp"
#include "dprag/cli/pipeline.hpp"
#include "dprag/cli/synthetic.hpp"
#include "dprag/error.hpp"
#include "dprag/http_embedder.hpp"
#include "dprag/http_lm.hpp"
#include "dprag/index_io.hpp"
#include "dprag/toy_lm.hpp"

namespace dprag::cli {

CliEnvironment CliEnvironment::from_process() {
  CliEnvironment env;
  if (const char* v = std::getenv("DPRAG_LM_URL"); v && *v) env.lm_url = v;
  if (const char* v = std::getenv("DPRAG_EMBED_URL"); v && *v) env.embed_url = v;
  return env;
}

namespace {

// PrivacyParams flags, kept as text so they go through the config parser.
struct ParamFlags {
  ConfigMap values;

  void attach(CLI::App& app) {
    add(app, "--epsilon-budget", "epsilon_budget", "Total epsilon budget (inf disables)");
    add(app, "--epsilon-retrieval", "epsilon_retrieval", "Epsilon of the threshold draw");
    add(app, "--epsilon-per-token", "epsilon_per_token", "Epsilon per generated token");
    add(app, "--delta", "delta", "Reported delta");
    add(app, "--clip-c", "clip_c", "Clipping bound C");
    add(app, "--theta", "theta", "Weight of the public prior");
    add(app, "--alpha-icl", "alpha_icl", "Contrast of the token score transform");
    add(app, "--alpha-retrieval", "alpha_retrieval", "Contrast of top-p weights");
    auto* k = add(app, "--top-k", "top_k", "Select about N documents");
    auto* p = add(app, "--top-p", "top_p", "Select a share P of document weight");
    k->excludes(p);
    add(app, "--max-tokens", "max_tokens", "Maximum answer length");
  }

 private:
  CLI::Option* add(CLI::App& app, const char* flag, const char* key,
                   const char* help) {
    return app.add_option_function<std::string>(
        flag, [this, key](const std::string& v) { values[key] = v; }, help);
  }
};

EngineConfig load_engine(const std::string& config_path, const ParamFlags& flags) {
  EngineConfig engine;
  if (!config_path.empty()) {
    const std::filesystem::path path(config_path);
    apply_config(load_config(path), engine, path.parent_path());
  }
  apply_config(flags.values, engine);
  engine.finalize();
  engine.params.validate();
  return engine;
}

std::string json_double(double v) {
  if (std::isfinite(v)) return nlohmann::json(v).dump();
  return "null";
}

int cmd_ingest(const std::string& corpus_path, const std::string& index_path,
               const std::string& policy_name, const std::string& config_path,
               std::optional<std::size_t> dim, std::optional<std::uint64_t> seed,
               const CliEnvironment& env, std::ostream& out) {
  const auto policy = parse_duplicate_policy(policy_name);
  EngineConfig engine;
  if (!config_path.empty()) {
    const std::filesystem::path path(config_path);
    apply_config(load_config(path), engine, path.parent_path());
  }
  if (dim) engine.embedding_dim = *dim;
  if (seed) engine.embedding_seed = *seed;

  std::ifstream in(corpus_path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open corpus " + corpus_path);
  const auto records = read_records(in);
  Index index;
  index.corpus = ingest(records, policy);

  EmbedOptions options;
  options.concurrency = engine.concurrency;
  if (env.embed_url) {
    const HttpEmbeddingProvider provider(HttpEndpoint{*env.embed_url});
    embed_corpus(index.corpus, provider, options);
    index.embedder = EmbedderInfo{"remote", 0, *env.embed_url};
  } else {
    const ToyEmbedder provider(engine.embedding_dim, engine.embedding_seed);
    embed_corpus(index.corpus, provider, options);
    index.embedder = EmbedderInfo{"toy-hash", engine.embedding_seed, ""};
  }
  save_index(index_path, index);
  out << "records: " << records.size() << '\n'
      << "documents: " << index.corpus.size() << '\n'
      << "privacy_units: " << index.corpus.size() << '\n'
      << "embedding_dim: " << index.corpus.embedding_dim() << '\n';
  return kExitOk;
}

struct QueryArgs {
  std::string index_path;
  std::string question;
  std::optional<std::uint64_t> seed;
  std::string config_path;
  std::string rules_path;
  std::string ledger_path;
  std::optional<std::size_t> concurrency;
  bool unsafe_trace = false;
};

int cmd_query(const QueryArgs& args, const ParamFlags& flags,
              const CliEnvironment& env, std::ostream& out, std::ostream& err) {
  EngineConfig engine = load_engine(args.config_path, flags);
  if (args.concurrency) engine.concurrency = *args.concurrency;
  if (!args.rules_path.empty()) engine.toy_rules = args.rules_path;
  const PrivacyParams& params = engine.params;

  Accountant accountant(params.epsilon_budget, params.delta);
  if (!args.ledger_path.empty()) {
    if (std::filesystem::exists(args.ledger_path)) {
      accountant.restore(std::filesystem::path(args.ledger_path));
    }
  }
  // Refuse before touching the index or any backend.
  admit_query(params, accountant);
  if (!args.ledger_path.empty()) accountant.attach_ledger(args.ledger_path);

  const Index index = load_index(args.index_path);

  std::unique_ptr<EmbeddingProvider> embedder;
  if (env.embed_url) {
    embedder = std::make_unique<HttpEmbeddingProvider>(HttpEndpoint{*env.embed_url});
  } else if (index.embedder.kind == "toy-hash") {
    embedder = std::make_unique<ToyEmbedder>(index.corpus.embedding_dim(),
                                             index.embedder.seed);
  } else {
    throw Error(ErrorCode::kProviderUnavailable,
                "index was embedded remotely; set DPRAG_EMBED_URL");
  }

  std::unique_ptr<LanguageModel> lm;
  if (env.lm_url) {
    HttpLanguageModel::Options options;
    options.mode = engine.lm_request_mode;
    options.eos_token = engine.eos_token;
    options.context_limit = engine.lm_context_limit;
    lm = std::make_unique<HttpLanguageModel>(HttpEndpoint{*env.lm_url}, options);
  } else {
    std::vector<ToyRule> rules;
    if (!engine.toy_rules.empty()) {
      std::ifstream in(engine.toy_rules);
      if (!in) {
        throw Error(ErrorCode::kIo, "cannot open rules " + engine.toy_rules.string());
      }
      rules = read_toy_rules(in);
    }
    const std::vector<std::string> questions = {args.question};
    lm = std::make_unique<ToyLanguageModel>(
        toy_vocabulary(index.corpus, engine.prompt, engine.public_context,
                       questions, rules),
        rules, engine.toy_smoothing, engine.lm_context_limit);
  }

  GenerationOptions options;
  options.prompt = engine.prompt;
  options.public_context = engine.public_context;
  options.concurrency = engine.concurrency;
  if (args.unsafe_trace) {
    options.trace = [&](std::size_t step, const TokenStepReport& r) {
      nlohmann::json utility = nlohmann::json::array();
      for (double u : r.utility) {
        utility.push_back(std::isfinite(u) ? nlohmann::json(u) : nlohmann::json());
      }
      nlohmann::json line = {
          {"step", step},
          {"chosen", r.chosen.id},
          {"token", lm->vocabulary().text(r.chosen)},
          {"epsilon_spent", r.epsilon_spent},
          {"num_documents", r.num_documents},
          {"public_logprob_of_chosen",
           std::isfinite(r.public_logprob_of_chosen)
               ? nlohmann::json(r.public_logprob_of_chosen)
               : nlohmann::json()},
          {"utility", std::move(utility)}};
      err << line.dump() << '\n';
    };
  }

  RngState rng = args.seed ? RngState(*args.seed) : RngState::from_entropy();
  EmbedOptions embed_options;
  embed_options.concurrency = engine.concurrency;
  const auto outcome = answer_query(index.corpus, *embedder, *lm, args.question,
                                    params, accountant, rng, options,
                                    embed_options);
  out << "answer: " << outcome.generation.text << '\n'
      << "stop_reason: " << to_string(outcome.generation.stop_reason) << '\n'
      << "tokens: " << outcome.generation.tokens.size() << '\n'
      << "selected_documents: " << outcome.selected.size() << '\n'
      << "total_epsilon: " << json_double(outcome.generation.total_epsilon) << '\n'
      << "report: " << outcome.report.to_json() << '\n';
  return kExitOk;
}

int cmd_eval(const std::string& spec_path, const std::string& out_path,
             std::optional<std::size_t> jobs, bool baseline,
             const ParamFlags& flags, std::ostream& out, std::ostream& err) {
  const std::filesystem::path path(spec_path);
  ConfigMap config = load_config(path);
  // Flags override the spec file.
  if (flags.values.count("top_k")) config.erase("top_p");
  if (flags.values.count("top_p")) config.erase("top_k");
  for (const auto& [k, v] : flags.values) config[k] = v;
  EvalSpec spec = eval_spec_from_config(config, path.parent_path());
  if (jobs) spec.jobs = *jobs;
  if (baseline) spec.baseline = true;

  const EvalResult result = run_eval(spec, &err);
  std::ofstream csv(out_path);
  if (!csv) throw Error(ErrorCode::kIo, "cannot write " + out_path);
  write_accuracy_csv(csv, result);
  if (!csv.flush()) throw Error(ErrorCode::kIo, "cannot write " + out_path);

  out << "per_query_epsilon: " << json_double(result.per_query_epsilon) << '\n'
      << "delta: " << json_double(result.delta) << '\n';
  for (const auto& [f, acc] : result.per_frequency) {
    out << "frequency " << f << ": accuracy " << acc << " ("
        << result.correct.at(f) << '/' << spec.trials_per_frequency;
    if (result.failed.at(f)) out << ", " << result.failed.at(f) << " failed";
    out << ")";
    if (auto it = result.baseline.find(f); it != result.baseline.end()) {
      out << " baseline " << it->second;
    }
    out << '\n';
  }
  return kExitOk;
}

int cmd_serve_check(const CliEnvironment& env, long timeout_ms,
                    std::ostream& out) {
  bool ok = true;
  const std::chrono::milliseconds timeout(timeout_ms);
  const RetryPolicy retry{0, std::chrono::milliseconds(0)};
  if (env.embed_url) {
    try {
      const HttpEmbeddingProvider provider(HttpEndpoint{*env.embed_url, timeout},
                                           retry);
      const std::vector<std::string> probe = {"serve check"};
      const auto e = provider.embed(probe);
      out << "embed: ok " << *env.embed_url << " dim=" << e.at(0).dim() << '\n';
    } catch (const std::exception& e) {
      ok = false;
      out << "embed: FAIL " << *env.embed_url << ": " << e.what() << '\n';
    }
  } else {
    out << "embed: toy (DPRAG_EMBED_URL unset)\n";
  }
  if (env.lm_url) {
    try {
      HttpLanguageModel::Options options;
      options.retry = retry;
      const HttpLanguageModel lm(HttpEndpoint{*env.lm_url, timeout}, options);
      auto context = lm.tokenize("Question: serve check\nAnswer:");
      if (context.empty()) context.push_back(Token{0});
      next_token_distribution(lm, context);
      out << "lm: ok " << *env.lm_url << " vocab=" << lm.vocabulary().size()
          << " eos=" << (lm.vocabulary().eos() ? "yes" : "no") << '\n';
    } catch (const std::exception& e) {
      ok = false;
      out << "lm: FAIL " << *env.lm_url << ": " << e.what() << '\n';
    }
  } else {
    out << "lm: toy (DPRAG_LM_URL unset)\n";
  }
  return ok ? kExitOk : kExitFailure;
}

int cmd_synth(const SyntheticSpec& spec, const std::string& corpus_path,
              const std::string& rules_path, const std::string& answer,
              double mass, std::ostream& out) {
  RuleTarget target;
  if (answer == "disease") {
    target = RuleTarget::kDisease;
  } else if (answer == "treatment") {
    target = RuleTarget::kTreatment;
  } else {
    throw Error(ErrorCode::kInvalidArgument, "--answer must be disease or treatment");
  }
  const auto corpus = make_synthetic_corpus(spec);
  std::ofstream records(corpus_path);
  if (!records) throw Error(ErrorCode::kIo, "cannot write " + corpus_path);
  for (const auto& r : corpus.records) {
    records << nlohmann::json{{"doc_id", r.doc_id},
                              {"privacy_unit", r.privacy_unit},
                              {"text", r.text}}
                   .dump()
            << '\n';
  }
  if (!rules_path.empty()) {
    std::ofstream rules(rules_path);
    if (!rules) throw Error(ErrorCode::kIo, "cannot write " + rules_path);
    write_toy_rules(rules, synthetic_rules(corpus, target, mass));
  }
  for (std::size_t t = 0; t < corpus.num_targets; ++t) {
    const auto& d = corpus.diseases[t];
    out << d.frequency << '\t' << d.name << '\t' << d.treatment << '\t'
        << symptom_question(d) << '\n';
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err, const CliEnvironment& env) {
  CLI::App app{"Differentially private retrieval-augmented generation"};
  app.name(args.empty() ? "dprag" : args.front());
  app.require_subcommand(1);

  auto* ingest_cmd = app.add_subcommand("ingest", "Build an index from NDJSON records");
  std::string corpus_path, index_path, policy = "reject", ingest_config;
  std::optional<std::size_t> embedding_dim;
  std::optional<std::uint64_t> embedding_seed;
  ingest_cmd->add_option("--corpus", corpus_path, "NDJSON records")->required();
  ingest_cmd->add_option("--index", index_path, "Output index file")->required();
  ingest_cmd->add_option("--policy", policy, "Duplicate privacy units")
      ->check(CLI::IsMember({"reject", "concatenate"}));
  ingest_cmd->add_option("--config", ingest_config, "Config file");
  ingest_cmd->add_option("--embedding-dim", embedding_dim, "Toy embedding size");
  ingest_cmd->add_option("--embedding-seed", embedding_seed, "Toy embedding seed");

  auto* query_cmd = app.add_subcommand("query", "Answer one question privately");
  QueryArgs query;
  ParamFlags query_flags;
  query_cmd->add_option("--index", query.index_path, "Index file")->required();
  query_cmd->add_option("--question", query.question, "Question text")->required();
  query_cmd->add_option("--seed", query.seed, "RNG seed (default: entropy)");
  query_cmd->add_option("--config", query.config_path, "Config file");
  query_cmd->add_option("--rules", query.rules_path, "Toy LM rules (TSV)");
  query_cmd->add_option("--ledger", query.ledger_path,
                        "Privacy ledger to restore from and append to");
  query_cmd->add_option("--concurrency", query.concurrency,
                        "Provider calls in flight per step");
  query_cmd->add_flag("--unsafe-trace", query.unsafe_trace,
                      "Write per-step internals to stderr (not private)");
  query_flags.attach(*query_cmd);

  auto* eval_cmd = app.add_subcommand("eval", "Accuracy sweep over frequencies");
  std::string spec_path, csv_path;
  std::optional<std::size_t> jobs;
  bool baseline = false;
  ParamFlags eval_flags;
  eval_cmd->add_option("--spec", spec_path, "Eval spec file")->required();
  eval_cmd->add_option("--out", csv_path, "CSV output (frequency,accuracy)")->required();
  eval_cmd->add_option("--jobs", jobs, "Concurrent trials");
  eval_cmd->add_flag("--baseline", baseline, "Also run the non-private baseline");
  eval_flags.attach(*eval_cmd);

  auto* check_cmd = app.add_subcommand("serve-check", "Probe the remote backends");
  long timeout_ms = 5000;
  check_cmd->add_option("--timeout-ms", timeout_ms, "Per-request timeout");

  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic patient corpus");
  SyntheticSpec synth;
  std::string synth_corpus, synth_rules, answer = "disease", frequencies = "1,3,10,30,100";
  double mass = 0.9;
  synth_cmd->add_option("--out-corpus", synth_corpus, "NDJSON output")->required();
  synth_cmd->add_option("--out-rules", synth_rules, "Toy LM rules output");
  synth_cmd->add_option("--corpus-size", synth.corpus_size, "Number of records");
  synth_cmd->add_option("--frequencies", frequencies, "Comma-separated");
  synth_cmd->add_option("--seed", synth.seed, "Generator seed");
  synth_cmd->add_option("--answer", answer, "Rule target: disease or treatment");
  synth_cmd->add_option("--rule-mass", mass, "Mass a firing rule puts on its target");

  std::vector<std::string> argv(args.rbegin(), args.rend());
  if (!argv.empty()) argv.pop_back();
  try {
    app.parse(argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*ingest_cmd) {
      return cmd_ingest(corpus_path, index_path, policy, ingest_config,
                        embedding_dim, embedding_seed, env, out);
    }
    if (*query_cmd) return cmd_query(query, query_flags, env, out, err);
    if (*eval_cmd) {
      return cmd_eval(spec_path, csv_path, jobs, baseline, eval_flags, out, err);
    }
    if (*check_cmd) return cmd_serve_check(env, timeout_ms, out);
    if (*synth_cmd) {
      synth.frequencies =
          config_size_list({{"frequencies", frequencies}}, "frequencies", {});
      return cmd_synth(synth, synth_corpus, synth_rules, answer, mass, out);
    }
  } catch (const DuplicatePrivacyUnit& e) {
    err << "error: " << e.what() << '\n';
    return kExitDuplicateUnit;
  } catch (const BudgetExhausted& e) {
    err << "error: " << e.what() << '\n';
    return kExitBudget;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace dprag::cli
