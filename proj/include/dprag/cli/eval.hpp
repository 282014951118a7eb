#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <vector>

#include "dprag/cli/config.hpp"
#include "dprag/core.hpp"

namespace dprag::cli {

// Accuracy-versus-frequency sweep over a synthetic patient corpus, run
// entirely on the toy backends.
struct EvalSpec {
  std::vector<std::size_t> frequencies = {1, 3, 10, 30, 100};
  std::size_t corpus_size = 1000;
  std::size_t trials_per_frequency = 50;
  std::uint64_t seed = 0;
  EngineConfig engine;
  double rule_mass = 0.9;
  std::size_t jobs = 1;
  // Also score the non-private all-documents-in-one-prompt baseline.
  bool baseline = false;

  // Throws Error{kInvalidArgument}.
  void validate() const;
};

struct EvalResult {
  std::map<std::size_t, double> per_frequency;
  // Pessimistic charge admitted for every query.
  double per_query_epsilon = 0.0;
  double delta = 0.0;
  std::map<std::size_t, std::size_t> correct;
  std::map<std::size_t, std::size_t> failed;
  std::map<std::size_t, double> baseline;
};

// Each trial owns an RngState split from the spec seed by its global trial
// index (frequency position * trials + trial) and a fresh accountant, so the
// result does not depend on `jobs`. A failing trial counts as incorrect and
// is reported to `log` when given.
EvalResult run_eval(const EvalSpec& spec, std::ostream* log = nullptr);

// Spec files use the config format with the extra keys frequencies (comma
// separated), corpus_size, trials_per_frequency, seed, rule_mass, jobs and
// baseline (0/1).
EvalSpec load_eval_spec(const std::filesystem::path& path);
EvalSpec eval_spec_from_config(const ConfigMap& config,
                               const std::filesystem::path& base_dir = {});

// "frequency,accuracy" header plus one row per frequency.
void write_accuracy_csv(std::ostream& out, const EvalResult& result);

}  // namespace dprag::cli
