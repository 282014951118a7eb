#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "dprag/core.hpp"
#include "dprag/http_lm.hpp"
#include "dprag/lm.hpp"

namespace dprag::cli {

// Flat "key = value" lines. '#' starts a comment line; blank lines are
// skipped; later keys override earlier ones. Values may use \n and \t
// escapes.
using ConfigMap = std::map<std::string, std::string>;

ConfigMap parse_config(std::istream& in);
ConfigMap load_config(const std::filesystem::path& path);

// Everything a query needs besides the index.
struct EngineConfig {
  PrivacyParams params;
  // False until epsilon_per_token is given explicitly; otherwise it is
  // derived as (epsilon_budget - epsilon_retrieval) / max_tokens.
  bool epsilon_per_token_set = false;

  PromptTemplate prompt;
  std::string public_context;
  std::size_t concurrency = 1;

  // Toy backends.
  std::size_t embedding_dim = 256;
  std::uint64_t embedding_seed = 0;
  std::filesystem::path toy_rules;
  double toy_smoothing = 0.0;
  std::size_t lm_context_limit = 8192;

  // Remote backends.
  std::string eos_token = "</s>";
  HttpLanguageModel::RequestMode lm_request_mode =
      HttpLanguageModel::RequestMode::kTokens;

  // Fills epsilon_per_token from the default split when it was not set.
  void finalize();
};

// Applies the PrivacyParams keys (epsilon_budget, epsilon_retrieval,
// epsilon_per_token, delta, clip_c, theta, alpha_icl, alpha_retrieval,
// top_k, top_p, max_tokens) and the engine keys. Relative paths resolve
// against `base_dir`. Unknown keys are an Error{kFormat} unless listed in
// `extra_keys`.
void apply_config(const ConfigMap& config, EngineConfig& engine,
                  const std::filesystem::path& base_dir = {},
                  const std::set<std::string>& extra_keys = {});

// Typed accessors; throw Error{kFormat} naming the key on bad values.
double config_double(const ConfigMap& c, const std::string& key, double fallback);
std::size_t config_size(const ConfigMap& c, const std::string& key,
                        std::size_t fallback);
std::uint64_t config_u64(const ConfigMap& c, const std::string& key,
                         std::uint64_t fallback);
// Comma-separated non-negative integers.
std::vector<std::size_t> config_size_list(const ConfigMap& c,
                                          const std::string& key,
                                          std::vector<std::size_t> fallback);

// Human-readable dump, one key per line, in the file format.
void write_params(std::ostream& out, const PrivacyParams& params);

}  // namespace dprag::cli
