#include "dprag/cli/config.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "dprag/error.hpp"

namespace dprag::cli {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string unescape(const std::string& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size()) {
      const char n = s[i + 1];
      if (n == 'n') {
        out += '\n';
        ++i;
        continue;
      }
      if (n == 't') {
        out += '\t';
        ++i;
        continue;
      }
      if (n == '\\') {
        out += '\\';
        ++i;
        continue;
      }
    }
    out += s[i];
  }
  return out;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw Error(ErrorCode::kFormat, "bad value '" + value + "' for " + key);
}

const std::set<std::string>& engine_keys() {
  static const std::set<std::string> keys = {
      "epsilon_budget",   "epsilon_retrieval", "epsilon_per_token",
      "delta",            "clip_c",            "theta",
      "alpha_icl",        "alpha_retrieval",   "top_k",
      "top_p",            "max_tokens",        "system_preamble",
      "document_slot",    "question_slot",     "public_context",
      "concurrency",      "embedding_dim",     "embedding_seed",
      "toy_rules",        "toy_smoothing",     "lm_context_limit",
      "eos_token",        "lm_request_mode"};
  return keys;
}

}  // namespace

ConfigMap parse_config(std::istream& in) {
  ConfigMap out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kFormat,
                  "config line " + std::to_string(line_no) + ": missing '='");
    }
    const std::string key = trim(t.substr(0, eq));
    if (key.empty()) {
      throw Error(ErrorCode::kFormat,
                  "config line " + std::to_string(line_no) + ": empty key");
    }
    out[key] = unescape(trim(t.substr(eq + 1)));
  }
  return out;
}

ConfigMap load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config " + path.string());
  return parse_config(in);
}

double config_double(const ConfigMap& c, const std::string& key,
                     double fallback) {
  const auto it = c.find(key);
  if (it == c.end()) return fallback;
  const char* begin = it->second.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0' || errno == ERANGE || std::isnan(v)) {
    bad_value(key, it->second);
  }
  return v;
}

std::uint64_t config_u64(const ConfigMap& c, const std::string& key,
                         std::uint64_t fallback) {
  const auto it = c.find(key);
  if (it == c.end()) return fallback;
  const char* begin = it->second.c_str();
  char* end = nullptr;
  errno = 0;
  if (it->second.empty() || it->second.front() == '-') bad_value(key, it->second);
  const unsigned long long v = std::strtoull(begin, &end, 10);
  if (end == begin || *end != '\0' || errno == ERANGE) bad_value(key, it->second);
  return v;
}

std::size_t config_size(const ConfigMap& c, const std::string& key,
                        std::size_t fallback) {
  return static_cast<std::size_t>(config_u64(c, key, fallback));
}

std::vector<std::size_t> config_size_list(const ConfigMap& c,
                                          const std::string& key,
                                          std::vector<std::size_t> fallback) {
  const auto it = c.find(key);
  if (it == c.end()) return fallback;
  std::vector<std::size_t> out;
  std::stringstream ss(it->second);
  std::string item;
  while (std::getline(ss, item, ',')) {
    out.push_back(config_size({{key, trim(item)}}, key, 0));
  }
  if (out.empty()) bad_value(key, it->second);
  return out;
}

void EngineConfig::finalize() {
  if (epsilon_per_token_set) return;
  const double split = (params.epsilon_budget - params.epsilon_retrieval) /
                       static_cast<double>(params.max_tokens);
  if (std::isfinite(split) && split > 0.0) params.epsilon_per_token = split;
}

void apply_config(const ConfigMap& config, EngineConfig& engine,
                  const std::filesystem::path& base_dir,
                  const std::set<std::string>& extra_keys) {
  for (const auto& [key, value] : config) {
    if (!engine_keys().count(key) && !extra_keys.count(key)) {
      throw Error(ErrorCode::kFormat, "unknown config key '" + key + "'");
    }
  }
  auto& p = engine.params;
  p.epsilon_budget = config_double(config, "epsilon_budget", p.epsilon_budget);
  p.epsilon_retrieval =
      config_double(config, "epsilon_retrieval", p.epsilon_retrieval);
  if (config.count("epsilon_per_token")) {
    p.epsilon_per_token = config_double(config, "epsilon_per_token", 0.0);
    engine.epsilon_per_token_set = true;
  }
  p.delta = config_double(config, "delta", p.delta);
  p.clip_c = config_double(config, "clip_c", p.clip_c);
  p.theta = config_double(config, "theta", p.theta);
  p.alpha_icl = config_double(config, "alpha_icl", p.alpha_icl);
  p.alpha_retrieval = config_double(config, "alpha_retrieval", p.alpha_retrieval);
  if (config.count("top_k") && config.count("top_p")) {
    throw Error(ErrorCode::kFormat, "top_k and top_p are exclusive");
  }
  if (config.count("top_k")) p.mode = TopK{config_size(config, "top_k", 0)};
  if (config.count("top_p")) p.mode = TopP{config_double(config, "top_p", 0.0)};
  p.max_tokens = config_size(config, "max_tokens", p.max_tokens);

  auto str = [&](const char* key, std::string& field) {
    if (auto it = config.find(key); it != config.end()) field = it->second;
  };
  str("system_preamble", engine.prompt.system_preamble);
  str("document_slot", engine.prompt.document_slot);
  str("question_slot", engine.prompt.question_slot);
  str("public_context", engine.public_context);
  str("eos_token", engine.eos_token);
  engine.concurrency = config_size(config, "concurrency", engine.concurrency);
  engine.embedding_dim = config_size(config, "embedding_dim", engine.embedding_dim);
  engine.embedding_seed =
      config_u64(config, "embedding_seed", engine.embedding_seed);
  engine.toy_smoothing = config_double(config, "toy_smoothing", engine.toy_smoothing);
  engine.lm_context_limit =
      config_size(config, "lm_context_limit", engine.lm_context_limit);
  if (auto it = config.find("toy_rules"); it != config.end()) {
    std::filesystem::path rules(it->second);
    engine.toy_rules = rules.is_relative() && !base_dir.empty()
                           ? base_dir / rules
                           : rules;
  }
  if (auto it = config.find("lm_request_mode"); it != config.end()) {
    if (it->second == "tokens") {
      engine.lm_request_mode = HttpLanguageModel::RequestMode::kTokens;
    } else if (it->second == "text") {
      engine.lm_request_mode = HttpLanguageModel::RequestMode::kText;
    } else {
      bad_value("lm_request_mode", it->second);
    }
  }
}

void write_params(std::ostream& out, const PrivacyParams& p) {
  std::ostringstream os;
  os.precision(17);
  os << "epsilon_budget = " << p.epsilon_budget << '\n'
     << "epsilon_retrieval = " << p.epsilon_retrieval << '\n'
     << "epsilon_per_token = " << p.epsilon_per_token << '\n'
     << "delta = " << p.delta << '\n'
     << "clip_c = " << p.clip_c << '\n'
     << "theta = " << p.theta << '\n'
     << "alpha_icl = " << p.alpha_icl << '\n'
     << "alpha_retrieval = " << p.alpha_retrieval << '\n';
  if (const auto* k = std::get_if<TopK>(&p.mode)) {
    os << "top_k = " << k->k << '\n';
  } else {
    os << "top_p = " << std::get<TopP>(p.mode).p << '\n';
  }
  os << "max_tokens = " << p.max_tokens << '\n';
  out << os.str();
}

}  // namespace dprag::cli
