#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace dprag::cli {

// Exit statuses.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitDuplicateUnit = 2;
inline constexpr int kExitBudget = 3;

// Backend selection. Unset URLs select the toy backends.
struct CliEnvironment {
  std::optional<std::string> lm_url;     // DPRAG_LM_URL
  std::optional<std::string> embed_url;  // DPRAG_EMBED_URL

  static CliEnvironment from_process();
};

// Entry point of the dprag tool. args[0] is the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err, const CliEnvironment& env);

}  // namespace dprag::cli
