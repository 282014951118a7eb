#include <iostream>
#include <string>
#include <vector>

#include "dprag/cli/commands.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv, argv + argc);
  return dprag::cli::run_cli(args, std::cout, std::cerr,
                             dprag::cli::CliEnvironment::from_process());
}
