#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace codegemm::cli {

// Exit statuses. Every nonzero exit also writes {"error": {...}} to `err`.
enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kConfig = 3,
  kShape = 4,
  kFormat = 5,
  kInvariant = 6,
};

// Runs one subcommand. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace codegemm::cli
