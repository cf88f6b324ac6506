#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace unisyn {

struct CommandResult {
  int exit_code = 0;  // 0 success, 1 runtime failure, 2 usage error
  std::vector<std::filesystem::path> artifacts;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Environment variable naming the default run root for `train`/`ablate`.
inline constexpr const char* kRunRootEnv = "UNISYN_RUN_ROOT";

/// Runs one command line; `args` excludes the program name.
CommandResult dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace unisyn
