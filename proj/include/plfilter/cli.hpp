#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace plf::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

// Environment variable that sets the default worker count for `score`.
inline constexpr const char* kThreadsEnv = "PLFILTER_THREADS";

/// Runs one CLI invocation. `args` excludes the program name.
/// Subcommands: validate, score, select, eval-wer, eval-auc, synth-bench, kd-loss.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace plf::cli
