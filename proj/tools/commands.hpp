#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace macroreal::cli {

struct CommandOptions {
  std::filesystem::path config;
  std::optional<std::filesystem::path> out;
  bool oracle = false;
  int workers = 0;  // 0: OpenMP default
};

enum ExitCode { ok = 0, failure = 1, config_error = 2, regime_error = 3, refusal = 4 };

/// Runs one subcommand; never throws. Messages go to `log` and `err`.
int run_command(const std::string& name, const CommandOptions& options, std::ostream& log,
                std::ostream& err);

}  // namespace macroreal::cli
