#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Two-time weak measurement simulator and macrorealism protocol"};
  app.require_subcommand(1);
  macroreal::cli::CommandOptions opts;
  std::string out;

  auto add = [&](const char* name, const char* help, bool oracle) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opts.config, "JSON experiment config")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output directory (overrides the config)");
    sub->add_option("--workers", opts.workers, "worker threads, 0 for the default")->check(CLI::NonNegativeNumber);
    if (oracle) sub->add_flag("--oracle", opts.oracle, "add a brute-force cross-check column");
    return sub;
  };
  add("eigensolve", "diagonalize H and write its spectrum", false);
  add("correlate", "correlation traces per (sigma, tau)", true);
  add("reproduce-fig1", "autocorrelation spectra versus sigma", false);
  add("reproduce-fig2", "Delta statistic over sigma and N", false);
  add("protocol", "IWM scan, NSIT test and verdict", false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : macroreal::cli::ExitCode::config_error;
  }
  if (!out.empty()) opts.out = out;
  const auto* sub = app.get_subcommands().front();
  return macroreal::cli::run_command(sub->get_name(), opts, std::cout, std::cerr);
}
