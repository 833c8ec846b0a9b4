#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include "fluxqp/cli_io.hpp"
#include "fluxqp/config.hpp"

namespace fluxqp::io {

struct RunOptions {
  fs::path config;
  fs::path out = "out";
  std::optional<std::uint64_t> seed;  // overrides the configuration seed
  int jobs = 1;
  bool verbose = false;
};

/// Runs fn(0) ... fn(count - 1) on up to `jobs` threads. Results must be
/// stored by index so that assembly does not depend on scheduling.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn);

// Each command writes its outputs below options.out and returns an exit code.
int cmd_simulate_spectrum(const RunConfig& cfg, const RunOptions& options);
int cmd_fit_s21(const RunConfig& cfg, const RunOptions& options);
int cmd_fit_power_sweep(const RunConfig& cfg, const RunOptions& options);
int cmd_fit_spectrum(const RunConfig& cfg, const RunOptions& options);
int cmd_predict_t1(const RunConfig& cfg, const RunOptions& options);
int cmd_synthesize(const RunConfig& cfg, const RunOptions& options);
int cmd_validate(const RunConfig& cfg, const RunOptions& options);

/// Command-line entry point; returns the process exit code.
int run_cli(int argc, char** argv);

}  // namespace fluxqp::io
