#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "dgr/config.hpp"
#include "dgr/datastream.hpp"
#include "dgr/results.hpp"

// Command implementations behind the CLI. Each throws ConfigError for schema
// problems and Error for runtime failures; the CLI maps those to exit codes.

namespace dgr {

// Benchmark defaults with nothing overridden (tests and the FID extractor
// builder use this instead of a config file).
ExperimentConfig make_benchmark_config(Benchmark b, Strategy s);

// Loads the dataset named by the config and slices it into the task stream.
TaskStream build_stream(const ExperimentConfig& cfg);

std::filesystem::path run_directory(const ExperimentConfig& cfg, std::uint64_t seed);

// Trains one (strategy, seed) sequence, writes result.json + companion files
// under dir, and returns the result. `variant` labels ablation cells.
RunResult execute_run(const ExperimentConfig& cfg, std::uint64_t seed,
                      const std::filesystem::path& dir,
                      const std::string& variant = "");

void cmd_run(const std::filesystem::path& config_path, std::ostream& out);

// One cell of the schedule-ablation grid.
struct AblationRun {
  int group = 0;            // 1..8 = figure-style groups; 0 = baseline reference
  std::string name;         // directory-safe identifier
  Strategy strategy = Strategy::bir_dyn;
  ScheduleConfig schedule;
  double value = 0.0;       // grid value the name encodes
  bool best = false;        // marks the preferred group for replay-quality checks
};

// Expands cfg.ablate into individual runs (empty filter = every configured
// group, plus the baseline reference when enabled).
std::vector<AblationRun> ablation_plan(const ExperimentConfig& cfg,
                                       const std::vector<int>& groups);

struct AblateOptions {
  bool dry_run = false;
  std::vector<int> groups;  // empty = all
};

void cmd_ablate(const std::filesystem::path& config_path, const AblateOptions& opt,
                std::ostream& out);

void cmd_report(const std::filesystem::path& results_dir, std::ostream& out);

struct FidOptions {
  std::string extractor;  // cache path override; empty = per-benchmark default
  int samples = 0;        // per side; 0 = benchmark default
};

void cmd_fid(const std::filesystem::path& run_dir, const FidOptions& opt,
             std::ostream& out);

void cmd_dump_samples(const std::filesystem::path& run_dir, int per_class,
                      std::ostream& out);

}  // namespace dgr
