#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dgr/eval.hpp"
#include "dgr/types.hpp"

// One result file per (strategy, seed) run. The file carries everything
// needed to reproduce the run: config echo, seed, build id.

namespace dgr {

std::string build_id();

struct RunResult {
  int schema_version = 1;
  std::string build;
  std::string benchmark;
  std::string strategy;
  std::string variant;  // ablation cell name; empty for plain runs
  std::uint64_t seed = 0;
  nlohmann::json config_echo;
  AccuracyMatrix acc;
  double average_final = 0.0;
  double fid = std::numeric_limits<double>::quiet_NaN();  // NaN until cmd_fid fills it
  double wall_seconds = 0.0;
  // companion files, relative to the result's directory
  std::string train_log;
  std::string checkpoint;
  std::string replay_grid;
};

nlohmann::json to_json(const RunResult& r);
RunResult run_result_from_json(const nlohmann::json& j);

// Written to a temp file in the target directory, then renamed into place.
void save_run_result(const std::filesystem::path& path, const RunResult& r);
RunResult load_run_result(const std::filesystem::path& path);

// Every result.json found under `dir` (recursive), sorted by path.
std::vector<std::filesystem::path> find_result_files(const std::filesystem::path& dir);

}  // namespace dgr
