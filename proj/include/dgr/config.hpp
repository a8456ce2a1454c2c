#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dgr/model.hpp"
#include "dgr/schedule.hpp"
#include "dgr/trainer.hpp"
#include "dgr/types.hpp"

// Experiment configuration: one human-editable key-value file with [section]
// headers. Unknown keys are rejected by name; strategy and benchmark choose
// defaults, explicit keys override them.

namespace dgr {

enum class Benchmark { mnist5, permmnist10, cifar100_10 };

std::string to_string(Benchmark b);
Benchmark benchmark_from_string(const std::string& s);

// Grid driven by the schedule-ablation command; groups follow the figure
// numbering: (1) const alpha, (2) time-aware alpha, (3) const beta,
// (4) time-aware beta, (5)/(6) both, (7) decay over true labels,
// (8) decay over predicted labels.
struct AblateConfig {
  std::vector<int> groups{1, 2, 3, 4, 5, 6, 7, 8};
  std::vector<double> values{0.1, 0.2, 0.5, 1.0, 2.0};  // groups 1-6
  std::vector<double> floors{0.1, 0.2, 0.5};            // groups 7-8 lower bounds
  std::vector<double> amplitudes{2.0};                  // groups 7-8 upper bounds
  bool include_baseline = true;

  void validate() const;
};

struct ExperimentConfig {
  Benchmark benchmark = Benchmark::mnist5;
  Strategy strategy = Strategy::bir_dyn;
  TrainConfig train;
  ScheduleConfig schedule;
  ModelConfig model;
  AblateConfig ablate;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::string output_dir = "out";
  std::string data_dir;  // empty -> $DGR_DATA_DIR at load time

  // stream layout implied by benchmark + strategy (joint collapses the
  // stream to one task over every class)
  int stream_tasks() const;
  int stream_classes_per_task() const;

  void validate() const;
};

void to_json(nlohmann::json& j, const ExperimentConfig& c);

// "[section] key = value" files; '#' and ';' comments. Returns keys as
// "section.key" (top-of-file keys have no prefix). Duplicate keys and
// malformed lines raise ParseError carrying the byte offset of the line.
std::map<std::string, std::string> parse_kv_file(const std::filesystem::path& path);

ExperimentConfig load_experiment_config(const std::filesystem::path& path);

// Same schema applied to an already-parsed key map (used by tests).
ExperimentConfig experiment_config_from_map(std::map<std::string, std::string> kv);

}  // namespace dgr
