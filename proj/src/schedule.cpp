#include "dgr/schedule.hpp"

#include <array>
#include <utility>

namespace dgr {

namespace {
constexpr std::array<std::pair<ScheduleMode, const char*>, 9> kModeNames{{
    {ScheduleMode::baseline, "baseline"},
    {ScheduleMode::const_alpha, "const_alpha"},
    {ScheduleMode::const_beta, "const_beta"},
    {ScheduleMode::const_both, "const_both"},
    {ScheduleMode::aware_alpha, "aware_alpha"},
    {ScheduleMode::aware_beta, "aware_beta"},
    {ScheduleMode::aware_both, "aware_both"},
    {ScheduleMode::decay_true_label, "decay_true_label"},
    {ScheduleMode::decay_pred_label, "decay_pred_label"},
}};
}  // namespace

ScheduleMode schedule_mode_from_string(const std::string& s) {
  for (const auto& [mode, name] : kModeNames)
    if (s == name) return mode;
  throw ConfigError("unknown schedule mode '" + s + "'", "schedule.mode");
}

std::string to_string(ScheduleMode m) {
  for (const auto& [mode, name] : kModeNames)
    if (mode == m) return name;
  return "?";
}

TimeSource time_source_from_string(const std::string& s) {
  if (s == "predicted") return TimeSource::predicted;
  if (s == "true" || s == "true_label") return TimeSource::true_label;
  throw ConfigError("unknown time source '" + s + "'", "schedule.time_source");
}

std::string to_string(TimeSource t) {
  return t == TimeSource::predicted ? "predicted" : "true_label";
}

}  // namespace dgr
