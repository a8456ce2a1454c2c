#pragma once

#include <cmath>
#include <string>

#include "dgr/types.hpp"

namespace dgr {

// Ablation grid: baseline is the unmodified objective; const_* apply a fixed
// weight to every sample, aware_* apply it to replayed samples only, decay_*
// follow the exponential schedule with the time stamp inferred from either
// the true (conditioning) label or the predicted label.
enum class ScheduleMode {
  baseline,
  const_alpha,
  const_beta,
  const_both,
  aware_alpha,
  aware_beta,
  aware_both,
  decay_true_label,
  decay_pred_label,
};

enum class TimeSource { predicted, true_label };

struct ScheduleConfig {
  ScheduleMode mode = ScheduleMode::baseline;
  double k_alpha = 1.0;
  double k_beta = 10.0;
  double floor_a = 0.2;
  double floor_b = 0.2;
  // constants used by the const_* / aware_* modes
  double const_alpha = 0.5;
  double const_beta = 0.5;
  // optional decay upper bound; 1 keeps the weight of new data at exactly 1
  double amplitude = 1.0;
  TimeSource time_source = TimeSource::predicted;

  void validate() const {
    if (!(k_alpha >= 0 && std::isfinite(k_alpha))) throw ConfigError("must be finite and >= 0", "schedule.k_alpha");
    if (!(k_beta >= 0 && std::isfinite(k_beta))) throw ConfigError("must be finite and >= 0", "schedule.k_beta");
    if (!(floor_a >= 0 && floor_a <= 1)) throw ConfigError("must be in [0,1]", "schedule.floor_a");
    if (!(floor_b >= 0 && floor_b <= 1)) throw ConfigError("must be in [0,1]", "schedule.floor_b");
    if (!(amplitude > 0 && std::isfinite(amplitude))) throw ConfigError("must be finite and > 0", "schedule.amplitude");
  }

  bool time_aware() const {
    return mode == ScheduleMode::decay_true_label || mode == ScheduleMode::decay_pred_label ||
           mode == ScheduleMode::aware_alpha || mode == ScheduleMode::aware_beta ||
           mode == ScheduleMode::aware_both;
  }
};

// Elapsed tasks since the class labelled y was introduced, assuming labels
// arrive in blocks of classes_per_task. With the 1-indexed label inside the
// ceiling, every class of one task shares one age and the newest task maps
// to 0:  t = tasks_seen - ceil((y+1) / classes_per_task).
inline int infer_time(int y, int tasks_seen, int classes_per_task) {
  DGR_CHECK(tasks_seen >= 1 && classes_per_task >= 1, "infer_time: bad task layout");
  if (y < 0 || y >= tasks_seen * classes_per_task)
    throw Error("infer_time: label " + std::to_string(y) + " outside the seen range [0, " +
                std::to_string(tasks_seen * classes_per_task) + ")");
  return tasks_seen - 1 - y / classes_per_task;
}

// (amplitude - floor) * exp(-k*t) + floor, with t = 0 returned exactly as
// the amplitude so new data is never down-weighted by rounding.
inline double decay_weight(int t_hat, double k, double floor, double amplitude) {
  DGR_CHECK(t_hat >= 0, "decay_weight: negative time");
  if (t_hat == 0) return amplitude;
  return (amplitude - floor) * std::exp(-k * double(t_hat)) + floor;
}

inline double alpha_at(int t_hat, const ScheduleConfig& cfg) {
  return decay_weight(t_hat, cfg.k_alpha, cfg.floor_a, cfg.amplitude);
}

inline double beta_at(int t_hat, const ScheduleConfig& cfg) {
  return decay_weight(t_hat, cfg.k_beta, cfg.floor_b, cfg.amplitude);
}

struct SampleWeights {
  VectorI t_hat;
  VectorD alpha;
  VectorD beta;
};

// Mode dispatch for one sample of age t_hat.
inline void mode_weights(int t_hat, const ScheduleConfig& cfg, double& a, double& b) {
  switch (cfg.mode) {
    case ScheduleMode::baseline:
      a = 1.0; b = 1.0; break;
    case ScheduleMode::const_alpha:
      a = cfg.const_alpha; b = 1.0; break;
    case ScheduleMode::const_beta:
      a = 1.0; b = cfg.const_beta; break;
    case ScheduleMode::const_both:
      a = cfg.const_alpha; b = cfg.const_beta; break;
    case ScheduleMode::aware_alpha:
      a = t_hat == 0 ? 1.0 : cfg.const_alpha; b = 1.0; break;
    case ScheduleMode::aware_beta:
      a = 1.0; b = t_hat == 0 ? 1.0 : cfg.const_beta; break;
    case ScheduleMode::aware_both:
      a = t_hat == 0 ? 1.0 : cfg.const_alpha;
      b = t_hat == 0 ? 1.0 : cfg.const_beta;
      break;
    case ScheduleMode::decay_true_label:
    case ScheduleMode::decay_pred_label:
      a = alpha_at(t_hat, cfg); b = beta_at(t_hat, cfg); break;
  }
}

// Vectorized composition of infer_time + the mode dispatch. The caller picks
// the label column (predicted vs true) according to cfg.time_source; real
// current-task batches should instead use current_weights(), which pins
// t_hat = 0 no matter where the labels came from.
inline SampleWeights weights_for_batch(const VectorI& labels, int tasks_seen,
                                       int classes_per_task, const ScheduleConfig& cfg) {
  const Index n = labels.size();
  SampleWeights w;
  w.t_hat.resize(n);
  w.alpha.resize(n);
  w.beta.resize(n);
  for (Index i = 0; i < n; ++i) {
    w.t_hat[i] = infer_time(labels[i], tasks_seen, classes_per_task);
    mode_weights(w.t_hat[i], cfg, w.alpha[i], w.beta[i]);
  }
  return w;
}

inline SampleWeights current_weights(Index n, const ScheduleConfig& cfg) {
  SampleWeights w;
  w.t_hat = VectorI::Zero(n);
  w.alpha.resize(n);
  w.beta.resize(n);
  double a, b;
  mode_weights(0, cfg, a, b);
  w.alpha.setConstant(a);
  w.beta.setConstant(b);
  return w;
}

// The decay_* modes name their own label source; everything else defers to
// the config field.
inline TimeSource effective_time_source(const ScheduleConfig& cfg) {
  if (cfg.mode == ScheduleMode::decay_true_label) return TimeSource::true_label;
  if (cfg.mode == ScheduleMode::decay_pred_label) return TimeSource::predicted;
  return cfg.time_source;
}

ScheduleMode schedule_mode_from_string(const std::string& s);
std::string to_string(ScheduleMode m);
TimeSource time_source_from_string(const std::string& s);
std::string to_string(TimeSource t);

}  // namespace dgr
