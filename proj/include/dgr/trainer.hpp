#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "dgr/adam.hpp"
#include "dgr/datastream.hpp"
#include "dgr/eval.hpp"
#include "dgr/model.hpp"
#include "dgr/rng.hpp"
#include "dgr/schedule.hpp"
#include "dgr/types.hpp"

// Sequential task training: snapshot the previous model, generate labeled
// replay, assemble the per-sample weighted loss over both branches, step the
// optimizer.

namespace dgr {

enum class Strategy { none, joint, gr, bir, bir_dyn };

inline std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::none: return "none";
    case Strategy::joint: return "joint";
    case Strategy::gr: return "gr";
    case Strategy::bir: return "bir";
    case Strategy::bir_dyn: return "bir_dyn";
  }
  return "?";
}

inline Strategy strategy_from_string(const std::string& s) {
  if (s == "none") return Strategy::none;
  if (s == "joint") return Strategy::joint;
  if (s == "gr") return Strategy::gr;
  if (s == "bir") return Strategy::bir;
  if (s == "bir_dyn") return Strategy::bir_dyn;
  throw ConfigError("unknown strategy '" + s + "'", "strategy");
}

inline bool strategy_uses_replay(Strategy s) {
  return s == Strategy::gr || s == Strategy::bir || s == Strategy::bir_dyn;
}

struct TrainConfig {
  Strategy strategy = Strategy::bir_dyn;
  int iterations_per_task = 2000;
  int batch_size = 128;
  int replay_batch_size = 128;
  std::string optimizer = "adam";
  double lr = 1e-3;
  double adam_beta1 = 0.9, adam_beta2 = 0.999, adam_eps = 1e-8;
  double distill_temperature = 2.0;  // 0 -> hard argmax targets for replay
  bool weighted_branches = true;     // 1/t vs 1-1/t; false = unweighted sums
  std::uint64_t seed = 1;
  int log_every = 100;

  void validate() const {
    if (iterations_per_task <= 0)
      throw ConfigError("must be positive", "train.iterations_per_task");
    if (batch_size <= 0) throw ConfigError("must be positive", "train.batch_size");
    if (replay_batch_size <= 0)
      throw ConfigError("must be positive", "train.replay_batch_size");
    if (optimizer != "adam")
      throw ConfigError("unknown optimizer '" + optimizer + "'", "train.optimizer");
    if (lr <= 0) throw ConfigError("must be positive", "train.lr");
    if (distill_temperature < 0)
      throw ConfigError("must be >= 0 (0 selects hard targets)",
                        "train.distill_temperature");
    if (log_every <= 0) throw ConfigError("must be positive", "train.log_every");
  }
};

// Column-wise softmax restricted to `mask` classes at temperature T; masked
// rows get p = 0 (and contribute nothing to gradients — exactly).
template <typename S>
void masked_softmax(const Matrix<S>& logits, const std::vector<std::uint8_t>& mask, S T,
                    Matrix<S>& p, Matrix<S>& logp) {
  const Index K = logits.rows(), B = logits.cols();
  DGR_CHECK(Index(mask.size()) == K, "masked_softmax: mask size mismatch");
  p.resize(K, B);
  logp.resize(K, B);
  const S ninf = -std::numeric_limits<S>::infinity();
  for (Index j = 0; j < B; ++j) {
    S mx = ninf;
    for (Index c = 0; c < K; ++c)
      if (mask[size_t(c)] && logits(c, j) / T > mx) mx = logits(c, j) / T;
    S denom = S(0);
    for (Index c = 0; c < K; ++c)
      denom += mask[size_t(c)] ? std::exp(logits(c, j) / T - mx) : S(0);
    const S log_denom = std::log(denom);
    for (Index c = 0; c < K; ++c) {
      if (mask[size_t(c)]) {
        const S lp = logits(c, j) / T - mx - log_denom;
        logp(c, j) = lp;
        p(c, j) = std::exp(lp);
      } else {
        logp(c, j) = ninf;
        p(c, j) = S(0);
      }
    }
  }
}

// One training branch: data, targets, and per-sample objective weights.
template <typename S>
struct BranchData {
  Matrix<S> x;
  VectorI labels;              // hard CE targets (and argmax of targets_soft)
  Matrix<S> targets_soft;      // [K, B]; empty -> hard cross-entropy on labels
  VectorI prior_ids;           // class rows for the KL prior; empty -> N(0, I)
  VectorI gate_ids;            // decoder gating rows; empty -> ungated
  Vector<S> alpha, beta;       // per-sample recon/KL weights
  std::vector<std::uint8_t> class_mask;  // active classes for the task loss
  double weight = 1.0;         // branch weight in the combined loss
};

struct BranchTerms {
  double recon = 0, kl = 0, task = 0;  // means over the branch's samples
  double weight = 1.0;
  double sum() const { return recon + kl + task; }
};

struct LossBreakdown {
  BranchTerms current, replay;
  bool has_replay = false;
  double total() const {
    double t = current.weight * current.sum();
    if (has_replay) t += replay.weight * replay.sum();
    return t;
  }
};

// Forward (and optionally backward) pass of one branch. Noise for the
// reparameterized draw comes from noise_rng in both modes, so a forward-only
// call consumes the stream identically.
template <typename S>
BranchTerms branch_pass(UnifiedModel<S>& model, const BranchData<S>& br, double temperature,
                        bool backward, Rng& noise_rng) {
  const Index B = br.x.cols();
  const ReconKind kind = model.config().recon;
  BranchTerms out;
  out.weight = br.weight;

  EncodeState<S> es;
  model.encode(br.x, es);

  Matrix<S> noise(es.mu.rows(), B);
  noise_rng.fill_normal(noise);
  Matrix<S> z;
  reparameterize(es.mu, es.lv, noise, z);

  DecodeState<S> ds;
  model.decode(z, br.gate_ids, ds);

  Matrix<S> logits;
  model.classify(es.mu, logits);

  Vector<S> rec = recon_values(kind, br.x, ds.x_hat);
  Vector<S> kl = model.kl_values(es.mu, es.lv, br.prior_ids);

  const bool soft = br.targets_soft.size() > 0;
  const S T = S(soft && temperature > 0 ? temperature : 1.0);
  Matrix<S> p, logp;
  masked_softmax(logits, br.class_mask, T, p, logp);

  double task_sum = 0;
  if (soft) {
    for (Index j = 0; j < B; ++j) {
      S s = 0;
      for (Index c = 0; c < logits.rows(); ++c)
        if (br.targets_soft(c, j) > S(0)) s -= br.targets_soft(c, j) * logp(c, j);
      task_sum += double(T) * double(T) * double(s);
    }
  } else {
    for (Index j = 0; j < B; ++j) task_sum -= double(logp(br.labels[j], j));
  }

  out.recon = double((rec.array() * br.alpha.array()).sum()) / double(B);
  out.kl = double((kl.array() * br.beta.array()).sum()) / double(B);
  out.task = task_sum / double(B);

  if (!backward) return out;

  const S scale = S(br.weight / double(B));

  // task head
  Matrix<S> dlogits = p;
  if (soft) {
    dlogits -= br.targets_soft;
    dlogits *= T * scale;  // d/dlogits of T^2 * CE(targets, softmax(logits/T))
  } else {
    for (Index j = 0; j < B; ++j) dlogits(br.labels[j], j) -= S(1);
    dlogits *= scale;
  }
  Matrix<S> dmu;
  model.classify_backward(es.mu, dlogits, dmu);

  // reconstruction through the decoder
  Vector<S> wr = br.alpha * scale;
  Matrix<S> dpx;
  recon_grad_px(kind, br.x, ds.x_hat, wr, dpx);
  Matrix<S> dz;
  model.decode_backward(ds, dpx, dz);

  // reparameterization: dmu += dz, dlv += dz * (z - mu) / 2
  dmu += dz;
  Matrix<S> dlv = (dz.array() * (z - es.mu).array() * S(0.5)).matrix();

  // KL against the (conditional) prior
  Vector<S> wk = br.beta * scale;
  model.kl_backward(es.mu, es.lv, br.prior_ids, wk, dmu, dlv);

  model.encode_backward(es, dmu, dlv);
  return out;
}

// --- replay generation -------------------------------------------------------

template <typename S>
struct ReplayBatch {
  Matrix<S> x_hat;
  Matrix<S> y_soft;  // rows sum to 1 over the generator's seen classes
  VectorI y_hard;
  VectorI gen_ids;   // conditioning classes (empty for an unconditional prior)
  SampleWeights weights;
};

// Draw balanced classes from the frozen snapshot, decode, and label with the
// snapshot's own (temperature-softened) predictions.
template <typename S>
ReplayBatch<S> generate_replay(const UnifiedModel<S>& prev, int count, int tasks_seen,
                               int classes_per_task, const ScheduleConfig& scfg,
                               double temperature, Rng& rng) {
  const auto& seen = prev.seen_classes();
  if (seen.empty()) throw Error("generate_replay: snapshot has no seen classes");
  DGR_CHECK(count >= 1, "generate_replay: count must be >= 1");

  ReplayBatch<S> rb;
  const bool conditional = prev.config().conditional_prior;
  Matrix<S> z;
  if (conditional) {
    rb.gen_ids.resize(count);
    for (int j = 0; j < count; ++j)
      rb.gen_ids[j] = seen[size_t(rng.below(std::uint64_t(seen.size())))];
    Matrix<S> noise(prev.config().d_z, count);
    rng.fill_normal(noise);
    prev.sample_conditional(rb.gen_ids, noise, z);
  } else {
    z.resize(prev.config().d_z, count);
    rng.fill_normal(z);
  }

  DecodeState<S> ds;
  prev.decode(z, prev.config().gating ? rb.gen_ids : VectorI(), ds);
  rb.x_hat = std::move(ds.x_hat);

  EncodeState<S> es;
  prev.encode(rb.x_hat, es);
  Matrix<S> logits;
  prev.classify(es.mu, logits);

  std::vector<std::uint8_t> mask(size_t(prev.config().num_classes), 0);
  for (int c : seen) mask[size_t(c)] = 1;

  rb.y_hard.resize(count);
  for (int j = 0; j < count; ++j) {
    int best = seen[0];
    S best_v = logits(seen[0], j);
    for (int c : seen)
      if (logits(c, j) > best_v) {
        best_v = logits(c, j);
        best = c;
      }
    rb.y_hard[j] = best;
  }

  if (temperature > 0) {
    Matrix<S> logp;
    masked_softmax(logits, mask, S(temperature), rb.y_soft, logp);
  } else {
    rb.y_soft = Matrix<S>::Zero(logits.rows(), count);
    for (int j = 0; j < count; ++j) rb.y_soft(rb.y_hard[j], j) = S(1);
  }

  const bool use_true = effective_time_source(scfg) == TimeSource::true_label;
  const VectorI& time_labels = (use_true && conditional) ? rb.gen_ids : rb.y_hard;
  rb.weights = weights_for_batch(time_labels, tasks_seen, classes_per_task, scfg);
  return rb;
}

// --- per-task loop -----------------------------------------------------------

struct TaskLogSink {
  std::ostream* stream = nullptr;
  void row(const nlohmann::json& j) {
    if (stream) (*stream) << j.dump() << "\n";
  }
};

template <typename S>
Vector<S> to_scalar(const VectorD& v) {
  return v.template cast<S>();
}

// Trains one task in place. `prev` must be a frozen snapshot taken before
// this task (never mutated here); pass nullptr for task 1 / non-replay runs.
template <typename S>
void train_task(UnifiedModel<S>& model, Adam<S>& opt, const LabeledDataset& task_train,
                int task_index, const UnifiedModel<S>* prev, const TrainConfig& tcfg,
                const ScheduleConfig& scfg, int classes_per_task, TaskLogSink log = {}) {
  const bool replay = strategy_uses_replay(tcfg.strategy) && task_index > 1;
  DGR_CHECK(!replay || prev != nullptr, "train_task: replay requires a snapshot");

  BatchCursor cursor(task_train, tcfg.batch_size,
                     derive_seed(tcfg.seed, "batches", std::uint64_t(task_index)));
  Rng noise_rng(derive_seed(tcfg.seed, "noise", std::uint64_t(task_index)));
  Rng replay_rng(derive_seed(tcfg.seed, "replay", std::uint64_t(task_index)));

  const double cur_w = tcfg.weighted_branches ? 1.0 / double(task_index) : 1.0;
  const double rep_w = tcfg.weighted_branches ? 1.0 - 1.0 / double(task_index) : 1.0;

  std::vector<std::uint8_t> seen_mask(size_t(model.config().num_classes), 0);
  for (int c : model.seen_classes()) seen_mask[size_t(c)] = 1;
  std::vector<std::uint8_t> prev_mask;
  if (replay) {
    prev_mask.assign(size_t(model.config().num_classes), 0);
    for (int c : prev->seen_classes()) prev_mask[size_t(c)] = 1;
  }

  MatrixF xb;
  VectorI yb;
  auto params = model.params();
  for (int iter = 1; iter <= tcfg.iterations_per_task; ++iter) {
    cursor.next(xb, yb);
    zero_grads(params);

    BranchData<S> cur;
    cur.x = xb.template cast<S>();
    cur.labels = yb;
    if (model.config().conditional_prior) cur.prior_ids = yb;
    if (model.config().gating) cur.gate_ids = yb;
    SampleWeights cw = current_weights(int(yb.size()), scfg);
    cur.alpha = to_scalar<S>(cw.alpha);
    cur.beta = to_scalar<S>(cw.beta);
    cur.class_mask = seen_mask;
    cur.weight = replay ? cur_w : 1.0;

    LossBreakdown bd;
    bd.current = branch_pass(model, cur, 0.0, true, noise_rng);

    if (replay) {
      ReplayBatch<S> rb =
          generate_replay(*prev, tcfg.replay_batch_size, task_index, classes_per_task,
                          scfg, tcfg.distill_temperature, replay_rng);
      BranchData<S> rep;
      rep.x = std::move(rb.x_hat);
      rep.labels = rb.y_hard;
      rep.targets_soft = std::move(rb.y_soft);
      if (model.config().conditional_prior) rep.prior_ids = rb.y_hard;
      if (model.config().gating) rep.gate_ids = rb.y_hard;
      rep.alpha = to_scalar<S>(rb.weights.alpha);
      rep.beta = to_scalar<S>(rb.weights.beta);
      rep.class_mask = prev_mask;
      rep.weight = rep_w;
      bd.replay = branch_pass(model, rep, tcfg.distill_temperature, true, noise_rng);
      bd.has_replay = true;
    }

    if (!std::isfinite(bd.total()))
      throw Error("training diverged (non-finite loss) at task " +
                  std::to_string(task_index) + ", iteration " + std::to_string(iter));

    opt.step();

    if (iter % tcfg.log_every == 0 || iter == tcfg.iterations_per_task) {
      nlohmann::json j{{"task", task_index},
                       {"iter", iter},
                       {"total", bd.total()},
                       {"current",
                        {{"recon", bd.current.recon},
                         {"kl", bd.current.kl},
                         {"task", bd.current.task},
                         {"weight", bd.current.weight}}}};
      if (bd.has_replay)
        j["replay"] = {{"recon", bd.replay.recon},
                       {"kl", bd.replay.kl},
                       {"task", bd.replay.task},
                       {"weight", bd.replay.weight}};
      log.row(j);
    }
  }
}

// Forward-only loss assembly (shares branch_pass with training).
template <typename S>
LossBreakdown assemble_loss(UnifiedModel<S>& model, const Matrix<S>& x, const VectorI& y,
                            const ReplayBatch<S>* replay, int tasks_seen,
                            const TrainConfig& tcfg, const ScheduleConfig& scfg,
                            Rng& noise_rng) {
  std::vector<std::uint8_t> seen_mask(size_t(model.config().num_classes), 0);
  for (int c : model.seen_classes()) seen_mask[size_t(c)] = 1;

  BranchData<S> cur;
  cur.x = x;
  cur.labels = y;
  if (model.config().conditional_prior) cur.prior_ids = y;
  if (model.config().gating) cur.gate_ids = y;
  SampleWeights cw = current_weights(int(y.size()), scfg);
  cur.alpha = to_scalar<S>(cw.alpha);
  cur.beta = to_scalar<S>(cw.beta);
  cur.class_mask = seen_mask;
  cur.weight = replay ? (tcfg.weighted_branches ? 1.0 / double(tasks_seen) : 1.0) : 1.0;

  LossBreakdown bd;
  bd.current = branch_pass(model, cur, 0.0, false, noise_rng);
  if (replay) {
    BranchData<S> rep;
    rep.x = replay->x_hat;
    rep.labels = replay->y_hard;
    rep.targets_soft = replay->y_soft;
    if (model.config().conditional_prior) rep.prior_ids = replay->y_hard;
    if (model.config().gating) rep.gate_ids = replay->y_hard;
    rep.alpha = to_scalar<S>(replay->weights.alpha);
    rep.beta = to_scalar<S>(replay->weights.beta);
    rep.class_mask.assign(size_t(model.config().num_classes), 0);
    for (Index c = 0; c < replay->y_soft.rows(); ++c)
      if (replay->y_soft.row(c).sum() > S(0)) rep.class_mask[size_t(c)] = 1;
    rep.weight = tcfg.weighted_branches ? 1.0 - 1.0 / double(tasks_seen) : 1.0;
    bd.replay = branch_pass(model, rep, tcfg.distill_temperature, false, noise_rng);
    bd.has_replay = true;
  }
  return bd;
}

// --- full sequence -----------------------------------------------------------

struct RunPaths {
  std::string train_log;      // JSONL; empty = no log file
  std::string replay_grid;    // image file; empty = skip
  std::string checkpoint;     // final model; empty = skip
};

template <typename S>
struct RunOutcome {
  AccuracyMatrix acc;
  double wall_seconds = 0;
  UnifiedModel<S> model;
};

template <typename S>
RunOutcome<S> run_sequence(TaskStream& stream, const ModelConfig& mcfg,
                           const TrainConfig& tcfg, const ScheduleConfig& scfg,
                           const RunPaths& paths = {}) {
  tcfg.validate();
  scfg.validate();
  const auto t0 = std::chrono::steady_clock::now();

  std::ofstream log_file;
  TaskLogSink log;
  if (!paths.train_log.empty()) {
    log_file.open(paths.train_log, std::ios::trunc);
    if (!log_file) throw Error("cannot open training log: " + paths.train_log);
    log.stream = &log_file;
  }

  UnifiedModel<S> model(mcfg, derive_seed(tcfg.seed, "model"),
                        derive_seed(tcfg.seed, "gating"));
  Adam<S> opt(model.params(), tcfg.lr, tcfg.adam_beta1, tcfg.adam_beta2, tcfg.adam_eps);

  RunOutcome<S> out;
  out.acc = AccuracyMatrix(stream.n_tasks());

  std::optional<UnifiedModel<S>> snapshot;
  for (int t = 0; t < stream.n_tasks(); ++t) {
    const int task_index = t + 1;
    if (strategy_uses_replay(tcfg.strategy) && t > 0) snapshot.emplace(model);
    model.mark_seen(stream.task_classes(t));
    const LabeledDataset& train = stream.train_data(t);
    train_task(model, opt, train, task_index, snapshot ? &*snapshot : nullptr, tcfg,
               scfg, stream.classes_per_task(), log);
    evaluate(model, stream, t, out.acc);
    nlohmann::json j{{"task", task_index}, {"event", "eval"}};
    std::vector<double> row_acc;
    for (int k = 0; k <= t; ++k) row_acc.push_back(out.acc.entries(t, k));
    j["acc"] = row_acc;
    j["avg"] = out.acc.avg_after[t];
    log.row(j);
    snapshot.reset();
  }

  if (!paths.replay_grid.empty())
    dump_replay_grid(model, 8, paths.replay_grid, derive_seed(tcfg.seed, "dump"));
  if (!paths.checkpoint.empty()) model.save(paths.checkpoint);

  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.model = std::move(model);
  return out;
}

}  // namespace dgr
