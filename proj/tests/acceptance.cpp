// Full-protocol acceptance checks, one verdict line per criterion.
//
// The expensive part trains every strategy on the 5-task split-MNIST stream
// (3 seeds each) at benchmark defaults. Finished runs are cached as normal
// result directories under $DGR_ACCEPT_DIR, so an interrupted invocation
// resumes where it stopped and a re-run only re-verifies. Criteria 8 and 9
// are the multi-hour extended benchmarks; they run only when
// DGR_RUN_EXTENDED is set.

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "dgr/eval.hpp"
#include "dgr/harness.hpp"
#include "dgr/rng.hpp"
#include "dgr/trainer.hpp"

using namespace dgr;
namespace fs = std::filesystem;

// ---- pinned tolerances ------------------------------------------------------
namespace tol {
// criterion 1: mean final accuracy over 3 seeds, as fractions
constexpr double kNoneCenter = 0.1998, kNoneAbs = 0.02;
constexpr double kGrFloor = 0.80;
constexpr double kBirFloor = 0.89;
constexpr double kDynGap = 0.015;  // bir_dyn must beat bir by this much
constexpr double kJointFloor = 0.97;
// criterion 2: one-sided Welch t threshold, 95% at ~4 dof (3 seeds per side)
constexpr double kWelchT = 2.132;
// criterion 3: per-task iterations compared bit-for-bit
constexpr int kLockstepIters = 100;
// criterion 5
constexpr double kKlRel = 0.01;
constexpr double kGradRel = 1e-3;
constexpr double kFidOracleRel = 0.02;
constexpr double kFidSelf = 1e-6;
// criteria 8 and 9 (extended)
constexpr double kCifarBirFloor = 0.18, kCifarDynGap = 0.015;
constexpr double kCifarAblateSlack = 0.005;  // "not improving" allowance
constexpr double kPermBirFloor = 0.95, kPermDynGap = 0.004;
}  // namespace tol

namespace {

struct Verdict {
  std::string status = "FAIL";  // PASS / FAIL / SKIP
  std::string detail;
};
std::map<int, Verdict> g_verdicts;

void record(int criterion, bool pass, const std::string& detail) {
  g_verdicts[criterion] = {pass ? "PASS" : "FAIL", detail};
  std::cout << "criterion " << criterion << ": " << (pass ? "PASS" : "FAIL") << "  "
            << detail << "\n"
            << std::flush;
}

void record_skip(int criterion, const std::string& why) {
  g_verdicts[criterion] = {"SKIP", why};
  std::cout << "criterion " << criterion << ": SKIP  " << why << "\n" << std::flush;
}

std::string pct(double frac, int prec = 2) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(prec) << frac * 100.0;
  return os.str();
}

std::string num(double v, int prec = 4) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

struct Stats {
  double mean = 0, sd = 0;
  int n = 0;
};

Stats stats(const std::vector<double>& v) {
  Stats s;
  s.n = int(v.size());
  if (v.empty()) return s;
  for (double x : v) s.mean += x;
  s.mean /= double(v.size());
  if (v.size() > 1) {
    double acc = 0;
    for (double x : v) acc += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(acc / double(v.size() - 1));
  }
  return s;
}

// t statistic for mean(hi) > mean(lo); +inf when both sides are exactly equal
// variance zero but ordered.
double welch_t(const Stats& lo, const Stats& hi) {
  const double se2 = lo.sd * lo.sd / lo.n + hi.sd * hi.sd / hi.n;
  if (se2 <= 0)
    return hi.mean > lo.mean ? std::numeric_limits<double>::infinity()
                             : -std::numeric_limits<double>::infinity();
  return (hi.mean - lo.mean) / std::sqrt(se2);
}

std::vector<double> finals_of(const std::vector<RunResult>& rs) {
  std::vector<double> v;
  for (const RunResult& r : rs) v.push_back(r.average_final);
  return v;
}

// Train-or-load one strategy's seeds at benchmark defaults.
std::vector<RunResult> ensure_runs(Benchmark bench, Strategy strat, const fs::path& root,
                                   const std::string& data_dir) {
  ExperimentConfig cfg = make_benchmark_config(bench, strat);
  cfg.data_dir = data_dir;
  cfg.output_dir = root.string();
  std::vector<RunResult> rs;
  for (std::uint64_t seed : cfg.seeds) {
    const fs::path dir = run_directory(cfg, seed);
    if (fs::exists(dir / "result.json")) {
      RunResult r = load_run_result(dir / "result.json");
      std::cout << "  " << to_string(strat) << " seed " << seed << ": cached, final "
                << pct(r.average_final) << "%\n"
                << std::flush;
      rs.push_back(std::move(r));
      continue;
    }
    std::cout << "  " << to_string(strat) << " seed " << seed << ": training..."
              << std::flush;
    RunResult r = execute_run(cfg, seed, dir);
    std::cout << " final " << pct(r.average_final) << "% (" << int(r.wall_seconds)
              << "s)\n"
              << std::flush;
    rs.push_back(std::move(r));
  }
  return rs;
}

// Same caching for one ablation grid cell.
std::vector<RunResult> ensure_cell(const ExperimentConfig& base, const AblationRun& cell,
                                   const fs::path& root) {
  ExperimentConfig cfg = base;
  cfg.strategy = cell.strategy;
  cfg.train.strategy = cell.strategy;
  cfg.schedule = cell.schedule;
  std::vector<RunResult> rs;
  for (std::uint64_t seed : cfg.seeds) {
    const fs::path dir =
        root / to_string(cfg.benchmark) / "ablate" / cell.name / ("seed" + std::to_string(seed));
    if (fs::exists(dir / "result.json")) {
      rs.push_back(load_run_result(dir / "result.json"));
      continue;
    }
    std::cout << "  ablate " << cell.name << " seed " << seed << ": training..."
              << std::flush;
    RunResult r = execute_run(cfg, seed, dir, cell.name);
    std::cout << " final " << pct(r.average_final) << "%\n" << std::flush;
    rs.push_back(std::move(r));
  }
  return rs;
}

// ---- criterion 4: objective scheduler properties ----------------------------

bool check_scheduler(std::string& detail) {
  ScheduleConfig sc;  // defaults: k_alpha=1, k_beta=10, floors 0.2, amplitude 1
  if (alpha_at(0, sc) != 1.0 || beta_at(0, sc) != 1.0) {
    detail = "weight at inferred time 0 is not exactly 1";
    return false;
  }
  // strict decay above the floor, never below it, floor reached exactly
  for (int t = 1; t <= 1000; ++t) {
    const double prev_a = alpha_at(t - 1, sc), cur_a = alpha_at(t, sc);
    const double prev_b = beta_at(t - 1, sc), cur_b = beta_at(t, sc);
    if (cur_a > prev_a || cur_b > prev_b) {
      detail = "decay is not monotone at t=" + std::to_string(t);
      return false;
    }
    if (cur_a < sc.floor_a || cur_b < sc.floor_b) {
      detail = "decay fell below its floor at t=" + std::to_string(t);
      return false;
    }
    if (cur_a < prev_a && cur_a == sc.floor_a && prev_a != sc.floor_a) continue;
    if (prev_a > sc.floor_a && cur_a >= prev_a) {
      detail = "decay stalled above the floor at t=" + std::to_string(t);
      return false;
    }
  }
  if (alpha_at(800, sc) != sc.floor_a || beta_at(800, sc) != sc.floor_b) {
    detail = "floor not attained exactly in the limit";
    return false;
  }
  // label -> elapsed-tasks inference, swept over task layouts
  for (int cpt : {1, 2, 5, 10}) {
    for (int T = 1; T <= 10; ++T) {
      for (int y = (T - 1) * cpt; y < T * cpt; ++y)
        if (infer_time(y, T, cpt) != 0) {
          detail = "current-task label did not map to time 0 (cpt=" +
                   std::to_string(cpt) + ", T=" + std::to_string(T) + ")";
          return false;
        }
      for (int y = 0; y < cpt; ++y)
        if (infer_time(y, T, cpt) != T - 1) {
          detail = "first-task label did not map to time T-1 (cpt=" +
                   std::to_string(cpt) + ", T=" + std::to_string(T) + ")";
          return false;
        }
    }
  }
  detail =
      "unit start exact, monotone decay, floors attained exactly, "
      "time inference correct for cpt in {1,2,5,10} x T in 1..10";
  return true;
}

// ---- criterion 5: numerical suite -------------------------------------------

ModelConfig tiny_config() {
  ModelConfig cfg;
  cfg.input = {1, 8, 8};
  cfg.num_classes = 4;
  cfg.d_z = 3;
  cfg.channels = {2, 3};
  cfg.keep_fraction = 0.5;
  return cfg;
}

double kl_mc_rel_err(double& mc_out, double& closed_out) {
  const Index d = 4;
  const double mu_v = 1.5, lv_v = 0.3;
  // closed form per dimension: 0.5 * (-lv + e^lv + mu^2 - 1)
  closed_out = 0.5 * double(d) * (-lv_v + std::exp(lv_v) + mu_v * mu_v - 1.0);

  Rng rng(derive_seed(11, "accept-kl"));
  const int n = 100000;
  const double sd = std::exp(0.5 * lv_v);
  double sum = 0;
  for (int i = 0; i < n; ++i) {
    double term = 0;
    for (Index k = 0; k < d; ++k) {
      const double eps = rng.normal();
      const double z = mu_v + sd * eps;
      // log q(z) - log p(z), constants cancel
      term += 0.5 * (z * z - eps * eps - lv_v);
    }
    sum += term;
  }
  mc_out = sum / double(n);
  return std::abs(mc_out - closed_out) / closed_out;
}

double reparam_grad_rel_err() {
  const Index d = 3, B = 4;
  Rng rng(derive_seed(21, "accept-reparam"));
  MatrixD mu(d, B), lv(d, B), noise(d, B), w(d, B);
  rng.fill_normal(mu);
  rng.fill_normal(lv);
  lv *= 0.3;
  rng.fill_normal(noise);
  rng.fill_normal(w);

  MatrixD z;
  reparameterize(mu, lv, noise, z);
  // L = sum(w .* z): dL/dmu = w, dL/dlv = w .* (z - mu) / 2
  MatrixD dmu = w;
  MatrixD dlv = (w.array() * (z - mu).array() * 0.5).matrix();

  const double h = 1e-5;
  double worst = 0;
  auto loss = [&](const MatrixD& m, const MatrixD& l) {
    MatrixD zz;
    reparameterize(m, l, noise, zz);
    return (w.array() * zz.array()).sum();
  };
  for (Index i = 0; i < d * B; ++i) {
    MatrixD m = mu, l = lv;
    m(i) = mu(i) + h;
    const double up_m = loss(m, lv);
    m(i) = mu(i) - h;
    const double dn_m = loss(m, lv);
    const double fd_m = (up_m - dn_m) / (2 * h);
    worst = std::max(worst, std::abs(fd_m - dmu(i)) /
                                std::max(1e-6, std::abs(fd_m) + std::abs(dmu(i))));
    l(i) = lv(i) + h;
    const double up_l = loss(mu, l);
    l(i) = lv(i) - h;
    const double dn_l = loss(mu, l);
    const double fd_l = (up_l - dn_l) / (2 * h);
    worst = std::max(worst, std::abs(fd_l - dlv(i)) /
                                std::max(1e-6, std::abs(fd_l) + std::abs(dlv(i))));
  }
  return worst;
}

double full_loss_grad_rel_err(bool soft_targets) {
  UnifiedModel<double> model(tiny_config(), derive_seed(31, "accept-grad"),
                             derive_seed(32, "accept-grad"));
  model.mark_seen({0, 1, 2, 3});
  // Zero-initialized biases plus gated-away receptive fields leave many
  // pre-activations exactly on the ReLU kink, where central differences see
  // half a subgradient; nudge the biases so the check runs at a generic point.
  Rng jitter(derive_seed(35, "accept-grad-jitter"));
  for (auto& [name, p] : model.named_params())
    if (name.ends_with(".b")) {
      MatrixD j(p->v.rows(), p->v.cols());
      jitter.fill_normal(j, 0.05);
      p->v += j;
    }

  const Index B = 3;
  Rng data_rng(derive_seed(33, "accept-grad-data"));
  BranchData<double> br;
  br.x.resize(64, B);
  for (Index i = 0; i < br.x.size(); ++i) br.x(i) = 0.1 + 0.8 * data_rng.uniform();
  br.labels.resize(B);
  br.labels << 0, 2, 1;
  br.prior_ids = br.labels;
  br.gate_ids = br.labels;
  br.alpha.resize(B);
  br.alpha << 1.0, 0.7, 1.3;
  br.beta.resize(B);
  br.beta << 0.5, 1.0, 0.8;
  br.class_mask.assign(4, 1);
  br.weight = 0.75;
  const double T = soft_targets ? 2.0 : 0.0;
  if (soft_targets) {
    MatrixD raw(4, B);
    data_rng.fill_normal(raw);
    MatrixD p, logp;
    masked_softmax(raw, br.class_mask, 2.0, p, logp);
    br.targets_soft = p;
  }

  const std::uint64_t noise_seed = derive_seed(34, "accept-grad-noise");
  auto params = model.params();
  zero_grads(params);
  {
    Rng noise(noise_seed);
    branch_pass(model, br, T, true, noise);
  }

  auto eval = [&]() {
    Rng noise(noise_seed);
    return br.weight * branch_pass(model, br, T, false, noise).sum();
  };

  const double h = 1e-5;
  double worst = 0;
  for (auto& [name, p] : model.named_params()) {
    const Index stride = std::max<Index>(1, p->v.size() / 8);
    for (Index i = 0; i < p->v.size(); i += stride) {
      const double keep = p->v(i);
      p->v(i) = keep + h;
      const double up = eval();
      p->v(i) = keep - h;
      const double dn = eval();
      p->v(i) = keep;
      const double fd = (up - dn) / (2 * h);
      worst = std::max(worst, std::abs(fd - p->g(i)) /
                                  std::max(1e-6, std::abs(fd) + std::abs(p->g(i))));
    }
  }
  return worst;
}

double fid_oracle_rel_err(double& est_out, double& closed_out) {
  const Index d = 4, n = 40000;
  const VectorD sa = (VectorD(4) << 1.0, 2.0, 0.5, 1.5).finished();
  const VectorD sb = (VectorD(4) << 1.5, 1.0, 1.0, 2.0).finished();
  const VectorD mb = (VectorD(4) << 3.0, -2.0, 1.0, 0.0).finished();

  // diagonal-Gaussian Fréchet distance in closed form
  closed_out = mb.squaredNorm();
  for (Index i = 0; i < d; ++i)
    closed_out += sa[i] + sb[i] - 2.0 * std::sqrt(sa[i] * sb[i]);

  Rng rng(derive_seed(41, "accept-fid"));
  MatrixD fa(d, n), fb(d, n);
  rng.fill_normal(fa);
  rng.fill_normal(fb);
  for (Index i = 0; i < d; ++i) {
    fa.row(i) *= std::sqrt(sa[i]);
    fb.row(i) *= std::sqrt(sb[i]);
    fb.row(i).array() += mb[i];
  }
  est_out = frechet_distance(fa, fb);
  return std::abs(est_out - closed_out) / closed_out;
}

// ---- criterion 3: baseline equivalence --------------------------------------

// Collects the per-iteration log lines of a 2-task run (100 iterations each).
std::vector<std::string> lockstep_log(Strategy strat, const ScheduleConfig& scfg,
                                      const std::string& data_dir, const fs::path& log_path) {
  ExperimentConfig cfg = make_benchmark_config(Benchmark::mnist5, strat);
  TrainConfig tcfg = cfg.train;
  tcfg.strategy = strat;
  tcfg.iterations_per_task = tol::kLockstepIters;
  tcfg.log_every = 1;
  tcfg.seed = 1;

  TaskStream stream = TaskStream::make_class_incremental(
      load_mnist(data_dir), 2, 2, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
  RunPaths paths;
  paths.train_log = log_path.string();
  run_sequence<float>(stream, cfg.model, tcfg, scfg, paths);

  std::vector<std::string> rows;
  std::ifstream in(log_path);
  std::string line;
  while (std::getline(in, line))
    if (line.find("\"event\"") == std::string::npos) rows.push_back(line);
  return rows;
}

}  // namespace

int main() {
  const char* data_env = std::getenv("DGR_DATA_DIR");
  const std::string data_dir = data_env ? data_env : "";
  const char* accept_env = std::getenv("DGR_ACCEPT_DIR");
  const fs::path out_root = accept_env ? fs::path(accept_env) : fs::path("acceptance_out");
  const char* ext_env = std::getenv("DGR_RUN_EXTENDED");
  const bool extended = ext_env && *ext_env && std::string(ext_env) != "0";
  fs::create_directories(out_root);

  std::cout << "acceptance runs cached under " << out_root.string() << "\n" << std::flush;

  // --- criterion 4: scheduler properties (cheap, run first) ---
  try {
    std::string detail;
    const bool ok = check_scheduler(detail);
    record(4, ok, detail);
  } catch (const std::exception& e) {
    record(4, false, e.what());
  }

  // --- criterion 5: numerical suite ---
  try {
    double mc = 0, closed = 0, est = 0, oracle = 0;
    const double kl_rel = kl_mc_rel_err(mc, closed);
    const double reparam_rel = reparam_grad_rel_err();
    const double grad_rel =
        std::max(full_loss_grad_rel_err(false), full_loss_grad_rel_err(true));
    const double fid_rel = fid_oracle_rel_err(est, oracle);

    MatrixD fa(3, 12);
    Rng self_rng(derive_seed(51, "accept-fid-self"));
    self_rng.fill_normal(fa);
    const double self = frechet_distance(fa, fa);

    const bool ok = kl_rel < tol::kKlRel && reparam_rel < tol::kGradRel &&
                    grad_rel < tol::kGradRel && fid_rel < tol::kFidOracleRel &&
                    self < tol::kFidSelf;
    record(5, ok,
           "kl closed=" + num(closed, 10) + " mc=" + num(mc, 10) + " rel=" + num(kl_rel, 3) +
               "; grad rel reparam=" + num(reparam_rel, 3) + " full=" + num(grad_rel, 3) +
               "; fid oracle=" + num(oracle, 6) + " est=" + num(est, 6) +
               " rel=" + num(fid_rel, 3) + "; fid(A,A)=" + num(self, 3));
  } catch (const std::exception& e) {
    record(5, false, e.what());
  }

  // --- criterion 3: bir vs bir_dyn under the baseline schedule ---
  try {
    if (data_dir.empty()) throw Error("dataset directory not set (set DGR_DATA_DIR)");
    ScheduleConfig baseline;  // mode defaults to the fixed unit schedule
    std::cout << "lockstep comparison: 2 tasks x " << tol::kLockstepIters
              << " iterations per strategy\n"
              << std::flush;
    const auto rows_bir =
        lockstep_log(Strategy::bir, baseline, data_dir, out_root / "lockstep_bir.jsonl");
    const auto rows_dyn = lockstep_log(Strategy::bir_dyn, baseline, data_dir,
                                       out_root / "lockstep_bir_dyn.jsonl");
    bool ok = rows_bir.size() == rows_dyn.size() &&
              int(rows_bir.size()) == 2 * tol::kLockstepIters;
    size_t diverged_at = 0;
    if (ok)
      for (size_t i = 0; i < rows_bir.size(); ++i)
        if (rows_bir[i] != rows_dyn[i]) {
          ok = false;
          diverged_at = i + 1;
          break;
        }
    record(3, ok,
           ok ? num(double(rows_bir.size()), 4) +
                    " logged iterations bit-identical across strategies (2 tasks)"
              : (diverged_at ? "loss rows differ at logged row " + std::to_string(diverged_at)
                             : "log row counts differ (" + std::to_string(rows_bir.size()) +
                                   " vs " + std::to_string(rows_dyn.size()) + ")"));
  } catch (const std::exception& e) {
    record(3, false, e.what());
  }

  // --- criteria 1 and 2: strategy table on split MNIST ---
  std::map<Strategy, std::vector<RunResult>> table;
  try {
    if (data_dir.empty()) throw Error("dataset directory not set (set DGR_DATA_DIR)");
    for (Strategy s : {Strategy::none, Strategy::gr, Strategy::bir, Strategy::bir_dyn,
                       Strategy::joint}) {
      std::cout << "strategy " << to_string(s) << ":\n" << std::flush;
      table[s] = ensure_runs(Benchmark::mnist5, s, out_root, data_dir);
    }

    const Stats none = stats(finals_of(table[Strategy::none]));
    const Stats gr = stats(finals_of(table[Strategy::gr]));
    const Stats bir = stats(finals_of(table[Strategy::bir]));
    const Stats dyn = stats(finals_of(table[Strategy::bir_dyn]));
    const Stats joint = stats(finals_of(table[Strategy::joint]));

    const bool ok1 = std::abs(none.mean - tol::kNoneCenter) <= tol::kNoneAbs &&
                     gr.mean >= tol::kGrFloor && bir.mean >= tol::kBirFloor &&
                     dyn.mean >= bir.mean + tol::kDynGap && joint.mean >= tol::kJointFloor;
    record(1, ok1,
           "final means over 3 seeds: none=" + pct(none.mean) + "% gr=" + pct(gr.mean) +
               "% bir=" + pct(bir.mean) + "% bir_dyn=" + pct(dyn.mean) +
               "% joint=" + pct(joint.mean) + "% (need none " +
               pct(tol::kNoneCenter - tol::kNoneAbs) + ".." + pct(tol::kNoneCenter + tol::kNoneAbs) +
               ", gr>=" + pct(tol::kGrFloor) + ", bir>=" + pct(tol::kBirFloor) +
               ", bir_dyn>=bir+" + pct(tol::kDynGap) + ", joint>=" + pct(tol::kJointFloor) + ")");

    const double t1 = welch_t(none, gr), t2 = welch_t(gr, bir), t3 = welch_t(bir, dyn),
                 t4 = welch_t(dyn, joint);
    const double tmin = std::min(std::min(t1, t2), std::min(t3, t4));
    record(2, tmin > tol::kWelchT,
           "ordering none < gr < bir < bir_dyn < joint; welch t = " + num(t1, 3) + ", " +
               num(t2, 3) + ", " + num(t3, 3) + ", " + num(t4, 3) + " (need each > " +
               num(tol::kWelchT, 4) + ")");
  } catch (const std::exception& e) {
    record(1, false, e.what());
    record(2, false, std::string("strategy runs unavailable: ") + e.what());
  }

  // --- criterion 6: replay quality via the modified FID ---
  try {
    if (table.empty()) throw Error("strategy runs unavailable");
    auto fid_of = [&](Strategy s, std::uint64_t seed) {
      ExperimentConfig cfg = make_benchmark_config(Benchmark::mnist5, s);
      cfg.output_dir = out_root.string();
      const fs::path dir = run_directory(cfg, seed);
      RunResult r = load_run_result(dir / "result.json");
      if (std::isnan(r.fid)) {
        cmd_fid(dir, FidOptions{}, std::cout);
        r = load_run_result(dir / "result.json");
      }
      return r.fid;
    };
    std::vector<double> fid_bir, fid_dyn;
    for (std::uint64_t seed : {std::uint64_t(1), std::uint64_t(2), std::uint64_t(3)}) {
      fid_bir.push_back(fid_of(Strategy::bir, seed));
      fid_dyn.push_back(fid_of(Strategy::bir_dyn, seed));
    }
    const Stats fb = stats(fid_bir), fd = stats(fid_dyn);
    record(6, fd.mean < fb.mean,
           "replay fid means (shared extractor, 3 seeds): bir_dyn=" + num(fd.mean, 6) +
               " vs bir=" + num(fb.mean, 6) + " (need bir_dyn < bir)");
  } catch (const std::exception& e) {
    record(6, false, e.what());
  }

  // --- criterion 7: first-task latent balance ---
  try {
    if (table.empty()) throw Error("strategy runs unavailable");
    ExperimentConfig cfg = make_benchmark_config(Benchmark::mnist5, Strategy::bir);
    cfg.data_dir = data_dir;
    cfg.output_dir = out_root.string();
    TaskStream stream = build_stream(cfg);
    const LabeledDataset first = stream.test_data(0);
    const std::vector<int> first_classes = stream.task_classes(0);

    auto class_var = [&](Strategy s, std::uint64_t seed) {
      ExperimentConfig c = make_benchmark_config(Benchmark::mnist5, s);
      c.output_dir = out_root.string();
      const fs::path dir = run_directory(c, seed);
      UnifiedModel<float> model = UnifiedModel<float>::load((dir / "model.ckpt").string());
      return mean_class_variance(latent_projection(model, first), first_classes);
    };
    double v_bir = 0, v_dyn = 0;
    for (std::uint64_t seed : {std::uint64_t(1), std::uint64_t(2), std::uint64_t(3)}) {
      v_bir += class_var(Strategy::bir, seed);
      v_dyn += class_var(Strategy::bir_dyn, seed);
    }
    const double ratio = v_dyn / v_bir;
    record(7, ratio > 1.0,
           "first-task latent variance ratio bir_dyn/bir = " + num(ratio, 4) +
               " over 3 seeds (need > 1)");
  } catch (const std::exception& e) {
    record(7, false, e.what());
  }

  // --- criterion 8: CIFAR-100 extended benchmark + ablation ordering ---
  if (!extended) {
    record_skip(8, "extended benchmark (multi-hour); set DGR_RUN_EXTENDED=1 to run");
  } else {
    try {
      if (data_dir.empty()) throw Error("dataset directory not set (set DGR_DATA_DIR)");
      const auto bir = ensure_runs(Benchmark::cifar100_10, Strategy::bir, out_root, data_dir);
      const auto dyn =
          ensure_runs(Benchmark::cifar100_10, Strategy::bir_dyn, out_root, data_dir);
      const Stats sb = stats(finals_of(bir)), sd = stats(finals_of(dyn));

      ExperimentConfig base = make_benchmark_config(Benchmark::cifar100_10, Strategy::bir_dyn);
      base.data_dir = data_dir;
      base.output_dir = out_root.string();
      base.ablate.groups = {1, 8};
      double base_mean = 0, best_mean = 0, worst_g1 = 0;
      for (const AblationRun& cell : ablation_plan(base, {})) {
        const Stats m = stats(finals_of(ensure_cell(base, cell, out_root)));
        if (cell.group == 0) base_mean = m.mean;
        if (cell.best) best_mean = m.mean;
        if (cell.group == 1) worst_g1 = std::max(worst_g1, m.mean);
      }
      const bool ok = sb.mean >= tol::kCifarBirFloor &&
                      sd.mean >= sb.mean + tol::kCifarDynGap && best_mean > base_mean &&
                      worst_g1 <= base_mean + tol::kCifarAblateSlack;
      record(8, ok,
             "cifar means: bir=" + pct(sb.mean) + "% bir_dyn=" + pct(sd.mean) +
                 "%; ablation: baseline=" + pct(base_mean) + "% best-decay=" + pct(best_mean) +
                 "% best-const-alpha=" + pct(worst_g1) + "%");
    } catch (const std::exception& e) {
      record(8, false, e.what());
    }
  }

  // --- criterion 9: permuted-MNIST extended benchmark ---
  if (!extended) {
    record_skip(9, "extended benchmark (multi-hour); set DGR_RUN_EXTENDED=1 to run");
  } else {
    try {
      if (data_dir.empty()) throw Error("dataset directory not set (set DGR_DATA_DIR)");
      const auto bir = ensure_runs(Benchmark::permmnist10, Strategy::bir, out_root, data_dir);
      const auto dyn =
          ensure_runs(Benchmark::permmnist10, Strategy::bir_dyn, out_root, data_dir);
      const Stats sb = stats(finals_of(bir)), sd = stats(finals_of(dyn));
      const bool ok =
          sb.mean >= tol::kPermBirFloor && sd.mean >= sb.mean + tol::kPermDynGap;
      record(9, ok,
             "permuted means: bir=" + pct(sb.mean) + "% bir_dyn=" + pct(sd.mean) +
                 "% (need bir>=" + pct(tol::kPermBirFloor) + ", bir_dyn>=bir+" +
                 pct(tol::kPermDynGap) + ")");
    } catch (const std::exception& e) {
      record(9, false, e.what());
    }
  }

  // --- summary ---
  int fails = 0;
  std::cout << "\n=== acceptance summary ===\n";
  for (const auto& [criterion, v] : g_verdicts) {
    std::cout << "criterion " << criterion << ": " << v.status << "  " << v.detail << "\n";
    if (v.status == "FAIL") ++fails;
  }
  std::cout << (fails ? "acceptance FAILED (" + std::to_string(fails) + " criteria)"
                      : "acceptance passed")
            << "\n";
  return fails;
}
