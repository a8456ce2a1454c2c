#include "dgr/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "dgr/eval.hpp"
#include "dgr/trainer.hpp"

namespace dgr {

namespace {

namespace fs = std::filesystem;

// Fixed protocol seeds. The pixel permutations are part of the benchmark
// definition, and the FID extractor/sampling streams must be shared by every
// run they are used to compare.
constexpr std::uint64_t kPermutationSeed = 999;
constexpr std::uint64_t kExtractorSeed = 777;
constexpr std::uint64_t kFidSeed = 4242;

std::string percent(double fraction, int prec = 2) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(prec) << fraction * 100.0;
  return os.str();
}

struct MeanStd {
  double mean = 0.0, std = 0.0;
  int n = 0;
};

MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd m;
  m.n = int(xs.size());
  if (xs.empty()) return m;
  m.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / double(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    m.std = std::sqrt(ss / double(xs.size() - 1));
  }
  return m;
}

}  // namespace

ExperimentConfig make_benchmark_config(Benchmark b, Strategy s) {
  return experiment_config_from_map(
      {{"benchmark", to_string(b)}, {"strategy", to_string(s)}});
}

TaskStream build_stream(const ExperimentConfig& cfg) {
  if (cfg.data_dir.empty())
    throw ConfigError("dataset directory not set (set data_dir or $DGR_DATA_DIR)",
                      "data_dir");
  switch (cfg.benchmark) {
    case Benchmark::mnist5: {
      DatasetPair mnist = load_mnist(cfg.data_dir);
      std::vector<int> order(10);
      std::iota(order.begin(), order.end(), 0);
      return TaskStream::make_class_incremental(std::move(mnist),
                                                cfg.stream_classes_per_task(),
                                                cfg.stream_tasks(), order);
    }
    case Benchmark::permmnist10:
      return TaskStream::make_permuted(load_mnist(cfg.data_dir), cfg.stream_tasks(),
                                       kPermutationSeed);
    case Benchmark::cifar100_10: {
      DatasetPair cifar = load_cifar100(cfg.data_dir);
      std::vector<int> order(100);
      std::iota(order.begin(), order.end(), 0);
      return TaskStream::make_class_incremental(std::move(cifar),
                                                cfg.stream_classes_per_task(),
                                                cfg.stream_tasks(), order);
    }
  }
  throw Error("unreachable benchmark");
}

std::filesystem::path run_directory(const ExperimentConfig& cfg, std::uint64_t seed) {
  return fs::path(cfg.output_dir) / to_string(cfg.benchmark) / to_string(cfg.strategy) /
         ("seed" + std::to_string(seed));
}

RunResult execute_run(const ExperimentConfig& cfg, std::uint64_t seed,
                      const std::filesystem::path& dir, const std::string& variant) {
  fs::create_directories(dir);
  TaskStream stream = build_stream(cfg);

  TrainConfig tcfg = cfg.train;
  tcfg.seed = seed;

  const bool color = cfg.model.input.channels == 3;
  RunPaths paths;
  paths.train_log = (dir / "train_log.jsonl").string();
  paths.replay_grid = (dir / (color ? "replay_grid.ppm" : "replay_grid.pgm")).string();
  paths.checkpoint = (dir / "model.ckpt").string();
  RunOutcome<float> outcome = run_sequence<float>(stream, cfg.model, tcfg, cfg.schedule, paths);

  RunResult r;
  r.build = build_id();
  r.benchmark = to_string(cfg.benchmark);
  r.strategy = to_string(cfg.strategy);
  r.variant = variant;
  r.seed = seed;
  to_json(r.config_echo, cfg);
  r.acc = outcome.acc;
  r.average_final = outcome.acc.average_final();
  r.wall_seconds = outcome.wall_seconds;
  r.train_log = "train_log.jsonl";
  r.checkpoint = "model.ckpt";
  r.replay_grid = color ? "replay_grid.ppm" : "replay_grid.pgm";
  save_run_result(dir / "result.json", r);
  return r;
}

void cmd_run(const std::filesystem::path& config_path, std::ostream& out) {
  const ExperimentConfig cfg = load_experiment_config(config_path);
  out << "benchmark " << to_string(cfg.benchmark) << ", strategy "
      << to_string(cfg.strategy) << ", " << cfg.seeds.size() << " seed(s)\n";
  std::vector<double> finals;
  for (std::uint64_t seed : cfg.seeds) {
    const fs::path dir = run_directory(cfg, seed);
    RunResult r = execute_run(cfg, seed, dir);
    finals.push_back(r.average_final);
    out << "  seed " << seed << ": final avg accuracy " << percent(r.average_final)
        << "% (" << std::fixed << std::setprecision(1) << r.wall_seconds << "s)  -> "
        << (dir / "result.json").string() << "\n";
  }
  MeanStd m = mean_std(finals);
  out << "mean final accuracy " << percent(m.mean) << "%";
  if (m.n > 1) out << " +/- " << percent(m.std);
  out << " over " << m.n << " seed(s)\n";
}

// --- ablation ---------------------------------------------------------------

namespace {

std::string value_tag(double v) {
  std::ostringstream os;
  os << v;
  std::string s = os.str();
  for (auto& c : s)
    if (c == '.') c = 'p';
  return s;
}

ScheduleMode group_mode(int group) {
  switch (group) {
    case 1: return ScheduleMode::const_alpha;
    case 2: return ScheduleMode::aware_alpha;
    case 3: return ScheduleMode::const_beta;
    case 4: return ScheduleMode::aware_beta;
    case 5: return ScheduleMode::const_both;
    case 6: return ScheduleMode::aware_both;
    case 7: return ScheduleMode::decay_true_label;
    case 8: return ScheduleMode::decay_pred_label;
  }
  throw ConfigError("groups are numbered 1 through 8", "ablate.groups");
}

}  // namespace

std::vector<AblationRun> ablation_plan(const ExperimentConfig& cfg,
                                       const std::vector<int>& groups) {
  std::vector<int> wanted = groups.empty() ? cfg.ablate.groups : groups;
  for (int g : wanted) group_mode(g);  // validate the CLI filter too
  std::set<int> in_config(cfg.ablate.groups.begin(), cfg.ablate.groups.end());

  std::vector<AblationRun> plan;
  if (cfg.ablate.include_baseline) {
    AblationRun base;
    base.group = 0;
    base.name = "baseline";
    base.strategy = Strategy::bir;
    base.schedule = cfg.schedule;
    base.schedule.mode = ScheduleMode::baseline;
    plan.push_back(std::move(base));
  }
  for (int g : wanted) {
    if (!groups.empty() && !in_config.count(g)) continue;
    const ScheduleMode mode = group_mode(g);
    auto add = [&](double value, const ScheduleConfig& sc) {
      AblationRun run;
      run.group = g;
      run.name = "g" + std::to_string(g) + "_" + to_string(mode) + "_" + value_tag(value);
      run.strategy = Strategy::bir_dyn;
      run.schedule = sc;
      run.value = value;
      run.best = g == 8 && sc.amplitude == 1.0 && value == 0.5;
      plan.push_back(std::move(run));
    };
    if (g <= 6) {
      for (double v : cfg.ablate.values) {
        ScheduleConfig sc = cfg.schedule;
        sc.mode = mode;
        if (g == 1 || g == 2 || g == 5 || g == 6) sc.const_alpha = v;
        if (g == 3 || g == 4 || g == 5 || g == 6) sc.const_beta = v;
        add(v, sc);
      }
    } else {
      for (double v : cfg.ablate.floors) {
        ScheduleConfig sc = cfg.schedule;
        sc.mode = mode;
        sc.floor_a = sc.floor_b = v;
        sc.amplitude = 1.0;
        add(v, sc);
      }
      for (double v : cfg.ablate.amplitudes) {
        ScheduleConfig sc = cfg.schedule;
        sc.mode = mode;
        sc.amplitude = v;
        AblationRun run;
        run.group = g;
        run.name = "g" + std::to_string(g) + "_" + to_string(mode) + "_amp" + value_tag(v);
        run.strategy = Strategy::bir_dyn;
        run.schedule = sc;
        run.value = v;
        plan.push_back(std::move(run));
      }
    }
  }
  return plan;
}

void cmd_ablate(const std::filesystem::path& config_path, const AblateOptions& opt,
                std::ostream& out) {
  ExperimentConfig cfg = load_experiment_config(config_path);
  const std::vector<AblationRun> plan = ablation_plan(cfg, opt.groups);

  const bool only_baseline =
      std::all_of(plan.begin(), plan.end(), [](const AblationRun& r) { return r.group == 0; });
  if (plan.empty() || only_baseline) {
    out << "warning: ablation grid is empty, nothing to run\n";
    return;
  }

  const fs::path bench_dir = fs::path(cfg.output_dir) / to_string(cfg.benchmark);
  out << (opt.dry_run ? "planned" : "running") << " " << plan.size()
      << " grid cell(s) x " << cfg.seeds.size() << " seed(s) on "
      << to_string(cfg.benchmark) << "\n";
  for (const AblationRun& run : plan) {
    out << "  [" << run.group << "] " << run.name << "  mode=" << to_string(run.schedule.mode)
        << (run.best ? "  (best setting)" : "") << "\n";
  }
  if (opt.dry_run) return;

  // cell name -> final accuracy per seed
  std::map<std::string, std::vector<double>> finals;
  for (const AblationRun& run : plan) {
    ExperimentConfig rcfg = cfg;
    rcfg.strategy = run.strategy;
    rcfg.train.strategy = run.strategy;
    rcfg.schedule = run.schedule;
    for (std::uint64_t seed : cfg.seeds) {
      const fs::path dir = bench_dir / "ablate" / run.name / ("seed" + std::to_string(seed));
      RunResult r = execute_run(rcfg, seed, dir, run.name);
      finals[run.name].push_back(r.average_final);
      out << "  " << run.name << " seed " << seed << ": " << percent(r.average_final)
          << "%\n";
    }
  }

  const double base_mean =
      finals.count("baseline") ? mean_std(finals["baseline"]).mean
                               : std::numeric_limits<double>::quiet_NaN();
  const fs::path table_path = bench_dir / "ablate_summary.tsv";
  fs::create_directories(bench_dir);
  std::ofstream table(table_path, std::ios::trunc);
  if (!table) throw Error("cannot write " + table_path.string());
  table << "group\tcell\tmode\tvalue\tseeds\tmean_final_pct\tstd_pct\tdelta_vs_baseline_pct\tbest\n";
  out << "\ngroup  cell                              mean%    +/-    delta%  best\n";
  for (const AblationRun& run : plan) {
    MeanStd m = mean_std(finals[run.name]);
    const double delta = (m.mean - base_mean) * 100.0;
    table << run.group << "\t" << run.name << "\t" << to_string(run.schedule.mode) << "\t"
          << run.value << "\t" << m.n << "\t" << percent(m.mean) << "\t" << percent(m.std)
          << "\t";
    if (std::isnan(base_mean) || run.group == 0)
      table << "";
    else
      table << std::fixed << std::setprecision(2) << delta;
    table << "\t" << (run.best ? 1 : 0) << "\n";

    std::ostringstream line;
    line << std::left << std::setw(7) << run.group << std::setw(34) << run.name
         << std::right << std::setw(6) << percent(m.mean) << "  " << std::setw(5)
         << percent(m.std) << "  ";
    if (std::isnan(base_mean) || run.group == 0)
      line << std::setw(6) << "-";
    else
      line << std::setw(6) << std::fixed << std::setprecision(2) << delta;
    line << (run.best ? "  *" : "");
    out << line.str() << "\n";
  }
  out << "table written to " << table_path.string() << "\n";
}

// --- report -------------------------------------------------------------------

void cmd_report(const std::filesystem::path& results_dir, std::ostream& out) {
  const std::vector<fs::path> files = find_result_files(results_dir);
  if (files.empty())
    throw Error("no result.json files under " + results_dir.string());

  struct Group {
    std::vector<RunResult> runs;
  };
  std::map<std::string, Group> groups;  // key: benchmark/strategy[/variant]
  for (const fs::path& f : files) {
    RunResult r = load_run_result(f);
    std::string key = r.benchmark + "\t" + r.strategy;
    if (!r.variant.empty()) key += "\t" + r.variant;
    groups[key].runs.push_back(std::move(r));
  }

  const fs::path report_dir = results_dir / "report";
  fs::create_directories(report_dir);

  std::ofstream summary(report_dir / "summary.tsv", std::ios::trunc);
  std::ofstream avg_curve(report_dir / "avg_curve.tsv", std::ios::trunc);
  std::ofstream task_curves(report_dir / "per_task_curves.tsv", std::ios::trunc);
  if (!summary || !avg_curve || !task_curves)
    throw Error("cannot write report files under " + report_dir.string());

  summary << "benchmark\tstrategy\tvariant\tseeds\tmean_final_pct\tstd_pct\tmean_fid\n";
  avg_curve << "benchmark\tstrategy\tvariant\tafter_task\tmean_avg_pct\tstd_pct\n";
  task_curves << "benchmark\tstrategy\tvariant\teval_task\tafter_task\tmean_acc_pct\n";

  out << "benchmark    strategy  variant                    seeds  final%   +/-\n";
  for (auto& [key, group] : groups) {
    std::istringstream ks(key);
    std::string bench, strat, variant;
    std::getline(ks, bench, '\t');
    std::getline(ks, strat, '\t');
    std::getline(ks, variant, '\t');

    std::vector<double> finals, fids;
    for (const RunResult& r : group.runs) {
      finals.push_back(r.average_final);
      if (!std::isnan(r.fid)) fids.push_back(r.fid);
    }
    MeanStd fin = mean_std(finals);
    summary << bench << "\t" << strat << "\t" << variant << "\t" << fin.n << "\t"
            << percent(fin.mean) << "\t" << percent(fin.std) << "\t";
    if (fids.empty())
      summary << "";
    else
      summary << std::fixed << std::setprecision(4) << mean_std(fids).mean;
    summary << "\n";

    std::ostringstream line;
    line << std::left << std::setw(13) << bench << std::setw(10) << strat << std::setw(27)
         << (variant.empty() ? "-" : variant) << std::right << std::setw(5) << fin.n
         << std::setw(8) << percent(fin.mean) << std::setw(7) << percent(fin.std);
    out << line.str() << "\n";

    // curves, averaged over seeds; all runs in a group share n_tasks
    const int T = group.runs.front().acc.n_tasks();
    for (int i = 0; i < T; ++i) {
      std::vector<double> avg_i;
      for (const RunResult& r : group.runs)
        if (r.acc.n_tasks() == T) avg_i.push_back(r.acc.avg_after[i]);
      MeanStd m = mean_std(avg_i);
      avg_curve << bench << "\t" << strat << "\t" << variant << "\t" << i + 1 << "\t"
                << percent(m.mean) << "\t" << percent(m.std) << "\n";
      for (int j = 0; j <= i; ++j) {
        std::vector<double> acc_ij;
        for (const RunResult& r : group.runs)
          if (r.acc.n_tasks() == T) acc_ij.push_back(r.acc.entries(i, j));
        task_curves << bench << "\t" << strat << "\t" << variant << "\t" << j + 1 << "\t"
                    << i + 1 << "\t" << percent(mean_std(acc_ij).mean) << "\n";
      }
    }
  }
  out << "report files written to " << report_dir.string() << "\n";
}

// --- fid ----------------------------------------------------------------------

namespace {

std::string resolved_data_dir(const RunResult& r) {
  std::string dir = r.config_echo.value("data_dir", "");
  if (dir.empty())
    if (const char* env = std::getenv("DGR_DATA_DIR")) dir = env;
  if (dir.empty())
    throw ConfigError("dataset directory not set (set data_dir or $DGR_DATA_DIR)",
                      "data_dir");
  return dir;
}

// The extractor cache sits beside the strategy directories of the benchmark
// the run belongs to, so every compared run resolves the same file.
fs::path extractor_cache_path(const fs::path& run_dir, const std::string& benchmark) {
  fs::path p = fs::absolute(run_dir);
  while (p.has_parent_path() && p.parent_path() != p) {
    if (p.filename() == benchmark) return p / "extractor.ckpt";
    p = p.parent_path();
  }
  return fs::absolute(run_dir) / "extractor.ckpt";
}

FeatureExtractor obtain_extractor(const fs::path& cache, Benchmark bench,
                                  const std::string& data_dir, std::ostream& out) {
  if (fs::exists(cache)) {
    out << "extractor: " << cache.string() << "\n";
    return FeatureExtractor::from_checkpoint(cache.string());
  }
  out << "extractor not found, training a joint model once -> " << cache.string()
      << "\n";
  ExperimentConfig cfg = make_benchmark_config(bench, Strategy::joint);
  cfg.data_dir = data_dir;
  TaskStream stream = build_stream(cfg);
  TrainConfig tcfg = cfg.train;
  tcfg.seed = kExtractorSeed;
  RunPaths paths;
  fs::create_directories(cache.parent_path());
  paths.checkpoint = cache.string();
  RunOutcome<float> outcome = run_sequence<float>(stream, cfg.model, tcfg, cfg.schedule, paths);
  out << "extractor trained (" << std::fixed << std::setprecision(1)
      << outcome.wall_seconds << "s, joint accuracy "
      << percent(outcome.acc.average_final()) << "%)\n";
  return FeatureExtractor(std::move(outcome.model));
}

}  // namespace

void cmd_fid(const std::filesystem::path& run_dir, const FidOptions& opt,
             std::ostream& out) {
  const fs::path result_path = run_dir / "result.json";
  RunResult r = load_run_result(result_path);
  const Benchmark bench = benchmark_from_string(r.benchmark);
  if (bench == Benchmark::permmnist10)
    throw Error("fid needs a class-incremental benchmark; permuted streams have no joint extractor");

  const std::string data_dir = resolved_data_dir(r);
  UnifiedModel<float> model =
      UnifiedModel<float>::load((run_dir / r.checkpoint).string());
  DGR_CHECK(!model.seen_classes().empty(), "fid: checkpoint has no seen classes");

  const LabeledDataset test = bench == Benchmark::cifar100_10
                                  ? load_cifar100_split(data_dir, Split::test)
                                  : load_mnist_split(data_dir, Split::test);
  int n = opt.samples > 0 ? opt.samples : (bench == Benchmark::cifar100_10 ? 5000 : 10000);
  n = int(std::min<Index>(n, test.size()));
  DGR_CHECK(n >= 2 * model.config().d_z, "fid: need at least 2*d_z samples per side");

  // shared sampling protocol: fixed streams, independent of the run seed
  std::vector<int> order(size_t(test.size()));
  std::iota(order.begin(), order.end(), 0);
  Rng real_rng(derive_seed(kFidSeed, "fid-real"));
  real_rng.shuffle(order);
  order.resize(size_t(n));
  MatrixF real = gather_images(test.images, order);

  std::vector<int> seen = model.seen_classes();
  std::sort(seen.begin(), seen.end());
  VectorI ids(n);
  for (int i = 0; i < n; ++i) ids[i] = seen[size_t(i) % seen.size()];
  Rng gen_rng(derive_seed(kFidSeed, "fid-gen"));
  MatrixF generated;
  generate_images(model, ids, gen_rng, generated);

  const fs::path cache = opt.extractor.empty()
                             ? extractor_cache_path(run_dir, r.benchmark)
                             : fs::path(opt.extractor);
  FeatureExtractor fx = obtain_extractor(cache, bench, data_dir, out);

  r.fid = modified_fid(real, generated, fx);
  save_run_result(result_path, r);
  out << "fid(" << r.strategy << (r.variant.empty() ? "" : "/" + r.variant) << ", seed "
      << r.seed << ") = " << std::fixed << std::setprecision(4) << r.fid << "  (" << n
      << " samples/side)\n";
}

void cmd_dump_samples(const std::filesystem::path& run_dir, int per_class,
                      std::ostream& out) {
  RunResult r = load_run_result(run_dir / "result.json");
  UnifiedModel<float> model =
      UnifiedModel<float>::load((run_dir / r.checkpoint).string());
  const bool color = model.config().input.channels == 3;
  const fs::path path =
      run_dir / ("samples_" + std::to_string(per_class) + (color ? ".ppm" : ".pgm"));
  dump_replay_grid(model, per_class, path.string(), derive_seed(r.seed, "dump"));
  out << "wrote " << path.string() << " (" << model.seen_classes().size() << " classes x "
      << per_class << ")\n";
}

}  // namespace dgr
