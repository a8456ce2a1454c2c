#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dgr/harness.hpp"
#include "dgr/results.hpp"

// Exit codes: 0 success, 2 configuration error, 3 runtime error.

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"class-incremental generative-replay trainer"};
  app.require_subcommand(1);
  app.set_version_flag("--version", dgr::build_id());

  std::string config_path;
  std::string results_dir;
  std::string run_dir;

  CLI::App* run = app.add_subcommand("run", "train every (strategy, seed) run of a config");
  run->add_option("config", config_path, "experiment config file")->required();

  dgr::AblateOptions ablate_opt;
  CLI::App* ablate = app.add_subcommand("ablate", "expand and run the schedule-ablation grid");
  ablate->add_option("config", config_path, "experiment config file")->required();
  ablate->add_flag("--dry-run", ablate_opt.dry_run, "print the plan without training");
  ablate->add_option("--groups", ablate_opt.groups, "restrict to these grid groups (1-8)")
      ->delimiter(',');

  CLI::App* report = app.add_subcommand("report", "summarize result files into tables and curves");
  report->add_option("dir", results_dir, "directory containing result.json files")->required();

  dgr::FidOptions fid_opt;
  CLI::App* fid = app.add_subcommand("fid", "score a run's replay samples against real test data");
  fid->add_option("run", run_dir, "run directory (holds result.json)")->required();
  fid->add_option("--extractor", fid_opt.extractor, "feature-extractor checkpoint path");
  fid->add_option("--samples", fid_opt.samples, "samples per side (default per benchmark)");

  int per_class = 8;
  CLI::App* dump = app.add_subcommand("dump-samples", "write a class-by-sample replay image grid");
  dump->add_option("run", run_dir, "run directory (holds result.json)")->required();
  dump->add_option("--per-class", per_class, "samples per class row")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (run->parsed()) dgr::cmd_run(config_path, std::cout);
    if (ablate->parsed()) dgr::cmd_ablate(config_path, ablate_opt, std::cout);
    if (report->parsed()) dgr::cmd_report(results_dir, std::cout);
    if (fid->parsed()) dgr::cmd_fid(run_dir, fid_opt, std::cout);
    if (dump->parsed()) dgr::cmd_dump_samples(run_dir, per_class, std::cout);
  } catch (const dgr::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
