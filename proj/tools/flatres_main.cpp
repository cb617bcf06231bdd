#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "flatres/experiments.hpp"
#include "flatres/verify.hpp"

namespace {

using namespace flatres;

void print_table(const MetricTable& table) {
  std::printf("%-18s %-12s %-11s %-6s %-12s %-14s %s\n", "scenario", "model",
              "reference", "seed", "pos_error", "median_ctrl_ms", "status");
  for (const auto& row : table.rows)
    std::printf("%-18s %-12s %-11s %-6s %-12.6g %-14.4g %s\n",
                row.scenario.c_str(), row.model.c_str(), row.reference.c_str(),
                row.seed ? std::to_string(*row.seed).c_str() : "-",
                row.position_error, row.timing.median_ns * 1e-6,
                row.status.c_str());
  std::printf("\naggregates over seeds (mean +/- std):\n");
  for (const auto& a : table.aggregates())
    std::printf("  %-18s %-12s %-11s %.6g +/- %.2g  (n=%d)\n",
                a.scenario.c_str(), a.model.c_str(), a.reference.c_str(),
                a.mean, a.stddev, a.n);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"flatness-preserving residual dynamics toolkit"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand name

  std::string config_path;
  std::string out_dir;
  std::vector<std::uint64_t> seeds;
  bool paper_mode = false;
  app.add_option("--config", config_path, "experiment config file (JSON)");
  app.add_option("--out", out_dir, "output directory root");
  app.add_option("--seeds", seeds, "training seed list override")
      ->delimiter(',');
  app.add_flag("--paper-mode", paper_mode,
               "run the full 30-seed protocol instead of the 5-seed default");

  auto* cmd_gen = app.add_subcommand("gen-data", "generate the training dataset");
  auto* cmd_train = app.add_subcommand("train", "train residual models per seed");
  auto* cmd_ol =
      app.add_subcommand("eval-open-loop", "open-loop rollouts and error table");
  auto* cmd_cl = app.add_subcommand(
      "eval-closed-loop", "closed-loop tracking, NMPC baseline, timing");
  auto* cmd_verify = app.add_subcommand("verify", "run all property suites");

  std::uint64_t verify_seed = 0;
  std::string inject_fault = "none";
  cmd_verify->add_option("--seed", verify_seed, "suite sampling seed");
  cmd_verify->add_option("--inject-fault", inject_fault,
                         "deliberate fault for self-test: none | h2-sign");

  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentConfig cfg =
        config_path.empty() ? default_config() : load_config(config_path);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (!seeds.empty()) cfg.seeds = seeds;
    if (paper_mode) {
      cfg.seeds.clear();
      for (std::uint64_t s = 0; s < 30; ++s) cfg.seeds.push_back(s);
    }

    if (cmd_verify->parsed()) {
      VerifyOptions opts;
      opts.seed = verify_seed;
      if (inject_fault == "h2-sign")
        opts.fault = ModelFault::H2SignFlip;
      else if (inject_fault != "none")
        throw std::invalid_argument("unknown fault: " + inject_fault);
      const VerifyReport report = run_verify(opts);
      std::cout << report.text();
      return report.all_pass() ? 0 : 1;
    }

    const RunPaths paths = make_run_paths(cfg);
    if (cmd_gen->parsed()) {
      const Dataset ds = run_gen_data(cfg, paths);
      std::cout << "dataset: " << paths.dataset << "/dataset.csv  ("
                << ds.trajectories.size() << " trajectories, "
                << ds.total_samples() << " samples)\n";
    } else if (cmd_train->parsed()) {
      const Dataset ds = ensure_dataset(cfg, paths);
      const auto models = run_train(cfg, ds, paths);
      for (const auto& m : models)
        std::cout << "model seed " << m.seed << ": " << m.path
                  << "  (final loss " << m.log.final_loss << ")\n";
    } else if (cmd_ol->parsed()) {
      const auto models = ensure_models(cfg, paths);
      const MetricTable table = run_eval_open_loop(cfg, models, paths);
      print_table(table);
      std::cout << "metrics: " << paths.metrics << "/open-loop.{csv,json}\n";
    } else if (cmd_cl->parsed()) {
      const auto models = ensure_models(cfg, paths);
      const MetricTable table = run_eval_closed_loop(cfg, models, paths);
      print_table(table);
      std::cout << "metrics: " << paths.metrics << "/closed-loop.{csv,json}\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
