#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "esp/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Continual-learning runner: entropy-scaled per-block plasticity plus replay and "
               "regularization baselines"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_root;
  bool force = false;

  CLI::App* run = app.add_subcommand("run", "Execute one experiment config");
  run->add_option("--config", config_path, "JSON experiment config")->required();
  run->add_option("--out", out_root, "Output root (default $ESP_OUT_ROOT or ./runs)");
  run->add_flag("--force", force, "Overwrite a completed run directory");

  std::vector<std::string> methods;
  std::vector<double> fractions;
  std::size_t seeds = 3;
  CLI::App* sweep = app.add_subcommand("sweep", "Run a methods x replay-fractions grid");
  sweep->add_option("--config", config_path, "Base JSON experiment config")->required();
  sweep->add_option("--methods", methods, "Comma-separated methods")
      ->required()
      ->delimiter(',');
  sweep->add_option("--fractions", fractions, "Comma-separated replay fractions")
      ->required()
      ->delimiter(',');
  sweep->add_option("--seeds", seeds, "Seeds per cell, consecutive from the config seed");
  sweep->add_option("--out", out_root, "Output root for the summary CSV");

  std::string run_dir;
  CLI::App* report_pf = app.add_subcommand("report-pf", "Per-block mean plasticity factors");
  report_pf->add_option("--run", run_dir, "Run directory containing pf_log.csv")->required();

  std::vector<std::string> run_dirs;
  CLI::App* report_time =
      app.add_subcommand("report-time", "Backbone/regularizer time split per run");
  report_time->add_option("--runs", run_dirs, "Run directories containing timing.csv")
      ->required()
      ->expected(-1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    // Treat CLI misuse as a validation failure; --help stays 0.
    return code == 0 ? 0 : 2;
  }

  if (run->parsed()) {
    return esp::run_command(config_path, out_root, force, std::cout, std::cerr);
  }
  if (sweep->parsed()) {
    esp::SweepOptions options{methods, fractions, seeds};
    return esp::sweep_command(config_path, options, out_root, std::cout, std::cerr);
  }
  if (report_pf->parsed()) {
    return esp::report_pf_command(run_dir, std::cout, std::cerr);
  }
  if (report_time->parsed()) {
    return esp::report_time_command(run_dirs, std::cout, std::cerr);
  }
  return 2;
}
