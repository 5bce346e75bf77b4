// Command-line front end: run single-strategy experiments, sweep strategy
// grids, run the misestimation robustness study, re-aggregate stored traces,
// and emit plot-ready series.

#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include "ascma/harness.hpp"
#include "ascma/version.hpp"

namespace {

const char* error_kind(const std::exception& e) {
  if (dynamic_cast<const ascma::InvalidDimensionError*>(&e)) return "invalid-dimension";
  if (dynamic_cast<const ascma::NumericalStateError*>(&e)) return "numerical-state";
  if (dynamic_cast<const ascma::InvalidFitnessError*>(&e)) return "invalid-fitness";
  if (dynamic_cast<const ascma::InvalidConfigError*>(&e)) return "invalid-config";
  if (dynamic_cast<const ascma::InsufficientPopulationError*>(&e)) return "insufficient-population";
  if (dynamic_cast<const ascma::InsufficientDataError*>(&e)) return "insufficient-data";
  if (dynamic_cast<const ascma::BoundsError*>(&e)) return "bounds";
  if (dynamic_cast<const ascma::LandscapeEvaluationError*>(&e)) return "landscape-evaluation";
  if (dynamic_cast<const ascma::DegenerateEliteError*>(&e)) return "degenerate-elite";
  if (dynamic_cast<const ascma::InvalidBudgetError*>(&e)) return "invalid-budget";
  if (dynamic_cast<const ascma::InvalidStudyError*>(&e)) return "invalid-study";
  if (dynamic_cast<const ascma::IoError*>(&e)) return "io";
  return "internal";
}

struct CommonOptions {
  std::string config_path;
  std::string out_dir;
  long long seed_base = -1;
  int parallel = 1;
};

void add_common(CLI::App* cmd, CommonOptions& opts, bool config_required = true) {
  auto* config = cmd->add_option("--config", opts.config_path, "experiment config file (JSON)");
  if (config_required) config->required();
  cmd->add_option("--seed-base", opts.seed_base, "override the config's seed base");
  cmd->add_option("--out", opts.out_dir, "override the config's output directory");
  cmd->add_option("--parallel", opts.parallel, "worker threads for independent runs")
      ->check(CLI::PositiveNumber);
}

ascma::ExperimentConfig load(const CommonOptions& opts) {
  auto config = ascma::load_config_file(opts.config_path);
  if (opts.seed_base >= 0) config.seed_base = static_cast<std::uint64_t>(opts.seed_base);
  if (!opts.out_dir.empty()) config.output_dir = opts.out_dir;
  return config;
}

void emit_outputs(const ascma::ResultsStore& store, const std::filesystem::path& out_dir) {
  ascma::write_store(store, out_dir);
  ascma::write_report(store, out_dir);
  ascma::write_plot_data(store, out_dir);
  std::cout << "wrote " << (out_dir / "report.json").string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Noisy-optimization benchmark harness (adaptive-sampling CMA-ES)"};
  app.set_version_flag("--version", ascma::version);
  app.require_subcommand(1);

  CommonOptions run_opts, sweep_opts, perturb_opts, analyze_opts, plot_opts;

  auto* run_cmd = app.add_subcommand("run", "execute one strategy for N seeded runs");
  add_common(run_cmd, run_opts);

  auto* sweep_cmd = app.add_subcommand("sweep", "execute every strategy in the config grid");
  add_common(sweep_cmd, sweep_opts);

  auto* perturb_cmd =
      app.add_subcommand("perturb", "misestimation robustness study around an adaptive run");
  add_common(perturb_cmd, perturb_opts);
  std::string perturb_target = "both";
  perturb_cmd->add_option("--target", perturb_target, "y_hat, noise_curve, or both")
      ->check(CLI::IsMember({"y_hat", "noise_curve", "both"}));
  std::vector<double> perturb_errors{0.0, 0.10, -0.10, 0.25, -0.25};
  perturb_cmd->add_option("--errors", perturb_errors, "multiplicative error levels");

  auto* analyze_cmd =
      app.add_subcommand("analyze", "re-aggregate traces previously written by run/sweep/perturb");
  add_common(analyze_cmd, analyze_opts, /*config_required=*/false);
  analyze_cmd->get_option("--out")->required();

  auto* plot_cmd = app.add_subcommand("plot-data", "emit figure-ready series from stored traces");
  add_common(plot_cmd, plot_opts, /*config_required=*/false);
  plot_cmd->get_option("--out")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      auto config = load(run_opts);
      if (config.strategies.size() != 1)
        throw ascma::InvalidConfigError("run: config must name exactly one strategy (use sweep)");
      const auto store = ascma::run_sweep(config, run_opts.parallel);
      emit_outputs(store, config.output_dir);
    } else if (sweep_cmd->parsed()) {
      auto config = load(sweep_opts);
      const auto store = ascma::run_sweep(config, sweep_opts.parallel);
      emit_outputs(store, config.output_dir);
    } else if (perturb_cmd->parsed()) {
      auto config = load(perturb_opts);
      std::vector<ascma::PerturbTarget> targets;
      if (perturb_target == "y_hat" || perturb_target == "both")
        targets.push_back(ascma::PerturbTarget::y_hat);
      if (perturb_target == "noise_curve" || perturb_target == "both")
        targets.push_back(ascma::PerturbTarget::noise_curve);
      const auto store =
          ascma::perturbation_study(config, targets, perturb_errors, perturb_opts.parallel);
      emit_outputs(store, config.output_dir);
    } else if (analyze_cmd->parsed()) {
      const auto store = ascma::read_store(analyze_opts.out_dir);
      ascma::write_report(store, analyze_opts.out_dir);
      std::cout << "wrote " << (std::filesystem::path(analyze_opts.out_dir) / "report.json").string()
                << '\n';
    } else if (plot_cmd->parsed()) {
      const auto store = ascma::read_store(plot_opts.out_dir);
      ascma::write_plot_data(store, plot_opts.out_dir);
      std::cout << "wrote plot series under "
                << (std::filesystem::path(plot_opts.out_dir) / "plot").string() << '\n';
    }
  } catch (const std::exception& e) {
    // machine-readable error record
    std::cerr << "{\"error\":{\"type\":\"" << error_kind(e) << "\",\"message\":\""
              << e.what() << "\"}}" << std::endl;
    return 1;
  }
  return 0;
}
