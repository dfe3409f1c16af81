#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "sclab/experiment.hpp"

namespace {

// Command-line overrides applied on top of the config file.
struct CliOverrides {
  std::string out;
  std::string loss;
  bool no_early_stopping = false;
};

void apply_overrides(sclab::ExperimentConfig& cfg, const CliOverrides& ov) {
  if (!ov.out.empty()) cfg.output_dir = ov.out;
  if (ov.no_early_stopping) cfg.train.early_stopping = false;
  if (!ov.loss.empty()) {
    if (ov.loss == "ce") {
      cfg.train.loss.kind = sclab::LossKind::CrossEntropy;
      cfg.train.bias_model_source = {sclab::BiasSource::None, ""};
    } else if (ov.loss == "focal") {
      cfg.train.loss.kind = sclab::LossKind::Focal;
      cfg.train.bias_model_source = {sclab::BiasSource::None, ""};
    } else if (ov.loss == "dfl") {
      cfg.train.loss.kind = sclab::LossKind::DebiasedFocal;
      if (cfg.train.bias_model_source.kind == sclab::BiasSource::None) {
        cfg.train.bias_model_source = {sclab::BiasSource::TrainShortcutOnlyFirst, ""};
      }
    } else if (ov.loss == "poe") {
      cfg.train.loss.kind = sclab::LossKind::ProductOfExperts;
      if (cfg.train.bias_model_source.kind == sclab::BiasSource::None) {
        cfg.train.bias_model_source = {sclab::BiasSource::TrainShortcutOnlyFirst, ""};
      }
    } else {
      throw std::runtime_error("unknown loss '" + ov.loss + "' (ce|focal|dfl|poe)");
    }
  }
  cfg.validate();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"synthetic shortcut-learning laboratory"};
  app.require_subcommand(1);

  std::string config_path;
  CliOverrides ov;
  app.add_option("--config", config_path, "experiment config file")->required();
  app.add_option("--out", ov.out, "override [experiment] output_dir");
  app.add_option("--loss", ov.loss, "override training loss (ce|focal|dfl|poe)");
  app.add_flag("--no-early-stopping", ov.no_early_stopping,
               "run to max_epochs and keep the final parameters");

  auto* generate = app.add_subcommand("generate", "generate and serialize the corpus");

  auto* run = app.add_subcommand("run", "train and evaluate one (gamma, inject, seed) triple");
  double gamma = 0.0;
  int inject = 0;
  std::uint64_t seed = 1;
  run->add_option("--gamma", gamma, "focusing parameter")->required();
  run->add_option("--inject", inject, "challenge-pool samples added to train");
  run->add_option("--seed", seed, "run seed");

  auto* sweep = app.add_subcommand("sweep", "run the full gamma x injection x seed grid");
  int workers = 1;
  sweep->add_option("--workers", workers, "parallel jobs across grid triples");

  auto* plot = app.add_subcommand("plot", "emit SVG plots from run artifacts");
  std::string run_name;
  plot->add_option("--run", run_name, "plot a single run directory (default: all)");

  auto* report = app.add_subcommand("report", "rebuild aggregate tables from run artifacts");

  CLI11_PARSE(app, argc, argv);

  try {
    sclab::ExperimentConfig cfg = sclab::load_config(config_path);
    apply_overrides(cfg, ov);
    if (generate->parsed()) {
      sclab::cmd_generate(cfg);
      std::cout << "corpus written to " << (cfg.experiment_dir() / "corpus").string() << '\n';
    } else if (run->parsed()) {
      const sclab::RunRecord record = sclab::cmd_run(cfg, gamma, inject, seed);
      if (!record.ok) {
        std::cerr << "error: run-diverged: " << record.error << '\n';
        return 2;
      }
      std::cout << "run " << sclab::run_dir_name(record.key) << " ok\n";
    } else if (sweep->parsed()) {
      sclab::cmd_sweep(cfg, workers);
      std::cout << "sweep tables written to " << cfg.experiment_dir().string() << '\n';
    } else if (plot->parsed()) {
      sclab::cmd_plot(cfg, run_name);
      std::cout << "plots written under " << cfg.experiment_dir().string() << '\n';
    } else if (report->parsed()) {
      sclab::cmd_report(cfg);
      std::cout << "aggregate tables rebuilt under " << cfg.experiment_dir().string() << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
