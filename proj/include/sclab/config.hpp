#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sclab/datagen.hpp"
#include "sclab/trainer.hpp"

namespace sclab {

// Everything a sweep needs: corpus spec, model width, the training
// template (gamma filled in per grid point) and the experiment grids.
struct ExperimentConfig {
  std::string name = "default";
  std::filesystem::path output_dir = "out";
  GenSpec gen;
  ModelConfig model;
  TrainSpec train;
  std::vector<double> gamma_grid = {0.0, 0.5, 1.0, 2.0, 5.0, 10.0};
  std::vector<int> injection_grid = {0, 100, 1000};
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};

  void validate() const;
  std::filesystem::path experiment_dir() const { return output_dir / name; }
};

// Flat key-value text with [section] headers and '#' comments. Every
// GenSpec/TrainSpec/OptimSpec field is addressable; unknown sections or
// keys are errors.
ExperimentConfig parse_config_text(const std::string& text, const std::string& context);
ExperimentConfig load_config(const std::filesystem::path& path);

// FNV-1a over the raw config bytes; recorded in sweep manifests.
std::string config_hash(const std::string& text);

}  // namespace sclab
