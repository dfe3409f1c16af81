#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sclab/datagen.hpp"
#include "sclab/losses.hpp"
#include "sclab/netmodel.hpp"
#include "sclab/optimizer.hpp"

namespace sclab {

inline constexpr int kDefaultHiddenDim = 64;

enum class ValSplit { Matched, Mismatched };

enum class BiasSource { None, TrainShortcutOnlyFirst, Checkpoint };

struct BiasModelSource {
  BiasSource kind = BiasSource::None;
  std::string checkpoint_path;
};

struct TrainSpec {
  LossSpec loss;
  OptimSpec optim;
  bool early_stopping = true;
  ValSplit validation_split = ValSplit::Mismatched;
  int max_epochs = 10;
  std::uint64_t seed = 1;
  BiasModelSource bias_model_source;

  void validate() const;  // bias source required iff the loss couples a bias model
};

struct ModelConfig {
  int hidden_dim = kDefaultHiddenDim;
  View view = View::Full;
};

struct EpochRecord {
  double train_loss = 0.0;  // mean per-sample loss over the epoch
  double val_loss = 0.0;
  double val_accuracy = 0.0;
  double lr = 0.0;  // lr in effect during the epoch (at its first step)
};

struct RunHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = -1;  // argmin val loss (ties earliest); final epoch if no early stopping
  ModelParams best_params;
};

// Test-only injection points.
struct TrainHooks {
  // Replaces the epoch-end validation loss when set.
  std::function<double(int epoch, const ModelParams& params)> validation_loss_override;
};

struct TrainResult {
  ModelParams params;  // the retained parameters per the early-stopping rule
  RunHistory history;
};

// Aborted on non-finite or exploding train loss; carries epoch/step info.
struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The full training loop: seeded batch shuffling, per-LossSpec gradients,
// clipping, optimizer step, per-epoch validation and retention of the
// lowest-validation-loss parameters. Deterministic in (bundle, cfg, spec).
TrainResult train_run(const CorpusBundle& bundle, const ModelConfig& model_cfg,
                      const TrainSpec& spec, const TrainHooks& hooks = {});

// The auxiliary shallow model: ShortcutOnly view, cross-entropy, trained to
// its own early-stopping rule and then frozen.
ModelParams train_bias_model(const CorpusBundle& bundle, const ModelConfig& model_cfg,
                             std::uint64_t seed);

// Per-example bias-model probabilities, precomputed once per run.
std::vector<ProbVector> bias_probs_for(const ModelParams& bias_params,
                                       const std::vector<Example>& examples);

}  // namespace sclab
