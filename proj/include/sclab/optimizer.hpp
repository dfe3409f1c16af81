#pragma once

#include <optional>

#include "sclab/netmodel.hpp"

namespace sclab {

enum class OptimKind { AdamW, Sgd };

// Update-rule selection and hyperparameters. The SGD regime (lr 0.1,
// shrink 5 per epoch, clip 5) is the desk-scale default; the AdamW regime
// (lr 2e-5, weight decay 0.01, 10% linear warmup then decay, clip 1) is
// retained behind configuration.
struct OptimSpec {
  OptimKind kind = OptimKind::Sgd;
  double peak_lr = 0.1;
  double adam_eps = 1e-6;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double weight_decay = 0.0;
  std::optional<double> clip_norm = 5.0;
  double warmup_fraction = 0.1;   // AdamW only
  double shrink_factor = 5.0;     // Sgd only
  int batch_size = 32;
  int epochs = 10;

  void validate() const;
};

struct OptimState {
  long step_counter = 0;
  ModelGrads first_moment;   // AdamW moment accumulators, zero-initialized
  ModelGrads second_moment;
  double current_lr = 0.0;
};

OptimState init_optim_state(const ModelParams& params, const OptimSpec& spec);

// Scales grads in place so the global L2 norm is at most max_norm.
// Returns the applied scale (1 when no clipping occurred).
double clip_grad_norm(ModelGrads& grads, double max_norm);

// Piecewise-linear schedule: 0 -> peak over the first
// ceil(warmup_fraction * total_steps) steps, then linearly back to 0.
double warmup_linear_lr(long step, long total_steps, double peak_lr, double warmup_fraction);

// Decoupled-weight-decay Adam with bias-corrected moments. Uses
// state.current_lr; callers set it from the schedule before each step.
void adamw_step(OptimState& state, ModelParams& params, const ModelGrads& grads,
                const OptimSpec& spec);

void sgd_step(ModelParams& params, const ModelGrads& grads, double current_lr);

double shrink_on_epoch(double current_lr, double shrink_factor);

}  // namespace sclab
