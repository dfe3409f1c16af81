#include "sclab/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "sclab/rng.hpp"
#include "sclab/serialize.hpp"

namespace sclab {

namespace {

constexpr double kDivergenceThreshold = 1e6;

// Sub-seed streams drawn from TrainSpec.seed.
enum Stream : std::uint64_t {
  kStreamInit = 0,
  kStreamShuffle = 1,
  kStreamBiasModel = 2,
};

int argmax3(std::span<const double> v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i) {
    if (v[i] > v[best]) best = i;  // ties keep the lowest class index
  }
  return best;
}

const std::vector<Example>& select_split(const CorpusBundle& bundle, ValSplit split) {
  return split == ValSplit::Matched ? bundle.val_matched : bundle.val_mismatched;
}

struct ValMetrics {
  double loss = 0.0;
  double accuracy = 0.0;
};

ValMetrics evaluate_split(const ModelParams& params, const std::vector<Example>& examples,
                          const LossSpec& loss, const std::vector<ProbVector>* bias_probs) {
  ForwardCache cache;
  std::vector<double> logits;
  std::vector<double> input;
  double loss_sum = 0.0;
  int correct = 0;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const Example& ex = examples[i];
    apply_view(ex.genuine, ex.shortcut, params.view, input);
    forward(params, input, cache, logits);
    const ProbVector* bp = bias_probs ? &(*bias_probs)[i] : nullptr;
    loss_sum += loss_value(loss, logits, static_cast<std::size_t>(ex.label), bp);
    if (argmax3(logits) == ex.label) ++correct;
  }
  ValMetrics m;
  const double n = static_cast<double>(examples.size());
  m.loss = loss.reduction == Reduction::Sum ? loss_sum : loss_sum / n;
  m.accuracy = static_cast<double>(correct) / n;
  return m;
}

bool needs_bias_model(LossKind kind) {
  return kind == LossKind::DebiasedFocal || kind == LossKind::ProductOfExperts;
}

}  // namespace

void TrainSpec::validate() const {
  loss.validate();
  optim.validate();
  if (max_epochs < 1) throw std::invalid_argument("TrainSpec: max_epochs must be >= 1");
  const bool wants_bias = needs_bias_model(loss.kind);
  const bool has_bias = bias_model_source.kind != BiasSource::None;
  if (wants_bias != has_bias) {
    throw std::invalid_argument(
        "TrainSpec: bias_model_source must be set exactly when the loss couples a bias model");
  }
  if (bias_model_source.kind == BiasSource::Checkpoint && bias_model_source.checkpoint_path.empty()) {
    throw std::invalid_argument("TrainSpec: checkpoint bias source needs a path");
  }
}

std::vector<ProbVector> bias_probs_for(const ModelParams& bias_params,
                                       const std::vector<Example>& examples) {
  std::vector<ProbVector> out;
  out.reserve(examples.size());
  ForwardCache cache;
  std::vector<double> logits;
  std::vector<double> input;
  for (const Example& ex : examples) {
    apply_view(ex.genuine, ex.shortcut, bias_params.view, input);
    forward(bias_params, input, cache, logits);
    out.push_back(softmax(logits));
  }
  return out;
}

TrainResult train_run(const CorpusBundle& bundle, const ModelConfig& model_cfg,
                      const TrainSpec& spec, const TrainHooks& hooks) {
  spec.validate();
  if (model_cfg.hidden_dim < 1) {
    throw std::invalid_argument("train_run: hidden_dim must be >= 1");
  }
  const GenSpec& gs = bundle.gen_spec;
  const int input_dim = view_input_dim(gs.d_g, gs.d_s, model_cfg.view);

  // Bias coupling: the auxiliary model is obtained first and then frozen.
  std::vector<ProbVector> train_bias, val_bias;
  const bool coupled = needs_bias_model(spec.loss.kind);
  if (coupled) {
    ModelParams bias_params;
    if (spec.bias_model_source.kind == BiasSource::TrainShortcutOnlyFirst) {
      bias_params = train_bias_model(bundle, ModelConfig{model_cfg.hidden_dim, View::ShortcutOnly},
                                     mix_seed(spec.seed, kStreamBiasModel));
    } else {
      bias_params = load_checkpoint(spec.bias_model_source.checkpoint_path).params;
    }
    train_bias = bias_probs_for(bias_params, bundle.train);
    val_bias = bias_probs_for(bias_params, select_split(bundle, spec.validation_split));
  }

  ModelParams params =
      init_params(input_dim, model_cfg.hidden_dim, mix_seed(spec.seed, kStreamInit),
                  model_cfg.view);
  OptimState state = init_optim_state(params, spec.optim);
  Rng shuffle_rng(mix_seed(spec.seed, kStreamShuffle));

  const std::size_t n_train = bundle.train.size();
  const int batch_size = spec.optim.batch_size;
  const long steps_per_epoch =
      static_cast<long>((n_train + batch_size - 1) / static_cast<std::size_t>(batch_size));
  const long total_steps = steps_per_epoch * spec.max_epochs;

  std::vector<std::size_t> order(n_train);
  std::iota(order.begin(), order.end(), 0);

  ModelGrads grads = zero_grads_like(params);
  ForwardCache cache;
  std::vector<double> logits, input, grad_logits;

  RunHistory history;
  double best_loss = std::numeric_limits<double>::infinity();
  int best_epoch = -1;
  ModelParams best_params = params;

  for (int epoch = 0; epoch < spec.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    const double epoch_lr = spec.optim.kind == OptimKind::Sgd
                                ? state.current_lr
                                : warmup_linear_lr(state.step_counter, total_steps,
                                                   spec.optim.peak_lr, spec.optim.warmup_fraction);
    double epoch_loss_sum = 0.0;
    long step_in_epoch = 0;
    for (std::size_t start = 0; start < n_train; start += batch_size, ++step_in_epoch) {
      const std::size_t stop = std::min(n_train, start + static_cast<std::size_t>(batch_size));
      const std::size_t count = stop - start;
      grads.zero();
      double batch_loss_sum = 0.0;
      for (std::size_t k = start; k < stop; ++k) {
        const std::size_t idx = order[k];
        const Example& ex = bundle.train[idx];
        apply_view(ex.genuine, ex.shortcut, model_cfg.view, input);
        forward(params, input, cache, logits);
        for (double z : logits) {
          if (!std::isfinite(z)) {
            throw DivergenceError("training diverged at epoch " + std::to_string(epoch) +
                                  " step " + std::to_string(step_in_epoch) +
                                  ": non-finite logits");
          }
        }
        const ProbVector* bp = coupled ? &train_bias[idx] : nullptr;
        batch_loss_sum +=
            loss_value_grad(spec.loss, logits, static_cast<std::size_t>(ex.label), bp, grad_logits);
        backward_accumulate(params, cache, grad_logits, grads);
      }
      const double batch_loss = spec.loss.reduction == Reduction::Sum
                                    ? batch_loss_sum
                                    : batch_loss_sum / static_cast<double>(count);
      if (!std::isfinite(batch_loss) || batch_loss > kDivergenceThreshold) {
        throw DivergenceError("training diverged at epoch " + std::to_string(epoch) + " step " +
                              std::to_string(step_in_epoch) + ": train loss " +
                              std::to_string(batch_loss));
      }
      if (spec.loss.reduction == Reduction::Mean) {
        grads.scale(1.0 / static_cast<double>(count));
      }
      if (spec.optim.clip_norm) clip_grad_norm(grads, *spec.optim.clip_norm);
      if (spec.optim.kind == OptimKind::AdamW) {
        state.current_lr = warmup_linear_lr(state.step_counter, total_steps, spec.optim.peak_lr,
                                            spec.optim.warmup_fraction);
        adamw_step(state, params, grads, spec.optim);
      } else {
        sgd_step(params, grads, state.current_lr);
        state.step_counter += 1;
      }
      epoch_loss_sum += batch_loss_sum;
    }

    EpochRecord rec;
    rec.train_loss = epoch_loss_sum / static_cast<double>(n_train);
    rec.lr = epoch_lr;
    if (hooks.validation_loss_override) {
      rec.val_loss = hooks.validation_loss_override(epoch, params);
      rec.val_accuracy = 0.0;
    } else {
      const ValMetrics vm = evaluate_split(params, select_split(bundle, spec.validation_split),
                                           spec.loss, coupled ? &val_bias : nullptr);
      rec.val_loss = vm.loss;
      rec.val_accuracy = vm.accuracy;
    }
    history.epochs.push_back(rec);

    if (rec.val_loss < best_loss) {  // strict: ties keep the earliest epoch
      best_loss = rec.val_loss;
      best_epoch = epoch;
      best_params = params;
    }
    if (spec.optim.kind == OptimKind::Sgd) {
      state.current_lr = shrink_on_epoch(state.current_lr, spec.optim.shrink_factor);
    }
  }

  TrainResult result;
  if (spec.early_stopping) {
    history.best_epoch = best_epoch;
    history.best_params = best_params;
    result.params = std::move(best_params);
  } else {
    history.best_epoch = spec.max_epochs - 1;
    history.best_params = params;
    result.params = params;
  }
  result.history = std::move(history);
  return result;
}

ModelParams train_bias_model(const CorpusBundle& bundle, const ModelConfig& model_cfg,
                             std::uint64_t seed) {
  TrainSpec spec;
  spec.loss.kind = LossKind::CrossEntropy;
  spec.seed = seed;
  ModelConfig cfg = model_cfg;
  cfg.view = View::ShortcutOnly;
  return train_run(bundle, cfg, spec).params;
}

// Declared in datagen.hpp; lives here because it trains the shallow model.
CorpusBundle label_hardness(const CorpusBundle& bundle, std::uint64_t seed) {
  const ModelParams shallow =
      train_bias_model(bundle, ModelConfig{kDefaultHiddenDim, View::ShortcutOnly}, seed);
  CorpusBundle out = bundle;
  ForwardCache cache;
  std::vector<double> logits, input;
  for (Example& ex : out.test) {
    apply_view(ex.genuine, ex.shortcut, View::ShortcutOnly, input);
    forward(shallow, input, cache, logits);
    ex.hard = argmax3(logits) != ex.label;
  }
  return out;
}

}  // namespace sclab
