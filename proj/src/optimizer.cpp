#include "sclab/optimizer.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace sclab {

namespace {

double sq_norm_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

void scale_vec(std::vector<double>& v, double s) {
  for (double& x : v) x *= s;
}

void check_shapes(const ModelParams& params, const ModelGrads& grads, const char* who) {
  if (grads.w1.size() != params.w1.size() || grads.b1.size() != params.b1.size() ||
      grads.w2.size() != params.w2.size() || grads.b2.size() != params.b2.size()) {
    throw std::invalid_argument(std::string(who) + ": gradient/parameter shape mismatch");
  }
}

// One moment/update pass over a single parameter array.
void adamw_update_array(std::vector<double>& p, const std::vector<double>& g,
                        std::vector<double>& m, std::vector<double>& v, double lr,
                        const OptimSpec& spec, double bc1, double bc2) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    m[i] = spec.beta1 * m[i] + (1.0 - spec.beta1) * g[i];
    v[i] = spec.beta2 * v[i] + (1.0 - spec.beta2) * g[i] * g[i];
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    p[i] -= lr * (mhat / (std::sqrt(vhat) + spec.adam_eps) + spec.weight_decay * p[i]);
  }
}

}  // namespace

void OptimSpec::validate() const {
  if (!(peak_lr >= 0.0)) throw std::invalid_argument("OptimSpec: peak_lr must be >= 0");
  if (!(adam_eps > 0.0)) throw std::invalid_argument("OptimSpec: adam_eps must be positive");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
    throw std::invalid_argument("OptimSpec: betas must lie in [0, 1)");
  }
  if (weight_decay < 0.0) throw std::invalid_argument("OptimSpec: weight_decay must be >= 0");
  if (clip_norm && !(*clip_norm > 0.0)) {
    throw std::invalid_argument("OptimSpec: clip_norm must be positive when set");
  }
  if (warmup_fraction < 0.0 || warmup_fraction >= 1.0) {
    throw std::invalid_argument("OptimSpec: warmup_fraction must lie in [0, 1)");
  }
  if (!(shrink_factor >= 1.0)) {
    throw std::invalid_argument("OptimSpec: shrink_factor must be >= 1");
  }
  if (batch_size < 1) throw std::invalid_argument("OptimSpec: batch_size must be >= 1");
  if (epochs < 1) throw std::invalid_argument("OptimSpec: epochs must be >= 1");
}

OptimState init_optim_state(const ModelParams& params, const OptimSpec& spec) {
  OptimState state;
  state.step_counter = 0;
  state.current_lr = spec.kind == OptimKind::Sgd ? spec.peak_lr : 0.0;
  if (spec.kind == OptimKind::AdamW) {
    state.first_moment = zero_grads_like(params);
    state.second_moment = zero_grads_like(params);
  }
  return state;
}

double clip_grad_norm(ModelGrads& grads, double max_norm) {
  if (!(max_norm > 0.0)) {
    throw std::invalid_argument("clip_grad_norm: max_norm must be positive");
  }
  const double sq = sq_norm_of(grads.w1) + sq_norm_of(grads.b1) + sq_norm_of(grads.w2) +
                    sq_norm_of(grads.b2);
  if (!std::isfinite(sq)) {
    throw std::invalid_argument("clip_grad_norm: non-finite gradients");
  }
  const double norm = std::sqrt(sq);
  if (norm <= max_norm) return 1.0;
  const double scale = max_norm / norm;
  scale_vec(grads.w1, scale);
  scale_vec(grads.b1, scale);
  scale_vec(grads.w2, scale);
  scale_vec(grads.b2, scale);
  return scale;
}

double warmup_linear_lr(long step, long total_steps, double peak_lr, double warmup_fraction) {
  if (step < 0 || total_steps < 1 || step > total_steps) {
    throw std::invalid_argument("warmup_linear_lr: need 0 <= step <= total_steps");
  }
  const long warm_steps =
      static_cast<long>(std::ceil(warmup_fraction * static_cast<double>(total_steps)));
  if (step <= warm_steps) {
    if (warm_steps == 0) return step == 0 ? 0.0 : peak_lr;
    return peak_lr * static_cast<double>(step) / static_cast<double>(warm_steps);
  }
  return peak_lr * static_cast<double>(total_steps - step) /
         static_cast<double>(total_steps - warm_steps);
}

void adamw_step(OptimState& state, ModelParams& params, const ModelGrads& grads,
                const OptimSpec& spec) {
  check_shapes(params, grads, "adamw_step");
  check_shapes(params, state.first_moment, "adamw_step(state)");
  state.step_counter += 1;
  const double t = static_cast<double>(state.step_counter);
  const double bc1 = 1.0 - std::pow(spec.beta1, t);
  const double bc2 = 1.0 - std::pow(spec.beta2, t);
  const double lr = state.current_lr;
  adamw_update_array(params.w1, grads.w1, state.first_moment.w1, state.second_moment.w1, lr,
                     spec, bc1, bc2);
  adamw_update_array(params.b1, grads.b1, state.first_moment.b1, state.second_moment.b1, lr,
                     spec, bc1, bc2);
  adamw_update_array(params.w2, grads.w2, state.first_moment.w2, state.second_moment.w2, lr,
                     spec, bc1, bc2);
  adamw_update_array(params.b2, grads.b2, state.first_moment.b2, state.second_moment.b2, lr,
                     spec, bc1, bc2);
}

void sgd_step(ModelParams& params, const ModelGrads& grads, double current_lr) {
  check_shapes(params, grads, "sgd_step");
  for (std::size_t i = 0; i < params.w1.size(); ++i) params.w1[i] -= current_lr * grads.w1[i];
  for (std::size_t i = 0; i < params.b1.size(); ++i) params.b1[i] -= current_lr * grads.b1[i];
  for (std::size_t i = 0; i < params.w2.size(); ++i) params.w2[i] -= current_lr * grads.w2[i];
  for (std::size_t i = 0; i < params.b2.size(); ++i) params.b2[i] -= current_lr * grads.b2[i];
}

double shrink_on_epoch(double current_lr, double shrink_factor) {
  if (!(shrink_factor >= 1.0)) {
    throw std::invalid_argument("shrink_on_epoch: factor must be >= 1");
  }
  return current_lr / shrink_factor;
}

}  // namespace sclab
