#include <doctest.h>

#include <cmath>
#include <random>

#include "sclab/optimizer.hpp"

using namespace sclab;

namespace {

ModelGrads flat_grads(std::vector<double> w1) {
  ModelGrads g;
  g.w1 = std::move(w1);
  return g;
}

double global_norm(const ModelGrads& g) {
  double s = 0.0;
  for (double x : g.w1) s += x * x;
  for (double x : g.b1) s += x * x;
  for (double x : g.w2) s += x * x;
  for (double x : g.b2) s += x * x;
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("clip_grad_norm: contract, idempotence and rejection of non-finite grads") {
  ModelGrads small = flat_grads({0.3, 0.4});
  CHECK(clip_grad_norm(small, 1.0) == 1.0);
  CHECK(small.w1 == std::vector<double>{0.3, 0.4});

  ModelGrads g = flat_grads({3.0, 4.0});
  const double scale = clip_grad_norm(g, 1.0);
  CHECK(scale == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(g.w1[0] == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(g.w1[1] == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(std::abs(global_norm(g) - 1.0) <= 1e-9);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int it = 0; it < 50; ++it) {
    std::vector<double> w(32);
    for (double& x : w) x = u(rng);
    ModelGrads r = flat_grads(w);
    clip_grad_norm(r, 5.0);
    CHECK(global_norm(r) <= 5.0 + 1e-9);
    ModelGrads twice = r;
    const double second = clip_grad_norm(twice, 5.0);
    CHECK(second == doctest::Approx(1.0).epsilon(1e-9));
    for (std::size_t i = 0; i < r.w1.size(); ++i) {
      CHECK(twice.w1[i] == doctest::Approx(r.w1[i]).epsilon(1e-12));
    }
  }

  ModelGrads bad = flat_grads({std::nan(""), 1.0});
  CHECK_THROWS_AS(clip_grad_norm(bad, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(clip_grad_norm(small, 0.0), std::invalid_argument);
}

TEST_CASE("warmup_linear_lr: endpoints, interior value and continuity") {
  const double peak = 2e-5;
  CHECK(warmup_linear_lr(0, 100, peak, 0.1) == 0.0);
  CHECK(warmup_linear_lr(10, 100, peak, 0.1) == doctest::Approx(peak).epsilon(1e-12));
  CHECK(warmup_linear_lr(100, 100, peak, 0.1) == 0.0);
  CHECK(warmup_linear_lr(55, 100, peak, 0.1) == doctest::Approx(1e-5).epsilon(1e-12));

  const long total = 100;
  const long warm = 10;
  const double step_bound = peak / static_cast<double>(std::min(warm, total - warm)) + 1e-15;
  for (long s = 0; s < total; ++s) {
    const double delta =
        std::abs(warmup_linear_lr(s + 1, total, peak, 0.1) - warmup_linear_lr(s, total, peak, 0.1));
    CHECK(delta <= step_bound);
  }

  CHECK_THROWS_AS(warmup_linear_lr(101, 100, peak, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(warmup_linear_lr(-1, 100, peak, 0.1), std::invalid_argument);
}

TEST_CASE("adamw_step: fixed points and the scalar first-step recurrence") {
  OptimSpec spec;
  spec.kind = OptimKind::AdamW;
  spec.peak_lr = 2e-5;
  spec.weight_decay = 0.0;

  ModelParams p = init_params(1, 1, 3);
  OptimState state = init_optim_state(p, spec);
  state.current_lr = spec.peak_lr;
  const ModelParams before = p;
  const ModelGrads zeros = zero_grads_like(p);
  adamw_step(state, p, zeros, spec);
  CHECK(p.w1 == before.w1);
  CHECK(p.w2 == before.w2);
  CHECK(state.step_counter == 1);

  // First step with gradient g: bias-corrected direction is g/(|g|+eps).
  p = init_params(1, 1, 3);
  state = init_optim_state(p, spec);
  state.current_lr = spec.peak_lr;
  ModelGrads g = zero_grads_like(p);
  g.w1[0] = -0.37;
  const double w_before = p.w1[0];
  adamw_step(state, p, g, spec);
  const double expected = w_before - spec.peak_lr * (-0.37 / (std::abs(-0.37) + spec.adam_eps));
  CHECK(p.w1[0] == doctest::Approx(expected).epsilon(1e-12));

  // Decoupled decay in isolation: zero grads scale params by (1 - lr*wd).
  spec.weight_decay = 0.01;
  p = init_params(1, 1, 3);
  state = init_optim_state(p, spec);
  state.current_lr = 0.5;
  const double w0 = p.w1[0];
  adamw_step(state, p, zeros, spec);
  CHECK(p.w1[0] == doctest::Approx(w0 * (1.0 - 0.5 * 0.01)).epsilon(1e-12));
  adamw_step(state, p, zeros, spec);
  CHECK(p.w1[0] == doctest::Approx(w0 * (1.0 - 0.5 * 0.01) * (1.0 - 0.5 * 0.01)).epsilon(1e-12));
}

TEST_CASE("adamw_step: beta -> 0 degenerates to normalized gradient descent") {
  OptimSpec spec;
  spec.kind = OptimKind::AdamW;
  spec.beta1 = 0.0;
  spec.beta2 = 0.0;
  spec.weight_decay = 0.0;
  spec.adam_eps = 1e-12;
  ModelParams p = init_params(1, 1, 11);
  OptimState state = init_optim_state(p, spec);
  state.current_lr = 0.01;
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int it = 0; it < 20; ++it) {
    ModelGrads g = zero_grads_like(p);
    g.w1[0] = u(rng);
    const double before = p.w1[0];
    adamw_step(state, p, g, spec);
    const double step = before - p.w1[0];
    CHECK(step * g.w1[0] >= 0.0);  // sign-preserving
    CHECK(std::abs(step) == doctest::Approx(0.01).epsilon(1e-6));
  }
}

TEST_CASE("sgd_step and shrink_on_epoch") {
  ModelParams p = init_params(2, 2, 1);
  const ModelParams before = p;
  sgd_step(p, zero_grads_like(p), 0.1);
  CHECK(p.w1 == before.w1);

  ModelParams scalar = init_params(1, 1, 5);
  scalar.w1[0] = 0.0;
  ModelGrads g = zero_grads_like(scalar);
  g.w1[0] = 1.0;
  sgd_step(scalar, g, 0.1);
  CHECK(scalar.w1[0] == doctest::Approx(-0.1).epsilon(1e-15));

  // Two half-steps at lr/2 with fixed grads equal one full step.
  ModelParams a = init_params(1, 1, 6);
  ModelParams b = a;
  sgd_step(a, g, 0.1);
  sgd_step(b, g, 0.05);
  sgd_step(b, g, 0.05);
  CHECK(a.w1[0] == doctest::Approx(b.w1[0]).epsilon(1e-15));

  CHECK(shrink_on_epoch(0.1, 5.0) == doctest::Approx(0.02).epsilon(1e-15));
  CHECK(shrink_on_epoch(0.37, 1.0) == 0.37);
  double lr = 0.1;
  for (int k = 1; k <= 4; ++k) {
    lr = shrink_on_epoch(lr, 5.0);
    CHECK(lr == doctest::Approx(0.1 / std::pow(5.0, k)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(shrink_on_epoch(0.1, 0.5), std::invalid_argument);
}

TEST_CASE("OptimSpec validation") {
  OptimSpec ok;
  CHECK_NOTHROW(ok.validate());
  OptimSpec bad = ok;
  bad.beta1 = 1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = ok;
  bad.batch_size = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = ok;
  bad.clip_norm = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = ok;
  bad.warmup_fraction = 1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
