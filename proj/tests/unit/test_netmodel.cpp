#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "sclab/losses.hpp"
#include "sclab/netmodel.hpp"

using namespace sclab;

namespace {

// Straight-line recomputation of the forward pass at extended precision.
std::vector<double> forward_oracle(const ModelParams& p, const std::vector<double>& x) {
  std::vector<long double> hidden(p.hidden_dim);
  for (int j = 0; j < p.hidden_dim; ++j) {
    long double acc = p.b1[j];
    for (int i = 0; i < p.input_dim; ++i) {
      acc += static_cast<long double>(p.w1[j * p.input_dim + i]) * x[i];
    }
    hidden[j] = std::tanh(acc);
  }
  std::vector<double> logits(kNumClasses);
  for (int c = 0; c < kNumClasses; ++c) {
    long double acc = p.b2[c];
    for (int j = 0; j < p.hidden_dim; ++j) {
      acc += static_cast<long double>(p.w2[c * p.hidden_dim + j]) * hidden[j];
    }
    logits[c] = static_cast<double>(acc);
  }
  return logits;
}

double loss_of(const ModelParams& p, const std::vector<double>& x, std::size_t label,
               const LossSpec& spec, const ProbVector* bias) {
  return loss_value(spec, forward(p, x), label, bias);
}

// Finite differences over every parameter entry.
void check_param_grads(const ModelParams& params, const std::vector<double>& x, std::size_t label,
                       const LossSpec& spec, const ProbVector* bias) {
  ForwardCache cache;
  std::vector<double> logits;
  forward(params, x, cache, logits);
  std::vector<double> grad_logits;
  loss_value_grad(spec, logits, label, bias, grad_logits);
  const ModelGrads grads = backward(params, cache, grad_logits);

  const double h = 1e-6;
  auto check_array = [&](const std::vector<double> ModelParams::* field,
                         const std::vector<double>& got) {
    ModelParams probe = params;
    for (std::size_t i = 0; i < (probe.*field).size(); ++i) {
      ModelParams plus = params, minus = params;
      (plus.*field)[i] += h;
      (minus.*field)[i] -= h;
      const double fd =
          (loss_of(plus, x, label, spec, bias) - loss_of(minus, x, label, spec, bias)) / (2 * h);
      if (std::abs(fd) < 1e-4) {
        CHECK(std::abs(got[i] - fd) < 1e-8);
      } else {
        CHECK(std::abs(got[i] - fd) / std::abs(fd) < 1e-5);
      }
    }
  };
  check_array(&ModelParams::w1, grads.w1);
  check_array(&ModelParams::b1, grads.b1);
  check_array(&ModelParams::w2, grads.w2);
  check_array(&ModelParams::b2, grads.b2);
}

}  // namespace

TEST_CASE("init_params: determinism, shapes and non-degeneracy") {
  const ModelParams a = init_params(24, 64, 42);
  const ModelParams b = init_params(24, 64, 42);
  CHECK(a.w1 == b.w1);
  CHECK(a.b1 == b.b1);
  CHECK(a.w2 == b.w2);
  CHECK(a.b2 == b.b2);

  CHECK(a.w1.size() == 64u * 24u);
  CHECK(a.b1.size() == 64u);
  CHECK(a.w2.size() == 3u * 64u);
  CHECK(a.b2.size() == 3u);
  for (double x : a.b1) CHECK(x == 0.0);
  const double bound = 1.0 / std::sqrt(24.0);
  for (double w : a.w1) CHECK(std::abs(w) <= bound);

  const ModelParams c = init_params(24, 64, 43);
  CHECK(a.w1 != c.w1);

  CHECK_THROWS_AS(init_params(0, 4, 1), std::invalid_argument);
  CHECK_THROWS_AS(init_params(4, 0, 1), std::invalid_argument);
}

TEST_CASE("forward: degenerate parameter shapes") {
  ModelParams p;
  p.input_dim = 4;
  p.hidden_dim = 5;
  p.w1.assign(20, 0.0);
  p.b1.assign(5, 0.0);
  p.w2.assign(15, 0.0);
  p.b2.assign(3, 0.0);
  const std::vector<double> x = {1.0, -2.0, 3.0, 0.5};

  auto logits = forward(p, x);
  for (double z : logits) CHECK(z == 0.0);

  p.b2 = {1.0, 2.0, 3.0};
  logits = forward(p, x);
  CHECK(logits == std::vector<double>{1.0, 2.0, 3.0});
  logits = forward(p, std::vector<double>{9.0, 9.0, 9.0, 9.0});
  CHECK(logits == std::vector<double>{1.0, 2.0, 3.0});

  CHECK_THROWS_AS(forward(p, std::vector<double>{1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("forward: purity and extended-precision oracle") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int it = 0; it < 20; ++it) {
    const ModelParams p = init_params(6, 8, 100 + it);
    std::vector<double> x(6);
    for (double& v : x) v = u(rng);
    const auto a = forward(p, x);
    const auto b = forward(p, x);
    CHECK(a == b);
    const auto oracle = forward_oracle(p, x);
    for (int c = 0; c < kNumClasses; ++c) {
      CHECK(a[c] == doctest::Approx(oracle[c]).epsilon(1e-13));
    }
  }
}

TEST_CASE("backward: zero upstream gradient and cache validation") {
  const ModelParams p = init_params(4, 6, 1);
  ForwardCache cache;
  std::vector<double> logits;
  forward(p, std::vector<double>{0.1, 0.2, 0.3, 0.4}, cache, logits);

  const ModelGrads g = backward(p, cache, std::vector<double>{0.0, 0.0, 0.0});
  for (double v : g.w1) CHECK(v == 0.0);
  for (double v : g.w2) CHECK(v == 0.0);

  const ModelParams other = init_params(5, 6, 1);
  CHECK_THROWS_AS(backward(other, cache, std::vector<double>{0.0, 0.0, 0.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(backward(p, cache, std::vector<double>{0.0, 0.0}), std::invalid_argument);
}

TEST_CASE("backward: end-to-end finite differences on a 4x3 model, every loss kind") {
  const ModelParams params = init_params(3, 4, 7);
  const std::vector<double> x = {0.3, -1.2, 0.8};
  const ProbVector bias = make_probs({0.5, 0.2, 0.3});

  for (double gamma : {0.0, 0.5, 1.0, 2.0, 5.0, 10.0}) {
    LossSpec spec;
    spec.kind = LossKind::Focal;
    spec.gamma = gamma;
    check_param_grads(params, x, 1, spec, nullptr);
  }
  {
    LossSpec spec;  // CrossEntropy
    check_param_grads(params, x, 0, spec, nullptr);
  }
  {
    LossSpec spec;
    spec.kind = LossKind::DebiasedFocal;
    spec.gamma = 2.0;
    check_param_grads(params, x, 2, spec, &bias);
  }
  {
    LossSpec spec;
    spec.kind = LossKind::ProductOfExperts;
    check_param_grads(params, x, 1, spec, &bias);
  }
}

TEST_CASE("backward: duplicated rows average to the single-row gradient") {
  const ModelParams p = init_params(3, 4, 9);
  const std::vector<double> x = {0.5, 0.1, -0.7};
  ForwardCache cache;
  std::vector<double> logits;
  forward(p, x, cache, logits);
  LossSpec spec;
  spec.kind = LossKind::Focal;
  spec.gamma = 2.0;
  std::vector<double> gl;
  loss_value_grad(spec, logits, 0, nullptr, gl);

  const ModelGrads single = backward(p, cache, gl);
  ModelGrads batch = zero_grads_like(p);
  backward_accumulate(p, cache, gl, batch);
  backward_accumulate(p, cache, gl, batch);
  batch.scale(0.5);
  for (std::size_t i = 0; i < single.w1.size(); ++i) {
    CHECK(batch.w1[i] == doctest::Approx(single.w1[i]).epsilon(1e-14));
  }
  for (std::size_t i = 0; i < single.w2.size(); ++i) {
    CHECK(batch.w2[i] == doctest::Approx(single.w2[i]).epsilon(1e-14));
  }
}

TEST_CASE("apply_view: concatenation and masking") {
  std::vector<double> g(16), s(8);
  for (int i = 0; i < 16; ++i) g[i] = i;
  for (int i = 0; i < 8; ++i) s[i] = 100 + i;

  const auto full = apply_view(g, s, View::Full);
  CHECK(full.size() == 24u);
  CHECK(full[0] == 0.0);
  CHECK(full[16] == 100.0);

  const auto shortcut = apply_view(g, s, View::ShortcutOnly);
  CHECK(shortcut == s);

  std::vector<double> g2 = g;
  for (double& v : g2) v += 17.5;
  CHECK(apply_view(g2, s, View::ShortcutOnly) == shortcut);

  CHECK(view_input_dim(16, 8, View::Full) == 24);
  CHECK(view_input_dim(16, 8, View::ShortcutOnly) == 8);
}
