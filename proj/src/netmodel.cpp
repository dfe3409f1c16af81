#include "sclab/netmodel.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "sclab/rng.hpp"

namespace sclab {

namespace {

void check_finite(const std::vector<double>& v, const char* name) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw std::invalid_argument(std::string("ModelParams: non-finite entry in ") + name);
    }
  }
}

}  // namespace

void ModelParams::validate() const {
  if (input_dim <= 0 || hidden_dim <= 0) {
    throw std::invalid_argument("ModelParams: dimensions must be positive");
  }
  const auto h = static_cast<std::size_t>(hidden_dim);
  const auto in = static_cast<std::size_t>(input_dim);
  if (w1.size() != h * in || b1.size() != h ||
      w2.size() != static_cast<std::size_t>(kNumClasses) * h ||
      b2.size() != static_cast<std::size_t>(kNumClasses)) {
    throw std::invalid_argument("ModelParams: inconsistent shapes");
  }
  check_finite(w1, "w1");
  check_finite(b1, "b1");
  check_finite(w2, "w2");
  check_finite(b2, "b2");
}

void ModelGrads::zero() {
  std::fill(w1.begin(), w1.end(), 0.0);
  std::fill(b1.begin(), b1.end(), 0.0);
  std::fill(w2.begin(), w2.end(), 0.0);
  std::fill(b2.begin(), b2.end(), 0.0);
}

void ModelGrads::scale(double s) {
  for (double& x : w1) x *= s;
  for (double& x : b1) x *= s;
  for (double& x : w2) x *= s;
  for (double& x : b2) x *= s;
}

void ModelGrads::add_scaled(const ModelGrads& other, double s) {
  if (other.w1.size() != w1.size() || other.w2.size() != w2.size()) {
    throw std::invalid_argument("ModelGrads: shape mismatch in add_scaled");
  }
  for (std::size_t i = 0; i < w1.size(); ++i) w1[i] += s * other.w1[i];
  for (std::size_t i = 0; i < b1.size(); ++i) b1[i] += s * other.b1[i];
  for (std::size_t i = 0; i < w2.size(); ++i) w2[i] += s * other.w2[i];
  for (std::size_t i = 0; i < b2.size(); ++i) b2[i] += s * other.b2[i];
}

ModelGrads zero_grads_like(const ModelParams& params) {
  ModelGrads g;
  g.input_dim = params.input_dim;
  g.hidden_dim = params.hidden_dim;
  g.w1.assign(params.w1.size(), 0.0);
  g.b1.assign(params.b1.size(), 0.0);
  g.w2.assign(params.w2.size(), 0.0);
  g.b2.assign(params.b2.size(), 0.0);
  return g;
}

ModelParams init_params(int input_dim, int hidden_dim, std::uint64_t seed, View view) {
  if (input_dim <= 0 || hidden_dim <= 0) {
    throw std::invalid_argument("init_params: dimensions must be positive");
  }
  ModelParams p;
  p.input_dim = input_dim;
  p.hidden_dim = hidden_dim;
  p.view = view;
  Rng rng(seed);
  const double r1 = 1.0 / std::sqrt(static_cast<double>(input_dim));
  const double r2 = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
  std::uniform_real_distribution<double> u1(-r1, r1);
  std::uniform_real_distribution<double> u2(-r2, r2);
  p.w1.resize(static_cast<std::size_t>(hidden_dim) * input_dim);
  for (double& w : p.w1) w = u1(rng);
  p.b1.assign(hidden_dim, 0.0);
  p.w2.resize(static_cast<std::size_t>(kNumClasses) * hidden_dim);
  for (double& w : p.w2) w = u2(rng);
  p.b2.assign(kNumClasses, 0.0);
  return p;
}

void forward(const ModelParams& params, std::span<const double> x, ForwardCache& cache,
             std::vector<double>& logits) {
  const int in = params.input_dim;
  const int h = params.hidden_dim;
  if (static_cast<int>(x.size()) != in) {
    throw std::invalid_argument("forward: input has dim " + std::to_string(x.size()) +
                                ", model expects " + std::to_string(in));
  }
  cache.input.assign(x.begin(), x.end());
  cache.hidden.resize(h);
  for (int j = 0; j < h; ++j) {
    const double* row = params.w1.data() + static_cast<std::size_t>(j) * in;
    double acc = params.b1[j];
    for (int i = 0; i < in; ++i) acc += row[i] * x[i];
    cache.hidden[j] = std::tanh(acc);
  }
  logits.resize(kNumClasses);
  for (int c = 0; c < kNumClasses; ++c) {
    const double* row = params.w2.data() + static_cast<std::size_t>(c) * h;
    double acc = params.b2[c];
    for (int j = 0; j < h; ++j) acc += row[j] * cache.hidden[j];
    logits[c] = acc;
  }
}

std::vector<double> forward(const ModelParams& params, std::span<const double> x) {
  ForwardCache cache;
  std::vector<double> logits;
  forward(params, x, cache, logits);
  return logits;
}

void backward_accumulate(const ModelParams& params, const ForwardCache& cache,
                         std::span<const double> grad_logits, ModelGrads& grads) {
  const int in = params.input_dim;
  const int h = params.hidden_dim;
  if (static_cast<int>(cache.input.size()) != in ||
      static_cast<int>(cache.hidden.size()) != h) {
    throw std::invalid_argument("backward: cache does not match model shapes");
  }
  if (static_cast<int>(grad_logits.size()) != kNumClasses) {
    throw std::invalid_argument("backward: grad_logits must have one entry per class");
  }
  if (grads.w1.size() != params.w1.size() || grads.w2.size() != params.w2.size()) {
    throw std::invalid_argument("backward: gradient buffer shape mismatch");
  }
  // dL/dw2, dL/db2 and the backpropagated hidden gradient in one pass.
  // Scratch reused across calls; backward runs once per sample in training.
  thread_local std::vector<double> ghid;
  ghid.assign(h, 0.0);
  double* gh = ghid.data();
  for (int c = 0; c < kNumClasses; ++c) {
    const double gl = grad_logits[c];
    grads.b2[c] += gl;
    const double* w2row = params.w2.data() + static_cast<std::size_t>(c) * h;
    double* gw2row = grads.w2.data() + static_cast<std::size_t>(c) * h;
    for (int j = 0; j < h; ++j) {
      gw2row[j] += gl * cache.hidden[j];
      gh[j] += gl * w2row[j];
    }
  }
  // tanh' = 1 - tanh^2
  for (int j = 0; j < h; ++j) {
    const double t = cache.hidden[j];
    const double gpre = gh[j] * (1.0 - t * t);
    grads.b1[j] += gpre;
    double* gw1row = grads.w1.data() + static_cast<std::size_t>(j) * in;
    const double* xin = cache.input.data();
    for (int i = 0; i < in; ++i) gw1row[i] += gpre * xin[i];
  }
}

ModelGrads backward(const ModelParams& params, const ForwardCache& cache,
                    std::span<const double> grad_logits) {
  ModelGrads g = zero_grads_like(params);
  backward_accumulate(params, cache, grad_logits, g);
  return g;
}

void apply_view(std::span<const double> genuine, std::span<const double> shortcut, View view,
                std::vector<double>& out) {
  if (view == View::ShortcutOnly) {
    out.assign(shortcut.begin(), shortcut.end());
    return;
  }
  out.resize(genuine.size() + shortcut.size());
  std::copy(genuine.begin(), genuine.end(), out.begin());
  std::copy(shortcut.begin(), shortcut.end(), out.begin() + genuine.size());
}

std::vector<double> apply_view(std::span<const double> genuine, std::span<const double> shortcut,
                               View view) {
  std::vector<double> out;
  apply_view(genuine, shortcut, view, out);
  return out;
}

int view_input_dim(int d_g, int d_s, View view) {
  return view == View::Full ? d_g + d_s : d_s;
}

}  // namespace sclab
