#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace sclab {

inline constexpr int kNumClasses = 3;

// Full sees genuine + shortcut features concatenated; ShortcutOnly sees the
// shortcut block alone and stands in for a hypothesis-only shallow model.
enum class View { Full, ShortcutOnly };

// Weights of the two-layer tanh classifier. Matrices are row-major:
// w1[h * input_dim + i], w2[c * hidden_dim + h].
struct ModelParams {
  std::vector<double> w1, b1, w2, b2;
  int input_dim = 0;
  int hidden_dim = 0;
  View view = View::Full;

  void validate() const;
};

struct ModelGrads {
  std::vector<double> w1, b1, w2, b2;
  int input_dim = 0;
  int hidden_dim = 0;

  void zero();
  void scale(double s);
  void add_scaled(const ModelGrads& other, double s);
};

ModelGrads zero_grads_like(const ModelParams& params);

// Weights uniform in +-1/sqrt(fan_in), biases zero, fully determined by seed.
ModelParams init_params(int input_dim, int hidden_dim, std::uint64_t seed,
                        View view = View::Full);

// Activations retained for the backward pass.
struct ForwardCache {
  std::vector<double> input;
  std::vector<double> hidden;  // tanh(w1 x + b1)
};

// logits = w2 tanh(w1 x + b1) + b2. Reuses the caller's buffers.
void forward(const ModelParams& params, std::span<const double> x, ForwardCache& cache,
             std::vector<double>& logits);

// Convenience form used outside hot loops.
std::vector<double> forward(const ModelParams& params, std::span<const double> x);

// Accumulates the exact gradients of grad_logits . logits into grads.
void backward_accumulate(const ModelParams& params, const ForwardCache& cache,
                         std::span<const double> grad_logits, ModelGrads& grads);

// Fresh-gradient form of the backward pass.
ModelGrads backward(const ModelParams& params, const ForwardCache& cache,
                    std::span<const double> grad_logits);

// Projects an example's feature blocks onto the model input for a view:
// Full concatenates genuine + shortcut, ShortcutOnly passes shortcut alone.
std::vector<double> apply_view(std::span<const double> genuine, std::span<const double> shortcut,
                               View view);
void apply_view(std::span<const double> genuine, std::span<const double> shortcut, View view,
                std::vector<double>& out);

int view_input_dim(int d_g, int d_s, View view);

}  // namespace sclab
