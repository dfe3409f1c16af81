#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sclab {

enum class LossKind { CrossEntropy, Focal, DebiasedFocal, ProductOfExperts };
enum class Reduction { Mean, Sum };

// Selects the training loss. gamma is the focusing parameter: 0 recovers
// plain cross-entropy, larger values suppress well-classified samples.
struct LossSpec {
  LossKind kind = LossKind::CrossEntropy;
  double gamma = 0.0;
  double clamp_eps = 1e-12;  // numerical floor inside logs and modulators
  Reduction reduction = Reduction::Mean;

  void validate() const;  // throws std::invalid_argument on bad fields
};

// A categorical distribution over the three classes. Entries are in [0, 1]
// and sum to 1 within 1e-9; construct through make_probs or softmax.
struct ProbVector {
  std::vector<double> v;

  std::size_t size() const { return v.size(); }
  double operator[](std::size_t i) const { return v[i]; }
};

// Validating constructor for externally supplied probability vectors.
ProbVector make_probs(std::vector<double> entries);

// Numerically stable softmax (max-subtraction form). Order-preserving.
ProbVector softmax(std::span<const double> logits);

// -(1 - p_t)^gamma * log(p_t) with p_t = probs[label]. kind must be
// CrossEntropy or Focal; CrossEntropy treats gamma as exactly 0.
double focal_value(const ProbVector& probs, std::size_t label, const LossSpec& spec);

// d focal_value(softmax(z), label) / dz. For gamma = 0 this is exactly the
// cross-entropy gradient p - onehot(label), computed through the same code
// path so CrossEntropy and Focal(0) trajectories agree bitwise.
std::vector<double> focal_grad_logits(std::span<const double> logits, std::size_t label,
                                      const LossSpec& spec);

// -(1 - b_t)^gamma * log(p_t): the modulator comes from a frozen bias
// model, so samples that model already solves are downweighted.
double debiased_focal_value(const ProbVector& probs, std::size_t label,
                            const ProbVector& bias_probs, const LossSpec& spec);

std::vector<double> debiased_focal_grad_logits(std::span<const double> logits, std::size_t label,
                                               const ProbVector& bias_probs,
                                               const LossSpec& spec);

// Elementwise product of the two distributions, renormalized to sum 1.
// Training-time combination only; evaluation always uses main_probs alone.
ProbVector product_of_experts(const ProbVector& main_probs, const ProbVector& bias_probs);

// Cross-entropy of the product-of-experts combination, as a function of the
// main model's logits (the bias expert is frozen).
double poe_value(std::span<const double> logits, std::size_t label, const ProbVector& bias_probs,
                 const LossSpec& spec);

std::vector<double> poe_grad_logits(std::span<const double> logits, std::size_t label,
                                    const ProbVector& bias_probs, const LossSpec& spec);

double batch_reduce(std::span<const double> values, Reduction reduction);

// Value and gradient in one evaluation, writing into a reusable buffer.
// The training loop calls this once per sample.
double loss_value_grad(const LossSpec& spec, std::span<const double> logits, std::size_t label,
                       const ProbVector* bias_probs, std::vector<double>& grad_out);

// Dispatch helpers used by the trainer. bias_probs may be null unless the
// spec kind requires a bias model.
double loss_value(const LossSpec& spec, std::span<const double> logits, std::size_t label,
                  const ProbVector* bias_probs);
std::vector<double> loss_grad_logits(const LossSpec& spec, std::span<const double> logits,
                                     std::size_t label, const ProbVector* bias_probs);

}  // namespace sclab
