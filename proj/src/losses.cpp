#include "sclab/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace sclab {

namespace {

void check_label(std::size_t label, std::size_t n) {
  if (label >= n) {
    throw std::invalid_argument("loss: label " + std::to_string(label) +
                                " out of range for " + std::to_string(n) + " classes");
  }
}

void check_probs(const ProbVector& probs, const char* who) {
  double sum = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = probs[i];
    if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
      throw std::invalid_argument(std::string(who) + ": entry " + std::to_string(i) +
                                  " is not a probability");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument(std::string(who) + ": entries sum to " + std::to_string(sum));
  }
}

double clamp_prob(double p, double eps) { return std::clamp(p, eps, 1.0); }

// d/dp [ -(1-p)^g log p ] with the floor rules from LossSpec. Callers
// handle g == 0 separately (exact cross-entropy path).
double focal_dvalue_dp(double p, double gamma, double eps) {
  const double base = 1.0 - p;
  if (base <= eps) return 0.0;  // analytic limit as p -> 1 for gamma > 0
  const double p_log = clamp_prob(p, eps);
  const double pow_gm1 = std::pow(gamma < 1.0 ? std::max(base, eps) : base, gamma - 1.0);
  return gamma * pow_gm1 * std::log(p_log) - std::pow(base, gamma) / p_log;
}

std::vector<double> ce_grad(const ProbVector& probs, std::size_t label) {
  std::vector<double> g(probs.v);
  g[label] -= 1.0;
  return g;
}

// Chain rule through softmax: dp_t/dz_j = p_t (delta_tj - p_j).
std::vector<double> chain_through_softmax(const ProbVector& probs, std::size_t label,
                                          double dvalue_dp) {
  const double pt = probs[label];
  std::vector<double> g(probs.size());
  for (std::size_t j = 0; j < probs.size(); ++j) {
    const double dp_dz = pt * ((j == label ? 1.0 : 0.0) - probs[j]);
    g[j] = dvalue_dp * dp_dz;
  }
  return g;
}

}  // namespace

void LossSpec::validate() const {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
    throw std::invalid_argument("LossSpec: gamma must be a finite nonnegative real");
  }
  if (!(clamp_eps > 0.0) || !(clamp_eps <= 1e-3)) {
    throw std::invalid_argument("LossSpec: clamp_eps must lie in (0, 1e-3]");
  }
}

ProbVector make_probs(std::vector<double> entries) {
  ProbVector p{std::move(entries)};
  check_probs(p, "make_probs");
  return p;
}

ProbVector softmax(std::span<const double> logits) {
  if (logits.size() < 2) {
    throw std::invalid_argument("softmax: need at least 2 logits");
  }
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (!std::isfinite(logits[i])) {
      throw std::invalid_argument("softmax: non-finite logit at index " + std::to_string(i));
    }
  }
  const double m = *std::max_element(logits.begin(), logits.end());
  ProbVector out;
  out.v.resize(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out.v[i] = std::exp(logits[i] - m);
    sum += out.v[i];
  }
  for (double& p : out.v) p /= sum;
  return out;
}

double focal_value(const ProbVector& probs, std::size_t label, const LossSpec& spec) {
  if (spec.kind != LossKind::CrossEntropy && spec.kind != LossKind::Focal) {
    throw std::invalid_argument("focal_value: spec.kind must be CrossEntropy or Focal");
  }
  check_probs(probs, "focal_value");
  check_label(label, probs.size());
  const double gamma = spec.kind == LossKind::CrossEntropy ? 0.0 : spec.gamma;
  const double p = probs[label];
  const double log_term = -std::log(clamp_prob(p, spec.clamp_eps));
  if (gamma == 0.0) return log_term;
  // For gamma < 1 the gradient needs (1-p) floored away from zero; the value
  // uses the same clamped base so value and gradient stay consistent.
  const double base = gamma < 1.0 ? std::max(1.0 - p, spec.clamp_eps) : 1.0 - p;
  return std::pow(base, gamma) * log_term;
}

std::vector<double> focal_grad_logits(std::span<const double> logits, std::size_t label,
                                      const LossSpec& spec) {
  if (spec.kind != LossKind::CrossEntropy && spec.kind != LossKind::Focal) {
    throw std::invalid_argument("focal_grad_logits: spec.kind must be CrossEntropy or Focal");
  }
  const ProbVector probs = softmax(logits);
  check_label(label, probs.size());
  const double gamma = spec.kind == LossKind::CrossEntropy ? 0.0 : spec.gamma;
  if (gamma == 0.0) return ce_grad(probs, label);
  const double pt = probs[label];
  if (1.0 - pt <= spec.clamp_eps) return std::vector<double>(probs.size(), 0.0);
  return chain_through_softmax(probs, label, focal_dvalue_dp(pt, gamma, spec.clamp_eps));
}

double debiased_focal_value(const ProbVector& probs, std::size_t label,
                            const ProbVector& bias_probs, const LossSpec& spec) {
  if (spec.kind != LossKind::DebiasedFocal) {
    throw std::invalid_argument("debiased_focal_value: spec.kind must be DebiasedFocal");
  }
  if (probs.size() != bias_probs.size()) {
    throw std::invalid_argument("debiased_focal_value: probability vector lengths differ");
  }
  check_probs(probs, "debiased_focal_value");
  check_probs(bias_probs, "debiased_focal_value(bias)");
  check_label(label, probs.size());
  const double log_term = -std::log(clamp_prob(probs[label], spec.clamp_eps));
  if (spec.gamma == 0.0) return log_term;
  const double b = std::clamp(bias_probs[label], spec.clamp_eps, 1.0 - spec.clamp_eps);
  return std::pow(1.0 - b, spec.gamma) * log_term;
}

std::vector<double> debiased_focal_grad_logits(std::span<const double> logits, std::size_t label,
                                               const ProbVector& bias_probs,
                                               const LossSpec& spec) {
  if (spec.kind != LossKind::DebiasedFocal) {
    throw std::invalid_argument("debiased_focal_grad_logits: spec.kind must be DebiasedFocal");
  }
  const ProbVector probs = softmax(logits);
  if (probs.size() != bias_probs.size()) {
    throw std::invalid_argument("debiased_focal_grad_logits: vector lengths differ");
  }
  check_label(label, probs.size());
  // The modulator depends on the frozen bias model only, so the gradient is
  // the cross-entropy gradient scaled by the sample weight.
  std::vector<double> g = ce_grad(probs, label);
  if (spec.gamma != 0.0) {
    const double b = std::clamp(bias_probs[label], spec.clamp_eps, 1.0 - spec.clamp_eps);
    const double w = std::pow(1.0 - b, spec.gamma);
    for (double& x : g) x *= w;
  }
  return g;
}

ProbVector product_of_experts(const ProbVector& main_probs, const ProbVector& bias_probs) {
  if (main_probs.size() != bias_probs.size()) {
    throw std::invalid_argument("product_of_experts: vector lengths differ");
  }
  check_probs(main_probs, "product_of_experts(main)");
  check_probs(bias_probs, "product_of_experts(bias)");
  const double eps2 = 1e-12 * 1e-12;
  ProbVector out;
  out.v.resize(main_probs.size());
  double sum = 0.0;
  bool degenerate = true;
  for (std::size_t i = 0; i < main_probs.size(); ++i) {
    out.v[i] = main_probs[i] * bias_probs[i];
    if (out.v[i] >= eps2) degenerate = false;
    sum += out.v[i];
  }
  if (degenerate) {
    throw std::invalid_argument(
        "product_of_experts: degenerate product, all entries below clamp_eps^2");
  }
  for (double& p : out.v) p /= sum;
  return out;
}

double poe_value(std::span<const double> logits, std::size_t label, const ProbVector& bias_probs,
                 const LossSpec& spec) {
  if (spec.kind != LossKind::ProductOfExperts) {
    throw std::invalid_argument("poe_value: spec.kind must be ProductOfExperts");
  }
  if (logits.size() != bias_probs.size()) {
    throw std::invalid_argument("poe_value: vector lengths differ");
  }
  check_label(label, logits.size());
  // log-space route: softmax(z + log b) equals the renormalized product.
  std::vector<double> combined(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    combined[i] = logits[i] + std::log(clamp_prob(bias_probs[i], spec.clamp_eps));
  }
  const ProbVector p = softmax(combined);
  return -std::log(clamp_prob(p[label], spec.clamp_eps));
}

std::vector<double> poe_grad_logits(std::span<const double> logits, std::size_t label,
                                    const ProbVector& bias_probs, const LossSpec& spec) {
  if (spec.kind != LossKind::ProductOfExperts) {
    throw std::invalid_argument("poe_grad_logits: spec.kind must be ProductOfExperts");
  }
  if (logits.size() != bias_probs.size()) {
    throw std::invalid_argument("poe_grad_logits: vector lengths differ");
  }
  check_label(label, logits.size());
  std::vector<double> combined(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    combined[i] = logits[i] + std::log(clamp_prob(bias_probs[i], spec.clamp_eps));
  }
  return ce_grad(softmax(combined), label);
}

double batch_reduce(std::span<const double> values, Reduction reduction) {
  if (values.empty()) {
    throw std::invalid_argument("batch_reduce: empty batch");
  }
  double sum = 0.0;
  for (double v : values) sum += v;
  return reduction == Reduction::Sum ? sum : sum / static_cast<double>(values.size());
}

double loss_value_grad(const LossSpec& spec, std::span<const double> logits, std::size_t label,
                       const ProbVector* bias_probs, std::vector<double>& grad_out) {
  switch (spec.kind) {
    case LossKind::CrossEntropy:
    case LossKind::Focal: {
      const ProbVector probs = softmax(logits);
      check_label(label, probs.size());
      const double gamma = spec.kind == LossKind::CrossEntropy ? 0.0 : spec.gamma;
      const double pt = probs[label];
      const double log_term = -std::log(clamp_prob(pt, spec.clamp_eps));
      if (gamma == 0.0) {
        grad_out = probs.v;
        grad_out[label] -= 1.0;
        return log_term;
      }
      if (1.0 - pt <= spec.clamp_eps) {
        grad_out.assign(probs.size(), 0.0);
        const double base = gamma < 1.0 ? std::max(1.0 - pt, spec.clamp_eps) : 1.0 - pt;
        return std::pow(base, gamma) * log_term;
      }
      const double dv = focal_dvalue_dp(pt, gamma, spec.clamp_eps);
      grad_out.resize(probs.size());
      for (std::size_t j = 0; j < probs.size(); ++j) {
        grad_out[j] = dv * pt * ((j == label ? 1.0 : 0.0) - probs[j]);
      }
      const double base = gamma < 1.0 ? std::max(1.0 - pt, spec.clamp_eps) : 1.0 - pt;
      return std::pow(base, gamma) * log_term;
    }
    case LossKind::DebiasedFocal: {
      if (bias_probs == nullptr) {
        throw std::invalid_argument("loss_value_grad: DebiasedFocal requires bias probabilities");
      }
      const ProbVector probs = softmax(logits);
      check_label(label, probs.size());
      const double log_term = -std::log(clamp_prob(probs[label], spec.clamp_eps));
      double w = 1.0;
      if (spec.gamma != 0.0) {
        const double b =
            std::clamp((*bias_probs)[label], spec.clamp_eps, 1.0 - spec.clamp_eps);
        w = std::pow(1.0 - b, spec.gamma);
      }
      grad_out = probs.v;
      grad_out[label] -= 1.0;
      for (double& x : grad_out) x *= w;
      return w * log_term;
    }
    case LossKind::ProductOfExperts: {
      if (bias_probs == nullptr) {
        throw std::invalid_argument(
            "loss_value_grad: ProductOfExperts requires bias probabilities");
      }
      check_label(label, logits.size());
      thread_local std::vector<double> combined;
      combined.resize(logits.size());
      for (std::size_t i = 0; i < logits.size(); ++i) {
        combined[i] = logits[i] + std::log(clamp_prob((*bias_probs)[i], spec.clamp_eps));
      }
      const ProbVector p = softmax(combined);
      grad_out = p.v;
      grad_out[label] -= 1.0;
      return -std::log(clamp_prob(p[label], spec.clamp_eps));
    }
  }
  throw std::logic_error("loss_value_grad: unknown loss kind");
}

double loss_value(const LossSpec& spec, std::span<const double> logits, std::size_t label,
                  const ProbVector* bias_probs) {
  switch (spec.kind) {
    case LossKind::CrossEntropy:
    case LossKind::Focal:
      return focal_value(softmax(logits), label, spec);
    case LossKind::DebiasedFocal:
      if (bias_probs == nullptr) {
        throw std::invalid_argument("loss_value: DebiasedFocal requires bias probabilities");
      }
      return debiased_focal_value(softmax(logits), label, *bias_probs, spec);
    case LossKind::ProductOfExperts:
      if (bias_probs == nullptr) {
        throw std::invalid_argument("loss_value: ProductOfExperts requires bias probabilities");
      }
      return poe_value(logits, label, *bias_probs, spec);
  }
  throw std::logic_error("loss_value: unknown loss kind");
}

std::vector<double> loss_grad_logits(const LossSpec& spec, std::span<const double> logits,
                                     std::size_t label, const ProbVector* bias_probs) {
  switch (spec.kind) {
    case LossKind::CrossEntropy:
    case LossKind::Focal:
      return focal_grad_logits(logits, label, spec);
    case LossKind::DebiasedFocal:
      if (bias_probs == nullptr) {
        throw std::invalid_argument("loss_grad_logits: DebiasedFocal requires bias probabilities");
      }
      return debiased_focal_grad_logits(logits, label, *bias_probs, spec);
    case LossKind::ProductOfExperts:
      if (bias_probs == nullptr) {
        throw std::invalid_argument(
            "loss_grad_logits: ProductOfExperts requires bias probabilities");
      }
      return poe_grad_logits(logits, label, *bias_probs, spec);
  }
  throw std::logic_error("loss_grad_logits: unknown loss kind");
}

}  // namespace sclab
