#include "sclab/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "sclab/rng.hpp"
#include "sclab/version.hpp"

namespace sclab {

namespace {

// Separation of the planted genuine-feature class means. With the default
// noise_sigma = 1 this puts a genuine-only classifier in the 85-90%
// accuracy band, keeping the shortcut channel the easier signal.
constexpr double kGenuineMeanScale = 1.7;

// Sub-seed streams drawn from GenSpec.seed.
enum Stream : std::uint64_t {
  kStreamTrain = 0,
  kStreamValMatched = 1,
  kStreamValMismatched = 2,
  kStreamTest = 3,
  kStreamChallenge = 4,
  kStreamChallengePool = 5,
  kStreamShiftDirs = 6,
};

int block_width(const GenSpec& spec) { return spec.d_s / 3; }

// The firing pattern of a block is a unit vector in its first two entries
// whose angle encodes the suggested class (0, 120, 240 degrees).
void write_pattern(std::vector<double>& shortcut, int block, int width, int suggested_label) {
  static const double kCos[3] = {1.0, -0.5, -0.5};
  static const double kSin[3] = {0.0, 0.8660254037844386, -0.8660254037844386};
  shortcut[static_cast<std::size_t>(block) * width] = kCos[suggested_label];
  shortcut[static_cast<std::size_t>(block) * width + 1] = kSin[suggested_label];
}

std::vector<double> sample_genuine(const std::vector<double>& mean, double sigma, Rng& rng) {
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> g(mean.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = mean[i] + sigma * noise(rng);
  return g;
}

// In-distribution sampling shared by train, both validation splits and test.
std::vector<Example> sample_split(const GenSpec& spec, int count,
                                  const std::vector<std::vector<double>>& means, Rng& rng) {
  std::uniform_int_distribution<int> label_dist(0, 2);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> kind_dist(0, 2);
  std::uniform_int_distribution<int> offset_dist(1, 2);
  const int width = block_width(spec);
  std::vector<Example> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    Example ex;
    ex.label = label_dist(rng);
    ex.genuine = sample_genuine(means[ex.label], spec.noise_sigma, rng);
    ex.shortcut.assign(spec.d_s, 0.0);
    const double u = unit(rng);
    if (u < spec.bias_rate) {
      write_pattern(ex.shortcut, kind_dist(rng), width, ex.label);
    } else if (u < spec.bias_rate + spec.counterexample_rate) {
      // Misleading fire: the block suggests one of the two wrong classes.
      const int wrong = (ex.label + offset_dist(rng)) % 3;
      write_pattern(ex.shortcut, kind_dist(rng), width, wrong);
    }
    out.push_back(std::move(ex));
  }
  return out;
}

// Challenge cells: the heuristic cue always fires with the entailment
// pattern; Entailed cells pair it with an entailment label, NonEntailed
// cells with neutral/contradiction split evenly. Genuine features keep the
// train-distribution means, so the task stays solvable without shortcuts.
std::vector<Example> sample_challenge(const GenSpec& spec,
                                      const std::vector<std::vector<double>>& means, Rng& rng) {
  const int width = block_width(spec);
  std::vector<Example> out;
  out.reserve(static_cast<std::size_t>(spec.n_challenge_per_cell) * 6);
  for (int kind = 0; kind < 3; ++kind) {
    for (int sub = 0; sub < 2; ++sub) {
      for (int i = 0; i < spec.n_challenge_per_cell; ++i) {
        Example ex;
        ex.heuristic_tag = HeuristicTag{static_cast<HeuristicKind>(kind),
                                        static_cast<Subcase>(sub)};
        ex.label = sub == 0 ? kEntailment : (i % 2 == 0 ? kNeutral : kContradiction);
        ex.genuine = sample_genuine(means[ex.label], spec.noise_sigma, rng);
        ex.shortcut.assign(spec.d_s, 0.0);
        write_pattern(ex.shortcut, kind, width, kEntailment);
        out.push_back(std::move(ex));
      }
    }
  }
  return out;
}

}  // namespace

void GenSpec::validate() const {
  if (d_g < 3) throw std::invalid_argument("GenSpec: d_g must be >= 3");
  if (d_s < 6 || d_s % 3 != 0) {
    throw std::invalid_argument("GenSpec: d_s must be a multiple of 3 with block width >= 2");
  }
  if (n_train < 1 || n_val < 1 || n_test < 1 || n_challenge_per_cell < 1) {
    throw std::invalid_argument("GenSpec: all counts must be >= 1");
  }
  if (!(bias_rate > 0.0) || bias_rate > 1.0) {
    throw std::invalid_argument("GenSpec: bias_rate must lie in (0, 1]");
  }
  if (counterexample_rate < 0.0 || bias_rate + counterexample_rate > 1.0) {
    throw std::invalid_argument(
        "GenSpec: need counterexample_rate >= 0 and bias_rate + counterexample_rate <= 1");
  }
  if (noise_sigma < 0.0) throw std::invalid_argument("GenSpec: noise_sigma must be >= 0");
}

std::vector<double> genuine_class_mean(const GenSpec& spec, int label) {
  if (label < 0 || label >= 3) {
    throw std::invalid_argument("genuine_class_mean: bad label");
  }
  // Three contiguous blocks of d_g, one per class; each mean is a unit
  // direction on its block scaled to kGenuineMeanScale.
  const int lo = label * spec.d_g / 3;
  const int hi = (label + 1) * spec.d_g / 3;
  std::vector<double> mean(spec.d_g, 0.0);
  const double v = kGenuineMeanScale / std::sqrt(static_cast<double>(hi - lo));
  for (int i = lo; i < hi; ++i) mean[i] = v;
  return mean;
}

CorpusBundle generate_corpus(const GenSpec& spec) {
  spec.validate();
  std::vector<std::vector<double>> means;
  for (int y = 0; y < 3; ++y) means.push_back(genuine_class_mean(spec, y));

  // Mismatched validation shifts each class mean along a seeded direction.
  std::vector<std::vector<double>> shifted = means;
  {
    Rng rng(mix_seed(spec.seed, kStreamShiftDirs));
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int y = 0; y < 3; ++y) {
      std::vector<double> dir(spec.d_g);
      double norm = 0.0;
      for (double& x : dir) {
        x = gauss(rng);
        norm += x * x;
      }
      norm = std::sqrt(norm);
      for (int i = 0; i < spec.d_g; ++i) {
        shifted[y][i] += spec.mismatch_shift * dir[i] / norm;
      }
    }
  }

  CorpusBundle bundle;
  bundle.gen_spec = spec;
  bundle.version = kCorpusVersion;
  {
    Rng rng(mix_seed(spec.seed, kStreamTrain));
    bundle.train = sample_split(spec, spec.n_train, means, rng);
  }
  {
    Rng rng(mix_seed(spec.seed, kStreamValMatched));
    bundle.val_matched = sample_split(spec, spec.n_val, means, rng);
  }
  {
    Rng rng(mix_seed(spec.seed, kStreamValMismatched));
    bundle.val_mismatched = sample_split(spec, spec.n_val, shifted, rng);
  }
  {
    Rng rng(mix_seed(spec.seed, kStreamTest));
    bundle.test = sample_split(spec, spec.n_test, means, rng);
  }
  {
    Rng rng(mix_seed(spec.seed, kStreamChallenge));
    bundle.challenge = sample_challenge(spec, means, rng);
  }
  {
    Rng rng(mix_seed(spec.seed, kStreamChallengePool));
    bundle.challenge_pool = sample_challenge(spec, means, rng);
  }
  return bundle;
}

CorpusBundle inject_challenge_samples(const CorpusBundle& bundle, int n, std::uint64_t seed) {
  if (n < 0 || n > static_cast<int>(bundle.challenge_pool.size())) {
    throw std::invalid_argument("inject_challenge_samples: n exceeds pool size " +
                                std::to_string(bundle.challenge_pool.size()));
  }
  CorpusBundle out = bundle;
  if (n == 0) return out;
  std::vector<std::size_t> idx(bundle.challenge_pool.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(mix_seed(seed, 0));
  std::shuffle(idx.begin(), idx.end(), rng);
  for (int i = 0; i < n; ++i) {
    Example ex = bundle.challenge_pool[idx[i]];
    ex.heuristic_tag.reset();  // injected samples look like ordinary training rows
    ex.hard.reset();
    out.train.push_back(std::move(ex));
  }
  return out;
}

Subcase collapse_to_binary(int predicted_class) {
  if (predicted_class < 0 || predicted_class >= 3) {
    throw std::invalid_argument("collapse_to_binary: class index out of range");
  }
  return predicted_class == kEntailment ? Subcase::Entailed : Subcase::NonEntailed;
}

bool shortcut_fires(const Example& ex) {
  for (double x : ex.shortcut) {
    if (x != 0.0) return true;
  }
  return false;
}

int heuristic_oracle_predict(const Example& ex, std::uint64_t seed) {
  if (shortcut_fires(ex)) return kEntailment;
  Rng rng(seed);
  return std::uniform_int_distribution<int>(0, 2)(rng);
}

const char* heuristic_kind_name(HeuristicKind kind) {
  switch (kind) {
    case HeuristicKind::LexicalOverlap: return "lexical_overlap";
    case HeuristicKind::Subsequence: return "subsequence";
    case HeuristicKind::Constituent: return "constituent";
  }
  return "?";
}

const char* subcase_name(Subcase subcase) {
  return subcase == Subcase::Entailed ? "entailed" : "non_entailed";
}

const char* label_name(int label) {
  switch (label) {
    case kEntailment: return "entailment";
    case kNeutral: return "neutral";
    case kContradiction: return "contradiction";
  }
  return "?";
}

}  // namespace sclab
