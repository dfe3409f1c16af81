#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sclab {

// Class indices. Challenge scoring collapses these to a binary decision:
// entailment vs everything else.
inline constexpr int kEntailment = 0;
inline constexpr int kNeutral = 1;
inline constexpr int kContradiction = 2;

enum class HeuristicKind { LexicalOverlap = 0, Subsequence = 1, Constituent = 2 };
enum class Subcase { Entailed = 0, NonEntailed = 1 };

struct HeuristicTag {
  HeuristicKind kind;
  Subcase subcase;
};

// One labeled sample. genuine carries the true class signal; shortcut is a
// planted heuristic-indicator channel that is predictive in-distribution
// and adversarially decoupled on the challenge split.
struct Example {
  std::vector<double> genuine;
  std::vector<double> shortcut;
  int label = kEntailment;
  std::optional<HeuristicTag> heuristic_tag;  // challenge/pool examples only
  std::optional<bool> hard;                   // test split, after label_hardness
};

struct GenSpec {
  int d_g = 16;
  int d_s = 6;  // three heuristic-indicator blocks of width d_s/3 (>= 2)
  int n_train = 50000;
  int n_val = 5000;
  int n_test = 10000;
  int n_challenge_per_cell = 500;
  double bias_rate = 0.98;                       // P(shortcut agrees with label)
  double counterexample_rate = 250.0 / 433000.0; // P(shortcut contradicts label)
  double noise_sigma = 1.0;
  double mismatch_shift = 0.5;  // genuine-mean shift on val_mismatched
  std::uint64_t seed = 1;

  void validate() const;
};

// The five splits plus the held-out injection pool. Immutable after
// creation; operations below return modified copies.
struct CorpusBundle {
  std::vector<Example> train;
  std::vector<Example> val_matched;
  std::vector<Example> val_mismatched;
  std::vector<Example> test;
  std::vector<Example> challenge;       // 6 cells: 3 kinds x {E, NE}, equal size
  std::vector<Example> challenge_pool;  // disjoint pool for training injection
  GenSpec gen_spec;
  std::string version;
};

CorpusBundle generate_corpus(const GenSpec& spec);

// Appends n pool examples (tags stripped) to train; the evaluation
// challenge split is untouched. Deterministic in seed.
CorpusBundle inject_challenge_samples(const CorpusBundle& bundle, int n, std::uint64_t seed);

// Trains a shortcut-only shallow model with cross-entropy on train and
// marks each test example hard iff that model misclassifies it.
CorpusBundle label_hardness(const CorpusBundle& bundle, std::uint64_t seed);

Subcase collapse_to_binary(int predicted_class);

// The diagnostic predictor: entailment iff any shortcut block fires, else a
// uniform draw. Scores 100% on Entailed cells and 0% on NonEntailed ones.
int heuristic_oracle_predict(const Example& ex, std::uint64_t seed);

bool shortcut_fires(const Example& ex);

const char* heuristic_kind_name(HeuristicKind kind);
const char* subcase_name(Subcase subcase);
const char* label_name(int label);

// Planted genuine-feature class means (train/test distribution).
std::vector<double> genuine_class_mean(const GenSpec& spec, int label);

}  // namespace sclab
