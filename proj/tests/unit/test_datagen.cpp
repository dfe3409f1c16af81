#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "sclab/datagen.hpp"
#include "sclab/evaluator.hpp"
#include "sclab/rng.hpp"
#include "sclab/trainer.hpp"

using namespace sclab;

namespace {

GenSpec small_spec() {
  GenSpec spec;
  spec.n_train = 4000;
  spec.n_val = 800;
  spec.n_test = 1000;
  spec.n_challenge_per_cell = 50;
  spec.seed = 21;
  return spec;
}

// Decodes the planted shortcut channel: which block fires and which class
// its angle pattern suggests. The patterns are written as exact doubles, so
// equality comparison is valid.
struct Decoded {
  bool fires = false;
  int kind = -1;
  int suggested = -1;
};

Decoded decode_shortcut(const Example& ex, int d_s) {
  const int width = d_s / 3;
  const double cosv[3] = {1.0, -0.5, -0.5};
  const double sinv[3] = {0.0, 0.8660254037844386, -0.8660254037844386};
  Decoded d;
  for (int k = 0; k < 3; ++k) {
    const double a = ex.shortcut[static_cast<std::size_t>(k) * width];
    const double b = ex.shortcut[static_cast<std::size_t>(k) * width + 1];
    if (a == 0.0 && b == 0.0) continue;
    d.fires = true;
    d.kind = k;
    for (int y = 0; y < 3; ++y) {
      if (a == cosv[y] && b == sinv[y]) d.suggested = y;
    }
  }
  return d;
}

bool same_features(const Example& a, const Example& b) {
  return a.genuine == b.genuine && a.shortcut == b.shortcut && a.label == b.label;
}

}  // namespace

TEST_CASE("generate_corpus: bitwise determinism and split sizes") {
  const GenSpec spec = small_spec();
  const CorpusBundle a = generate_corpus(spec);
  const CorpusBundle b = generate_corpus(spec);
  CHECK(a.train.size() == 4000u);
  CHECK(a.val_matched.size() == 800u);
  CHECK(a.val_mismatched.size() == 800u);
  CHECK(a.test.size() == 1000u);
  CHECK(a.challenge.size() == 300u);
  CHECK(a.challenge_pool.size() == 300u);
  for (std::size_t i = 0; i < a.train.size(); ++i) {
    CHECK(same_features(a.train[i], b.train[i]));
  }
  for (std::size_t i = 0; i < a.challenge.size(); ++i) {
    CHECK(same_features(a.challenge[i], b.challenge[i]));
  }
  CHECK(a.version == b.version);
}

TEST_CASE("generate_corpus: degenerate rates make every shortcut agree") {
  GenSpec spec = small_spec();
  spec.bias_rate = 1.0;
  spec.counterexample_rate = 0.0;
  const CorpusBundle bundle = generate_corpus(spec);
  for (const Example& ex : bundle.train) {
    const Decoded d = decode_shortcut(ex, spec.d_s);
    CHECK(d.fires);
    CHECK(d.suggested == ex.label);
  }
}

TEST_CASE("generate_corpus: default counterexample rate is statistically planted") {
  GenSpec spec;  // defaults: n_train = 50000, rate about 5.8e-4
  const CorpusBundle bundle = generate_corpus(spec);
  long counter = 0, zeroed = 0;
  for (const Example& ex : bundle.train) {
    const Decoded d = decode_shortcut(ex, spec.d_s);
    if (!d.fires) {
      ++zeroed;
    } else if (d.suggested != ex.label) {
      ++counter;
    }
  }
  const double frac = static_cast<double>(counter) / static_cast<double>(spec.n_train);
  const double expected = 250.0 / 433000.0;
  CHECK(frac > 0.8 * expected);
  CHECK(frac < 1.2 * expected);
  // The zeroed mass matches 1 - bias_rate - counterexample_rate loosely.
  const double zfrac = static_cast<double>(zeroed) / static_cast<double>(spec.n_train);
  CHECK(zfrac > 0.015);
  CHECK(zfrac < 0.025);
}

TEST_CASE("generate_corpus: challenge structure") {
  GenSpec spec = small_spec();
  spec.n_challenge_per_cell = 100;
  const CorpusBundle bundle = generate_corpus(spec);
  CHECK(bundle.challenge.size() == 600u);
  long cell_counts[3][2] = {};
  long entailed = 0;
  long ne_neutral = 0, ne_contra = 0;
  for (const Example& ex : bundle.challenge) {
    REQUIRE(ex.heuristic_tag.has_value());
    cell_counts[static_cast<int>(ex.heuristic_tag->kind)]
               [static_cast<int>(ex.heuristic_tag->subcase)] += 1;
    if (ex.heuristic_tag->subcase == Subcase::Entailed) {
      ++entailed;
      CHECK(ex.label == kEntailment);
    } else {
      CHECK(ex.label != kEntailment);
      (ex.label == kNeutral ? ne_neutral : ne_contra) += 1;
    }
    // The heuristic cue always fires with the entailment pattern.
    const Decoded d = decode_shortcut(ex, spec.d_s);
    CHECK(d.fires);
    CHECK(d.kind == static_cast<int>(ex.heuristic_tag->kind));
    CHECK(d.suggested == kEntailment);
  }
  CHECK(entailed == 300);
  CHECK(ne_neutral == 150);
  CHECK(ne_contra == 150);
  for (int k = 0; k < 3; ++k) {
    for (int s = 0; s < 2; ++s) CHECK(cell_counts[k][s] == 100);
  }
  // Train/val/test examples never carry tags.
  for (const Example& ex : bundle.train) CHECK(!ex.heuristic_tag.has_value());
  for (const Example& ex : bundle.test) CHECK(!ex.heuristic_tag.has_value());
}

TEST_CASE("generate_corpus: invalid specs rejected") {
  GenSpec spec = small_spec();
  spec.bias_rate = 0.9;
  spec.counterexample_rate = 0.2;
  CHECK_THROWS_AS(generate_corpus(spec), std::invalid_argument);
  spec = small_spec();
  spec.d_s = 7;
  CHECK_THROWS_AS(generate_corpus(spec), std::invalid_argument);
  spec = small_spec();
  spec.n_train = 0;
  CHECK_THROWS_AS(generate_corpus(spec), std::invalid_argument);
}

TEST_CASE("inject_challenge_samples: bookkeeping and disjointness") {
  const CorpusBundle bundle = generate_corpus(small_spec());

  const CorpusBundle same = inject_challenge_samples(bundle, 0, 9);
  CHECK(same.train.size() == bundle.train.size());
  CHECK(same.challenge.size() == bundle.challenge.size());

  const int n = 120;
  const CorpusBundle more = inject_challenge_samples(bundle, n, 9);
  CHECK(more.train.size() == bundle.train.size() + n);
  CHECK(more.challenge.size() == bundle.challenge.size());

  for (std::size_t i = bundle.train.size(); i < more.train.size(); ++i) {
    const Example& injected = more.train[i];
    CHECK(!injected.heuristic_tag.has_value());  // tags stripped
    for (const Example& ch : bundle.challenge) {
      CHECK(!same_features(injected, ch));  // pool is disjoint from evaluation
    }
  }

  // Determinism in seed.
  const CorpusBundle again = inject_challenge_samples(bundle, n, 9);
  for (std::size_t i = bundle.train.size(); i < more.train.size(); ++i) {
    CHECK(same_features(more.train[i], again.train[i]));
  }

  CHECK_THROWS_AS(inject_challenge_samples(bundle, 301, 9), std::invalid_argument);
}

TEST_CASE("collapse_to_binary") {
  CHECK(collapse_to_binary(kEntailment) == Subcase::Entailed);
  CHECK(collapse_to_binary(kNeutral) == Subcase::NonEntailed);
  CHECK(collapse_to_binary(kContradiction) == Subcase::NonEntailed);
  CHECK_THROWS_AS(collapse_to_binary(3), std::invalid_argument);
}

TEST_CASE("heuristic oracle: the 50% diagnostic on any challenge split") {
  const CorpusBundle bundle = generate_corpus(small_spec());
  std::size_t idx = 0;
  const auto oracle = [&idx](const Example& ex) {
    return heuristic_oracle_predict(ex, mix_seed(99, idx++));
  };
  const ChallengeBreakdown b = challenge_breakdown_with(oracle, bundle.challenge);
  for (int k = 0; k < 3; ++k) {
    CHECK(b.cells[k][0] == 1.0);
    CHECK(b.cells[k][1] == 0.0);
  }
  CHECK(b.overall == 0.5);
}

TEST_CASE("label_hardness: definitional zero accuracy, determinism, planted-rule oracle") {
  GenSpec spec = small_spec();
  const CorpusBundle bundle = generate_corpus(spec);
  const std::uint64_t hseed = 77;
  const CorpusBundle labeled = label_hardness(bundle, hseed);
  CHECK(labeled.test.size() == bundle.test.size());
  long hard = 0;
  for (const Example& ex : labeled.test) {
    REQUIRE(ex.hard.has_value());
    if (*ex.hard) ++hard;
  }
  CHECK(hard > 0);

  // The defining shallow model misclassifies exactly the hard subset.
  const ModelParams shallow =
      train_bias_model(bundle, ModelConfig{kDefaultHiddenDim, View::ShortcutOnly}, hseed);
  const auto acc = hard_subset_accuracy(shallow, labeled.test);
  REQUIRE(acc.has_value());
  CHECK(*acc == 0.0);

  // Idempotence: same seed reproduces identical flags.
  const CorpusBundle relabeled = label_hardness(bundle, hseed);
  for (std::size_t i = 0; i < labeled.test.size(); ++i) {
    CHECK(*labeled.test[i].hard == *relabeled.test[i].hard);
  }

  // Fully biased corpus: nothing is zeroed or misleading, so the shallow
  // model solves (essentially) every test example.
  GenSpec pure = small_spec();
  pure.bias_rate = 1.0;
  pure.counterexample_rate = 0.0;
  const CorpusBundle pure_labeled = label_hardness(generate_corpus(pure), hseed);
  long pure_hard = 0;
  for (const Example& ex : pure_labeled.test) {
    if (*ex.hard) ++pure_hard;
  }
  CHECK(static_cast<double>(pure_hard) / static_cast<double>(pure_labeled.test.size()) <= 0.01);
}

TEST_CASE("learnability: the shortcut channel is genuinely predictive in-distribution") {
  GenSpec spec;  // defaults
  const CorpusBundle bundle = generate_corpus(spec);
  const ModelParams shortcut_model =
      train_bias_model(bundle, ModelConfig{kDefaultHiddenDim, View::ShortcutOnly}, 4);
  CHECK(accuracy(shortcut_model, bundle.val_matched, View::ShortcutOnly) > 0.9);
}

TEST_CASE("genuine-feature sufficiency: the task is solvable without shortcuts") {
  GenSpec spec;  // defaults
  CorpusBundle bundle = generate_corpus(spec);
  const auto zero_shortcuts = [](std::vector<Example>& split) {
    for (Example& ex : split) std::fill(ex.shortcut.begin(), ex.shortcut.end(), 0.0);
  };
  zero_shortcuts(bundle.train);
  zero_shortcuts(bundle.val_matched);
  zero_shortcuts(bundle.val_mismatched);
  zero_shortcuts(bundle.test);
  zero_shortcuts(bundle.challenge);
  zero_shortcuts(bundle.challenge_pool);

  TrainSpec train_spec;
  train_spec.loss.kind = LossKind::Focal;
  train_spec.loss.gamma = 0.0;
  train_spec.seed = 5;
  const TrainResult result = train_run(bundle, ModelConfig{}, train_spec);
  const ChallengeBreakdown b = challenge_breakdown(result.params, bundle.challenge);
  CHECK(b.overall > 0.8);
}
