#include <doctest.h>

#include <cmath>
#include <vector>

#include "sclab/datagen.hpp"
#include "sclab/evaluator.hpp"
#include "sclab/trainer.hpp"

using namespace sclab;

namespace {

GenSpec tiny_spec() {
  GenSpec spec;
  spec.n_train = 512;
  spec.n_val = 256;
  spec.n_test = 256;
  spec.n_challenge_per_cell = 20;
  spec.seed = 31;
  return spec;
}

// Zero-noise, partially biased toy corpus: linearly separable via the
// genuine channel, with enough unbiased samples that every loss kind keeps
// a usable gradient signal.
GenSpec toy_separable_spec() {
  GenSpec spec = tiny_spec();
  spec.noise_sigma = 0.0;
  spec.bias_rate = 0.6;
  spec.counterexample_rate = 0.0;
  return spec;
}

TrainSpec base_train_spec() {
  TrainSpec spec;
  spec.loss.kind = LossKind::Focal;
  spec.loss.gamma = 0.0;
  spec.max_epochs = 4;
  spec.seed = 2;
  return spec;
}

double val_loss_oracle(const ModelParams& params, const std::vector<Example>& split,
                       const LossSpec& loss) {
  double sum = 0.0;
  for (const Example& ex : split) {
    const auto logits = forward(params, apply_view(ex.genuine, ex.shortcut, params.view));
    sum += loss_value(loss, logits, static_cast<std::size_t>(ex.label), nullptr);
  }
  return sum / static_cast<double>(split.size());
}

}  // namespace

TEST_CASE("train_run: zero learning rate is a null update") {
  const CorpusBundle bundle = generate_corpus(tiny_spec());
  TrainSpec spec = base_train_spec();
  spec.max_epochs = 1;
  spec.optim.peak_lr = 0.0;
  spec.optim.batch_size = static_cast<int>(bundle.train.size());
  const TrainResult result = train_run(bundle, ModelConfig{}, spec);
  const ModelParams init =
      init_params(view_input_dim(bundle.gen_spec.d_g, bundle.gen_spec.d_s, View::Full),
                  kDefaultHiddenDim, mix_seed(spec.seed, 0), View::Full);
  CHECK(result.params.w1 == init.w1);
  CHECK(result.params.b1 == init.b1);
  CHECK(result.params.w2 == init.w2);
  CHECK(result.params.b2 == init.b2);
}

TEST_CASE("train_run: scripted validation losses select the argmin epoch") {
  const CorpusBundle bundle = generate_corpus(tiny_spec());
  TrainSpec spec = base_train_spec();
  spec.max_epochs = 3;
  TrainHooks hooks;
  const double scripted[3] = {0.9, 0.5, 0.7};
  hooks.validation_loss_override = [&scripted](int epoch, const ModelParams&) {
    return scripted[epoch];
  };
  const TrainResult with_es = train_run(bundle, ModelConfig{}, spec, hooks);
  CHECK(with_es.history.best_epoch == 1);
  CHECK(with_es.history.epochs.size() == 3u);
  CHECK(with_es.history.epochs[1].val_loss == 0.5);

  spec.early_stopping = false;
  const TrainResult without_es = train_run(bundle, ModelConfig{}, spec, hooks);
  CHECK(without_es.history.best_epoch == 2);

  // Ties resolve to the earliest epoch.
  TrainHooks tie_hooks;
  tie_hooks.validation_loss_override = [](int, const ModelParams&) { return 0.25; };
  spec.early_stopping = true;
  const TrainResult tied = train_run(bundle, ModelConfig{}, spec, tie_hooks);
  CHECK(tied.history.best_epoch == 0);
}

TEST_CASE("train_run: early-stopping contract reproduces the recorded loss") {
  const CorpusBundle bundle = generate_corpus(tiny_spec());
  TrainSpec spec = base_train_spec();
  spec.loss.gamma = 2.0;
  spec.max_epochs = 5;
  const TrainResult result = train_run(bundle, ModelConfig{}, spec);
  REQUIRE(result.history.best_epoch >= 0);
  const double recorded = result.history.epochs[result.history.best_epoch].val_loss;
  const double reproduced =
      val_loss_oracle(result.params, bundle.val_mismatched, spec.loss);
  CHECK(std::abs(recorded - reproduced) <= 1e-9);

  // best_epoch is the argmin over recorded epochs.
  for (const EpochRecord& r : result.history.epochs) {
    CHECK(recorded <= r.val_loss);
  }
}

TEST_CASE("train_run: gamma = 0 focal and cross-entropy produce bitwise-equal trajectories") {
  const CorpusBundle bundle = generate_corpus(tiny_spec());
  TrainSpec focal = base_train_spec();
  focal.loss.kind = LossKind::Focal;
  focal.loss.gamma = 0.0;
  TrainSpec ce = focal;
  ce.loss.kind = LossKind::CrossEntropy;

  const TrainResult a = train_run(bundle, ModelConfig{}, focal);
  const TrainResult b = train_run(bundle, ModelConfig{}, ce);
  CHECK(a.params.w1 == b.params.w1);
  CHECK(a.params.b1 == b.params.b1);
  CHECK(a.params.w2 == b.params.w2);
  CHECK(a.params.b2 == b.params.b2);
  REQUIRE(a.history.epochs.size() == b.history.epochs.size());
  for (std::size_t e = 0; e < a.history.epochs.size(); ++e) {
    CHECK(a.history.epochs[e].train_loss == b.history.epochs[e].train_loss);
    CHECK(a.history.epochs[e].val_loss == b.history.epochs[e].val_loss);
  }
}

TEST_CASE("train_run: determinism across identical calls") {
  const CorpusBundle bundle = generate_corpus(tiny_spec());
  TrainSpec spec = base_train_spec();
  spec.loss.gamma = 5.0;
  const TrainResult a = train_run(bundle, ModelConfig{}, spec);
  const TrainResult b = train_run(bundle, ModelConfig{}, spec);
  CHECK(a.params.w1 == b.params.w1);
  CHECK(a.params.w2 == b.params.w2);
}

TEST_CASE("train_run: divergence guard names epoch and step") {
  const CorpusBundle bundle = generate_corpus(tiny_spec());
  TrainSpec spec = base_train_spec();
  spec.max_epochs = 1;
  spec.optim.peak_lr = 1e300;
  spec.optim.clip_norm.reset();
  try {
    train_run(bundle, ModelConfig{}, spec);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("epoch") != std::string::npos);
    CHECK(msg.find("step") != std::string::npos);
  }
}

TEST_CASE("train_run: loss decreases on a separable toy corpus for every loss kind") {
  const CorpusBundle bundle = generate_corpus(toy_separable_spec());
  const double gammas[6] = {0.0, 0.5, 1.0, 2.0, 5.0, 10.0};

  for (double gamma : gammas) {
    TrainSpec spec = base_train_spec();
    spec.loss.kind = LossKind::Focal;
    spec.loss.gamma = gamma;
    const TrainResult r = train_run(bundle, ModelConfig{}, spec);
    CHECK(r.history.epochs[2].train_loss < r.history.epochs[0].train_loss);
  }
  {
    TrainSpec spec = base_train_spec();
    spec.loss.kind = LossKind::CrossEntropy;
    const TrainResult r = train_run(bundle, ModelConfig{}, spec);
    CHECK(r.history.epochs[2].train_loss < r.history.epochs[0].train_loss);
  }
  for (double gamma : gammas) {
    TrainSpec spec = base_train_spec();
    spec.loss.kind = LossKind::DebiasedFocal;
    spec.loss.gamma = gamma;
    spec.bias_model_source = {BiasSource::TrainShortcutOnlyFirst, ""};
    const TrainResult r = train_run(bundle, ModelConfig{}, spec);
    CHECK(r.history.epochs[2].train_loss < r.history.epochs[0].train_loss);
  }
  {
    TrainSpec spec = base_train_spec();
    spec.loss.kind = LossKind::ProductOfExperts;
    spec.bias_model_source = {BiasSource::TrainShortcutOnlyFirst, ""};
    const TrainResult r = train_run(bundle, ModelConfig{}, spec);
    CHECK(r.history.epochs[2].train_loss < r.history.epochs[0].train_loss);
  }
}

TEST_CASE("train_run: bias-source consistency validation") {
  TrainSpec spec = base_train_spec();
  spec.loss.kind = LossKind::DebiasedFocal;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);  // missing bias source
  spec.loss.kind = LossKind::Focal;
  spec.bias_model_source = {BiasSource::TrainShortcutOnlyFirst, ""};
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);  // spurious bias source
}

TEST_CASE("train_bias_model: masking invariance and determinism") {
  const CorpusBundle bundle = generate_corpus(tiny_spec());
  const ModelParams bias_a = train_bias_model(bundle, ModelConfig{}, 12);
  const ModelParams bias_b = train_bias_model(bundle, ModelConfig{}, 12);
  CHECK(bias_a.w1 == bias_b.w1);
  CHECK(bias_a.view == View::ShortcutOnly);

  // Predictions ignore the genuine features entirely.
  Example ex = bundle.test[0];
  const int before = predict_class(bias_a, ex);
  for (double& v : ex.genuine) v += 123.0;
  CHECK(predict_class(bias_a, ex) == before);
}
