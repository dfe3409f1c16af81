#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sclab/datagen.hpp"
#include "sclab/losses.hpp"
#include "sclab/netmodel.hpp"

namespace sclab {

// Histogram partitions follow the prediction-distribution figures:
// correctness crossed with hardness. Examples without a hardness flag
// count as easy.
enum HistPartition : int {
  kCorrectEasy = 0,
  kCorrectHard = 1,
  kIncorrectEasy = 2,
  kIncorrectHard = 3,
  kNumPartitions = 4,
};

const char* partition_name(int partition);

struct Histogram {
  double lo = 0.0;
  double hi = 1.0;
  // counts[partition][bin]
  std::array<std::vector<long>, kNumPartitions> counts;
  // reference markers: the loss of a uniform 3-class guess (p = 1/3) and of
  // the guaranteed-correct threshold (p = 0.5); probability histograms keep
  // the p values themselves.
  double marker_guess = 0.0;
  double marker_majority = 0.0;

  long total() const;
  int bins() const { return static_cast<int>(counts[0].size()); }
};

struct ChallengeBreakdown {
  // accuracy[kind][subcase], counts[kind][subcase]
  double cells[3][2] = {};
  long cell_counts[3][2] = {};
  double overall = 0.0;
};

struct EvalReport {
  double test_accuracy = 0.0;
  std::optional<double> hard_accuracy;  // empty when the split has no hard examples
  ChallengeBreakdown challenge;
  Histogram prob_histogram;
  Histogram loss_histogram;
};

struct MetricStats {
  std::string name;
  double mean = 0.0;
  std::optional<double> stddev;  // sample std (n-1); requires n >= 2
  int n_runs = 0;
};

struct AggregateReport {
  std::vector<MetricStats> metrics;
};

using PredictFn = std::function<int(const Example&)>;

// Fraction with argmax(softmax(forward)) == label; ties break to the
// lowest class index.
double accuracy(const ModelParams& params, const std::vector<Example>& examples, View view);

// Accuracy restricted to hard == true. Empty optional when no example in
// the split carries a hard flag set to true.
std::optional<double> hard_subset_accuracy(const ModelParams& params,
                                           const std::vector<Example>& examples);

// Per-cell challenge accuracy under binary scoring: a prediction is correct
// iff collapse_to_binary(argmax) matches the cell's subcase.
ChallengeBreakdown challenge_breakdown(const ModelParams& params,
                                       const std::vector<Example>& challenge);
ChallengeBreakdown challenge_breakdown_with(const PredictFn& predict,
                                            const std::vector<Example>& challenge);

int predict_class(const ModelParams& params, const Example& ex);

// Binned counts of the ground-truth-class probability over [0, 1].
Histogram prob_histogram(const ModelParams& params, const std::vector<Example>& examples,
                         int n_bins);

// Binned counts of per-example loss. With normalize = true the loss is
// recomputed as plain cross-entropy of the predicted probabilities. The
// upper edge is loss(p = clamp_eps) capped at the 99.9th percentile;
// overflowing values land in the last bin so totals are conserved.
Histogram loss_histogram(const ModelParams& params, const std::vector<Example>& examples,
                         const LossSpec& loss, int n_bins, bool normalize);

// Mean of |p_label - 0.5| over the examples: the scalar summary of how far
// the ground-truth-class probabilities sit from the 0.5 convergence point.
double mean_abs_gap_from_half(const ModelParams& params, const std::vector<Example>& examples);

// Mean and n-1 standard deviation per metric across runs.
AggregateReport aggregate_runs(const std::vector<EvalReport>& reports);

// The scalar metrics of a report in fixed order (name, value); hard
// accuracy is omitted when absent.
std::vector<std::pair<std::string, double>> report_metrics(const EvalReport& report);

// Full per-run measurement used by the experiment runner.
EvalReport evaluate_run(const ModelParams& params, const CorpusBundle& bundle,
                        const LossSpec& loss, int n_bins = 40);

}  // namespace sclab
