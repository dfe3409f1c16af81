#include "sclab/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace sclab {

namespace {

int argmax3(const std::vector<double>& v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

int partition_of(bool correct, bool hard) {
  if (correct) return hard ? kCorrectHard : kCorrectEasy;
  return hard ? kIncorrectHard : kIncorrectEasy;
}

int bin_of(double value, double lo, double hi, int n_bins) {
  if (value <= lo) return 0;
  if (value >= hi) return n_bins - 1;
  return std::min(n_bins - 1,
                  static_cast<int>((value - lo) / (hi - lo) * static_cast<double>(n_bins)));
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto i = static_cast<std::size_t>(pos);
  if (i + 1 >= values.size()) return values.back();
  const double frac = pos - static_cast<double>(i);
  return values[i] * (1.0 - frac) + values[i + 1] * frac;
}

}  // namespace

const char* partition_name(int partition) {
  switch (partition) {
    case kCorrectEasy: return "correct_easy";
    case kCorrectHard: return "correct_hard";
    case kIncorrectEasy: return "incorrect_easy";
    case kIncorrectHard: return "incorrect_hard";
  }
  return "?";
}

long Histogram::total() const {
  long t = 0;
  for (const auto& part : counts) {
    for (long c : part) t += c;
  }
  return t;
}

int predict_class(const ModelParams& params, const Example& ex) {
  const std::vector<double> logits =
      forward(params, apply_view(ex.genuine, ex.shortcut, params.view));
  return argmax3(logits);
}

double accuracy(const ModelParams& params, const std::vector<Example>& examples, View view) {
  if (examples.empty()) throw std::invalid_argument("accuracy: empty example set");
  if (view != params.view) {
    throw std::invalid_argument("accuracy: requested view does not match the model's view");
  }
  long correct = 0;
  for (const Example& ex : examples) {
    if (predict_class(params, ex) == ex.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

std::optional<double> hard_subset_accuracy(const ModelParams& params,
                                           const std::vector<Example>& examples) {
  long n = 0, correct = 0;
  for (const Example& ex : examples) {
    if (!ex.hard || !*ex.hard) continue;
    ++n;
    if (predict_class(params, ex) == ex.label) ++correct;
  }
  if (n == 0) return std::nullopt;
  return static_cast<double>(correct) / static_cast<double>(n);
}

ChallengeBreakdown challenge_breakdown_with(const PredictFn& predict,
                                            const std::vector<Example>& challenge) {
  long correct[3][2] = {};
  ChallengeBreakdown out;
  for (const Example& ex : challenge) {
    if (!ex.heuristic_tag) {
      throw std::invalid_argument("challenge_breakdown: untagged example in challenge split");
    }
    const int k = static_cast<int>(ex.heuristic_tag->kind);
    const int s = static_cast<int>(ex.heuristic_tag->subcase);
    out.cell_counts[k][s] += 1;
    if (collapse_to_binary(predict(ex)) == ex.heuristic_tag->subcase) correct[k][s] += 1;
  }
  long total = 0, total_correct = 0;
  for (int k = 0; k < 3; ++k) {
    for (int s = 0; s < 2; ++s) {
      if (out.cell_counts[k][s] > 0) {
        out.cells[k][s] =
            static_cast<double>(correct[k][s]) / static_cast<double>(out.cell_counts[k][s]);
      }
      total += out.cell_counts[k][s];
      total_correct += correct[k][s];
    }
  }
  if (total == 0) throw std::invalid_argument("challenge_breakdown: empty challenge split");
  out.overall = static_cast<double>(total_correct) / static_cast<double>(total);
  return out;
}

ChallengeBreakdown challenge_breakdown(const ModelParams& params,
                                       const std::vector<Example>& challenge) {
  return challenge_breakdown_with(
      [&params](const Example& ex) { return predict_class(params, ex); }, challenge);
}

Histogram prob_histogram(const ModelParams& params, const std::vector<Example>& examples,
                         int n_bins) {
  if (n_bins < 2) throw std::invalid_argument("prob_histogram: n_bins must be >= 2");
  Histogram h;
  h.lo = 0.0;
  h.hi = 1.0;
  h.marker_guess = 1.0 / 3.0;
  h.marker_majority = 0.5;
  for (auto& part : h.counts) part.assign(n_bins, 0);
  for (const Example& ex : examples) {
    const std::vector<double> logits =
        forward(params, apply_view(ex.genuine, ex.shortcut, params.view));
    const ProbVector probs = softmax(logits);
    const double p = probs[static_cast<std::size_t>(ex.label)];
    const bool correct = argmax3(logits) == ex.label;
    const bool hard = ex.hard && *ex.hard;
    h.counts[partition_of(correct, hard)][bin_of(p, 0.0, 1.0, n_bins)] += 1;
  }
  return h;
}

Histogram loss_histogram(const ModelParams& params, const std::vector<Example>& examples,
                         const LossSpec& loss, int n_bins, bool normalize) {
  if (n_bins < 2) throw std::invalid_argument("loss_histogram: n_bins must be >= 2");
  LossSpec effective = loss;
  if (normalize) {
    // Normalized view: plain cross-entropy of the predicted probabilities.
    effective.kind = LossKind::CrossEntropy;
    effective.gamma = 0.0;
  }
  if (effective.kind != LossKind::CrossEntropy && effective.kind != LossKind::Focal) {
    throw std::invalid_argument("loss_histogram: supports CrossEntropy/Focal losses");
  }
  std::vector<double> values;
  std::vector<char> corrects, hards;
  values.reserve(examples.size());
  for (const Example& ex : examples) {
    const std::vector<double> logits =
        forward(params, apply_view(ex.genuine, ex.shortcut, params.view));
    const ProbVector probs = softmax(logits);
    values.push_back(focal_value(probs, static_cast<std::size_t>(ex.label), effective));
    corrects.push_back(argmax3(logits) == ex.label ? 1 : 0);
    hards.push_back(ex.hard && *ex.hard ? 1 : 0);
  }
  Histogram h;
  h.lo = 0.0;
  const double ceiling =
      focal_value(ProbVector{{effective.clamp_eps, (1.0 - effective.clamp_eps) / 2.0,
                              (1.0 - effective.clamp_eps) / 2.0}},
                  0, effective);
  h.hi = std::min(ceiling, percentile(values, 0.999));
  if (!(h.hi > 0.0)) h.hi = 1.0;  // all-zero losses: keep a nonempty range
  const auto third = make_probs({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
  const auto half = make_probs({0.5, 0.25, 0.25});
  h.marker_guess = focal_value(third, 0, effective);
  h.marker_majority = focal_value(half, 0, effective);
  for (auto& part : h.counts) part.assign(n_bins, 0);
  for (std::size_t i = 0; i < values.size(); ++i) {
    h.counts[partition_of(corrects[i] != 0, hards[i] != 0)]
        [bin_of(values[i], h.lo, h.hi, n_bins)] += 1;
  }
  return h;
}

std::vector<std::pair<std::string, double>> report_metrics(const EvalReport& report) {
  std::vector<std::pair<std::string, double>> out;
  out.emplace_back("test_accuracy", report.test_accuracy);
  if (report.hard_accuracy) out.emplace_back("hard_accuracy", *report.hard_accuracy);
  out.emplace_back("challenge_overall", report.challenge.overall);
  for (int k = 0; k < 3; ++k) {
    for (int s = 0; s < 2; ++s) {
      out.emplace_back(std::string("challenge_") +
                           heuristic_kind_name(static_cast<HeuristicKind>(k)) + "_" +
                           subcase_name(static_cast<Subcase>(s)),
                       report.challenge.cells[k][s]);
    }
  }
  return out;
}

double mean_abs_gap_from_half(const ModelParams& params, const std::vector<Example>& examples) {
  if (examples.empty()) {
    throw std::invalid_argument("mean_abs_gap_from_half: empty example set");
  }
  double sum = 0.0;
  for (const Example& ex : examples) {
    const std::vector<double> logits =
        forward(params, apply_view(ex.genuine, ex.shortcut, params.view));
    const ProbVector probs = softmax(logits);
    sum += std::abs(probs[static_cast<std::size_t>(ex.label)] - 0.5);
  }
  return sum / static_cast<double>(examples.size());
}

AggregateReport aggregate_runs(const std::vector<EvalReport>& reports) {
  if (reports.size() < 2) {
    throw std::invalid_argument("aggregate_runs: need at least 2 reports");
  }
  // Fixed metric order taken from the first report; values accumulated by
  // name so reports lacking hard accuracy still aggregate cleanly.
  std::vector<std::string> order;
  std::map<std::string, std::vector<double>> values;
  for (const EvalReport& r : reports) {
    for (const auto& [name, value] : report_metrics(r)) {
      if (values.find(name) == values.end()) order.push_back(name);
      values[name].push_back(value);
    }
  }
  AggregateReport agg;
  for (const std::string& name : order) {
    const std::vector<double>& v = values[name];
    MetricStats stats;
    stats.name = name;
    stats.n_runs = static_cast<int>(v.size());
    double sum = 0.0;
    for (double x : v) sum += x;
    stats.mean = sum / static_cast<double>(v.size());
    if (v.size() >= 2) {
      double ss = 0.0;
      for (double x : v) ss += (x - stats.mean) * (x - stats.mean);
      stats.stddev = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    agg.metrics.push_back(std::move(stats));
  }
  return agg;
}

EvalReport evaluate_run(const ModelParams& params, const CorpusBundle& bundle,
                        const LossSpec& loss, int n_bins) {
  EvalReport report;
  report.test_accuracy = accuracy(params, bundle.test, params.view);
  report.hard_accuracy = hard_subset_accuracy(params, bundle.test);
  report.challenge = challenge_breakdown(params, bundle.challenge);
  report.prob_histogram = prob_histogram(params, bundle.test, n_bins);
  report.loss_histogram = loss_histogram(params, bundle.test, loss, n_bins, false);
  return report;
}

}  // namespace sclab
