#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sclab/config.hpp"
#include "sclab/evaluator.hpp"

namespace sclab {

struct RunKey {
  double gamma = 0.0;
  int n_inject = 0;
  std::uint64_t seed = 0;
};

std::string run_dir_name(const RunKey& key);

// One grid point's outcome: the metric map mirrors the run's eval.csv.
struct RunRecord {
  RunKey key;
  bool ok = false;
  std::string error;
  std::map<std::string, double> metrics;
};

// Generates the corpus (with hardness labels on the test split) and
// serializes it under <output_dir>/<name>/corpus/.
void cmd_generate(const ExperimentConfig& cfg);

// Trains and evaluates one (gamma, n_inject, seed) triple against the
// serialized corpus; writes history.csv, eval.csv, the histogram CSVs, a
// checkpoint and a status file under runs/<triple>/.
RunRecord cmd_run(const ExperimentConfig& cfg, double gamma, int n_inject, std::uint64_t seed);

// Runs the full grid (parallelizable across triples), then writes the
// aggregate tables and the sweep manifest.
std::vector<RunRecord> cmd_sweep(const ExperimentConfig& cfg, int workers = 1);

// Rebuilds the aggregate tables from the per-run eval.csv files on disk.
void cmd_report(const ExperimentConfig& cfg);

// Emits the loss-curve family SVG plus per-run histogram SVGs. run_name
// empty means every run directory found.
void cmd_plot(const ExperimentConfig& cfg, const std::string& run_name = "");

// Internals shared with the acceptance suite: run one triple against an
// in-memory corpus without touching the filesystem.
RunRecord run_triple(const CorpusBundle& corpus, const ExperimentConfig& cfg, const RunKey& key,
                     const std::filesystem::path* run_dir);

// Histogram CSV round-trip used by cmd_run / cmd_plot.
void write_histogram_csv(const std::filesystem::path& path, const Histogram& hist);
Histogram read_histogram_csv(const std::filesystem::path& path);

}  // namespace sclab
