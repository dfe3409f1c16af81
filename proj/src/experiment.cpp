#include "sclab/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "sclab/rng.hpp"
#include "sclab/serialize.hpp"
#include "sclab/svgplot.hpp"
#include "sclab/trainer.hpp"
#include "sclab/version.hpp"

namespace sclab {

namespace fs = std::filesystem;

namespace {

// Sub-seed streams drawn from the run seed (trainer reserves 0..2).
constexpr std::uint64_t kStreamHardness = 50;
constexpr std::uint64_t kStreamInjection = 100;

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  return out;
}

fs::path corpus_dir(const ExperimentConfig& cfg) { return cfg.experiment_dir() / "corpus"; }
fs::path runs_dir(const ExperimentConfig& cfg) { return cfg.experiment_dir() / "runs"; }

CorpusBundle load_corpus_checked(const ExperimentConfig& cfg) {
  const fs::path dir = corpus_dir(cfg);
  if (!fs::exists(dir / "manifest.txt")) {
    throw std::runtime_error("corpus not found: expected " + (dir / "manifest.txt").string() +
                             " (run the generate command first)");
  }
  return read_corpus(dir);
}

// The fixed metric order of eval.csv and metrics_long.csv.
std::vector<std::string> metric_order() {
  std::vector<std::string> names = {"test_accuracy", "hard_accuracy", "challenge_overall"};
  for (int k = 0; k < 3; ++k) {
    for (int s = 0; s < 2; ++s) {
      names.push_back(std::string("challenge_") +
                      heuristic_kind_name(static_cast<HeuristicKind>(k)) + "_" +
                      subcase_name(static_cast<Subcase>(s)));
    }
  }
  names.push_back("mean_abs_p_gap");
  names.push_back("best_epoch");
  return names;
}

struct Stats {
  double mean = 0.0;
  std::optional<double> stddev;
  int n = 0;
};

// Mean and n-1 std; the same arithmetic aggregate_runs uses, so table cells
// and aggregate_runs agree exactly.
Stats stats_of(const std::vector<double>& values) {
  Stats s;
  s.n = static_cast<int>(values.size());
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() >= 2) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

void write_history_csv(const fs::path& path, const RunHistory& history) {
  std::ofstream out = open_out(path);
  out << "epoch,train_loss,val_loss,val_acc,lr\n";
  for (std::size_t e = 0; e < history.epochs.size(); ++e) {
    const EpochRecord& r = history.epochs[e];
    out << e << ',' << fmt_double(r.train_loss) << ',' << fmt_double(r.val_loss) << ','
        << fmt_double(r.val_accuracy) << ',' << fmt_double(r.lr) << '\n';
  }
}

void write_eval_csv(const fs::path& path, const std::map<std::string, double>& metrics) {
  std::ofstream out = open_out(path);
  out << "metric,value\n";
  for (const std::string& name : metric_order()) {
    const auto it = metrics.find(name);
    if (it == metrics.end()) continue;  // hard_accuracy may be absent
    out << name << ',' << fmt_double(it->second) << '\n';
  }
}

std::map<std::string, double> read_eval_csv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open run metrics: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "metric,value") {
    throw std::runtime_error(path.string() + ": bad eval.csv header");
  }
  std::map<std::string, double> metrics;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw std::runtime_error(path.string() + ": malformed row '" + line + "'");
    }
    metrics[line.substr(0, comma)] = parse_double(line.substr(comma + 1), path.string());
  }
  return metrics;
}

void write_status(const fs::path& path, const RunKey& key, bool ok, const std::string& error) {
  std::ofstream out = open_out(path);
  out << "status " << (ok ? "ok" : "diverged") << '\n';
  out << "gamma " << fmt_double(key.gamma) << '\n';
  out << "n_inject " << key.n_inject << '\n';
  out << "seed " << key.seed << '\n';
  out << "baseline " << (key.gamma == 0.0 ? "true" : "false") << '\n';
  if (!ok) out << "error " << error << '\n';
}

std::string metric_name_short(const std::string& metric) {
  if (metric == "challenge_overall") return "challenge_accuracy";
  return metric;
}

// Wide tables: one row per run, then mean/std/n rows per aggregate cell.
void write_wide_table(const fs::path& path, const std::vector<RunRecord>& records,
                      const std::vector<std::string>& metrics, bool with_inject,
                      std::optional<int> inject_filter) {
  std::ofstream out = open_out(path);
  out << "row,gamma";
  if (with_inject) out << ",n_inject";
  out << ",seed";
  for (const std::string& m : metrics) out << ',' << metric_name_short(m);
  out << '\n';

  auto emit_value = [&](const RunRecord& r, const std::string& m) {
    const auto it = r.metrics.find(m);
    if (it != r.metrics.end()) out << fmt_double(it->second);
  };

  std::vector<std::pair<double, int>> cells;  // (gamma, inject) in grid order
  for (const RunRecord& r : records) {
    if (inject_filter && r.key.n_inject != *inject_filter) continue;
    const auto cell = std::make_pair(r.key.gamma, r.key.n_inject);
    if (std::find(cells.begin(), cells.end(), cell) == cells.end()) cells.push_back(cell);
    out << "run," << fmt_double(r.key.gamma);
    if (with_inject) out << ',' << r.key.n_inject;
    out << ',' << r.key.seed;
    for (const std::string& m : metrics) {
      out << ',';
      if (r.ok) emit_value(r, m);
    }
    out << '\n';
  }

  for (const auto& [gamma, inject] : cells) {
    std::map<std::string, std::vector<double>> values;
    for (const RunRecord& r : records) {
      if (!r.ok || r.key.gamma != gamma || r.key.n_inject != inject) continue;
      for (const std::string& m : metrics) {
        const auto it = r.metrics.find(m);
        if (it != r.metrics.end()) values[m].push_back(it->second);
      }
    }
    const char* kinds[3] = {"mean", "std", "n"};
    for (const char* kind : kinds) {
      out << kind << ',' << fmt_double(gamma);
      if (with_inject) out << ',' << inject;
      out << ',';  // seed column empty on aggregate rows
      for (const std::string& m : metrics) {
        out << ',';
        const Stats s = stats_of(values[m]);
        if (std::string(kind) == "mean") {
          if (s.n > 0) out << fmt_double(s.mean);
        } else if (std::string(kind) == "std") {
          if (s.stddev) out << fmt_double(*s.stddev);
        } else {
          out << s.n;
        }
      }
      out << '\n';
    }
  }
}

// Long table: one row per (metric, gamma, n_inject, seed) plus aggregates.
void write_metrics_long(const fs::path& path, const std::vector<RunRecord>& records) {
  std::ofstream out = open_out(path);
  out << "metric,gamma,n_inject,seed,value,mean,std,n_runs\n";
  for (const std::string& m : metric_order()) {
    for (const RunRecord& r : records) {
      const auto it = r.metrics.find(m);
      if (!r.ok || it == r.metrics.end()) continue;
      out << m << ',' << fmt_double(r.key.gamma) << ',' << r.key.n_inject << ',' << r.key.seed
          << ',' << fmt_double(it->second) << ",,,\n";
    }
    std::vector<std::pair<double, int>> cells;
    for (const RunRecord& r : records) {
      const auto cell = std::make_pair(r.key.gamma, r.key.n_inject);
      if (std::find(cells.begin(), cells.end(), cell) == cells.end()) cells.push_back(cell);
    }
    for (const auto& [gamma, inject] : cells) {
      std::vector<double> values;
      for (const RunRecord& r : records) {
        if (!r.ok || r.key.gamma != gamma || r.key.n_inject != inject) continue;
        const auto it = r.metrics.find(m);
        if (it != r.metrics.end()) values.push_back(it->second);
      }
      const Stats s = stats_of(values);
      out << m << ',' << fmt_double(gamma) << ',' << inject << ",,,";
      if (s.n > 0) out << fmt_double(s.mean);
      out << ',';
      if (s.stddev) out << fmt_double(*s.stddev);
      out << ',' << s.n << '\n';
    }
  }
}

void write_tables(const ExperimentConfig& cfg, const std::vector<RunRecord>& records) {
  const fs::path dir = cfg.experiment_dir();
  const std::vector<std::string> headline = {"test_accuracy", "hard_accuracy",
                                             "challenge_overall"};
  std::vector<std::string> cells;
  for (int k = 0; k < 3; ++k) {
    for (int s = 0; s < 2; ++s) {
      cells.push_back(std::string("challenge_") +
                      heuristic_kind_name(static_cast<HeuristicKind>(k)) + "_" +
                      subcase_name(static_cast<Subcase>(s)));
    }
  }
  cells.push_back("challenge_overall");
  write_wide_table(dir / "table1.csv", records, headline, false, 0);
  write_wide_table(dir / "table2.csv", records, headline, true, std::nullopt);
  write_wide_table(dir / "table4.csv", records, cells, true, std::nullopt);
  write_metrics_long(dir / "metrics_long.csv", records);
}

void write_sweep_manifest(const ExperimentConfig& cfg, const std::vector<RunRecord>& records,
                          const std::string& cfg_hash) {
  std::ofstream out = open_out(cfg.experiment_dir() / "sweep_manifest.txt");
  out << "artifact_version " << kArtifactVersion << '\n';
  out << "corpus_version " << kCorpusVersion << '\n';
  out << "config_hash " << cfg_hash << '\n';
  out << "runs " << records.size() << '\n';
  for (const RunRecord& r : records) {
    out << "run " << run_dir_name(r.key) << ' ' << (r.ok ? "ok" : "diverged") << '\n';
  }
}

std::string serialized_config(const ExperimentConfig& cfg) {
  // Canonical echo of the effective config; hashed into the manifest.
  std::ostringstream ss;
  ss << "name=" << cfg.name << ";gen=" << cfg.gen.d_g << ',' << cfg.gen.d_s << ','
     << cfg.gen.n_train << ',' << cfg.gen.n_val << ',' << cfg.gen.n_test << ','
     << cfg.gen.n_challenge_per_cell << ',' << fmt_double(cfg.gen.bias_rate) << ','
     << fmt_double(cfg.gen.counterexample_rate) << ',' << fmt_double(cfg.gen.noise_sigma) << ','
     << fmt_double(cfg.gen.mismatch_shift) << ',' << cfg.gen.seed
     << ";hidden=" << cfg.model.hidden_dim << ";loss=" << static_cast<int>(cfg.train.loss.kind)
     << ";early_stopping=" << cfg.train.early_stopping
     << ";val_split=" << static_cast<int>(cfg.train.validation_split)
     << ";max_epochs=" << cfg.train.max_epochs
     << ";optim=" << static_cast<int>(cfg.train.optim.kind) << ','
     << fmt_double(cfg.train.optim.peak_lr) << ',' << cfg.train.optim.batch_size << ";gammas=";
  for (double g : cfg.gamma_grid) ss << fmt_double(g) << ',';
  ss << ";injections=";
  for (int n : cfg.injection_grid) ss << n << ',';
  ss << ";seeds=";
  for (std::uint64_t s : cfg.seeds) ss << s << ',';
  return ss.str();
}

}  // namespace

std::string run_dir_name(const RunKey& key) {
  return "g" + fmt_double(key.gamma) + "_i" + std::to_string(key.n_inject) + "_s" +
         std::to_string(key.seed);
}

void write_histogram_csv(const fs::path& path, const Histogram& hist) {
  std::ofstream out = open_out(path);
  out << "# range_lo " << fmt_double(hist.lo) << '\n';
  out << "# range_hi " << fmt_double(hist.hi) << '\n';
  out << "# marker_guess " << fmt_double(hist.marker_guess) << '\n';
  out << "# marker_majority " << fmt_double(hist.marker_majority) << '\n';
  out << "bin,lo,hi";
  for (int p = 0; p < kNumPartitions; ++p) out << ',' << partition_name(p);
  out << '\n';
  const int n_bins = hist.bins();
  for (int b = 0; b < n_bins; ++b) {
    const double w = (hist.hi - hist.lo) / static_cast<double>(n_bins);
    out << b << ',' << fmt_double(hist.lo + b * w) << ',' << fmt_double(hist.lo + (b + 1) * w);
    for (int p = 0; p < kNumPartitions; ++p) out << ',' << hist.counts[p][b];
    out << '\n';
  }
}

Histogram read_histogram_csv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open histogram: " + path.string());
  Histogram hist;
  for (auto& part : hist.counts) part.clear();
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ss(line.substr(1));
      std::string key, value;
      ss >> key >> value;
      if (key == "range_lo") hist.lo = parse_double(value, path.string());
      if (key == "range_hi") hist.hi = parse_double(value, path.string());
      if (key == "marker_guess") hist.marker_guess = parse_double(value, path.string());
      if (key == "marker_majority") hist.marker_majority = parse_double(value, path.string());
      continue;
    }
    if (line.rfind("bin,", 0) == 0) continue;  // header
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
      if (c == ',') {
        fields.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    fields.push_back(cur);
    if (fields.size() != 3 + kNumPartitions) {
      throw std::runtime_error(path.string() + ": malformed histogram row '" + line + "'");
    }
    for (int p = 0; p < kNumPartitions; ++p) {
      hist.counts[p].push_back(parse_long(fields[3 + p], path.string()));
    }
  }
  if (hist.counts[0].empty()) {
    throw std::runtime_error(path.string() + ": histogram has no bins");
  }
  return hist;
}

RunRecord run_triple(const CorpusBundle& corpus, const ExperimentConfig& cfg, const RunKey& key,
                     const fs::path* run_dir) {
  RunRecord record;
  record.key = key;

  TrainSpec spec = cfg.train;
  spec.loss.gamma = key.gamma;
  spec.seed = key.seed;

  const CorpusBundle* bundle = &corpus;
  CorpusBundle injected;
  if (key.n_inject > 0) {
    injected = inject_challenge_samples(corpus, key.n_inject, mix_seed(key.seed, kStreamInjection));
    bundle = &injected;
  }

  if (run_dir) fs::create_directories(*run_dir);
  try {
    TrainResult result = train_run(*bundle, cfg.model, spec);
    EvalReport report = evaluate_run(result.params, *bundle, spec.loss);
    for (const auto& [name, value] : report_metrics(report)) record.metrics[name] = value;
    record.metrics["mean_abs_p_gap"] = mean_abs_gap_from_half(result.params, bundle->test);
    record.metrics["best_epoch"] = static_cast<double>(result.history.best_epoch);
    record.ok = true;
    if (run_dir) {
      write_history_csv(*run_dir / "history.csv", result.history);
      write_eval_csv(*run_dir / "eval.csv", record.metrics);
      write_histogram_csv(*run_dir / "prob_hist.csv", report.prob_histogram);
      write_histogram_csv(*run_dir / "loss_hist.csv", report.loss_histogram);
      save_checkpoint(*run_dir / "checkpoint.txt", result.params, key.seed);
      write_status(*run_dir / "status.txt", key, true, "");
    }
  } catch (const DivergenceError& e) {
    record.ok = false;
    record.error = e.what();
    if (run_dir) write_status(*run_dir / "status.txt", key, false, e.what());
  }
  return record;
}

void cmd_generate(const ExperimentConfig& cfg) {
  CorpusBundle bundle = generate_corpus(cfg.gen);
  bundle = label_hardness(bundle, mix_seed(cfg.gen.seed, kStreamHardness));
  write_corpus(bundle, corpus_dir(cfg));
}

RunRecord cmd_run(const ExperimentConfig& cfg, double gamma, int n_inject, std::uint64_t seed) {
  const CorpusBundle corpus = load_corpus_checked(cfg);
  const RunKey key{gamma, n_inject, seed};
  const fs::path dir = runs_dir(cfg) / run_dir_name(key);
  return run_triple(corpus, cfg, key, &dir);
}

std::vector<RunRecord> cmd_sweep(const ExperimentConfig& cfg, int workers) {
  if (workers < 1) throw std::runtime_error("cmd_sweep: workers must be >= 1");
  const CorpusBundle corpus = load_corpus_checked(cfg);

  std::vector<RunKey> keys;
  for (double gamma : cfg.gamma_grid) {
    for (int inject : cfg.injection_grid) {
      for (std::uint64_t seed : cfg.seeds) keys.push_back(RunKey{gamma, inject, seed});
    }
  }

  std::vector<RunRecord> records(keys.size());
  std::atomic<std::size_t> next{0};
  std::mutex io_mutex;
  auto work = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= keys.size()) return;
      const fs::path dir = runs_dir(cfg) / run_dir_name(keys[i]);
      records[i] = run_triple(corpus, cfg, keys[i], &dir);
      std::lock_guard<std::mutex> lock(io_mutex);
      std::cout << "run " << run_dir_name(keys[i]) << (records[i].ok ? " ok" : " diverged")
                << std::endl;
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();
  }

  write_tables(cfg, records);
  write_sweep_manifest(cfg, records, config_hash(serialized_config(cfg)));
  return records;
}

void cmd_report(const ExperimentConfig& cfg) {
  std::vector<RunRecord> records;
  for (double gamma : cfg.gamma_grid) {
    for (int inject : cfg.injection_grid) {
      for (std::uint64_t seed : cfg.seeds) {
        RunRecord record;
        record.key = RunKey{gamma, inject, seed};
        const fs::path dir = runs_dir(cfg) / run_dir_name(record.key);
        const fs::path eval_path = dir / "eval.csv";
        if (fs::exists(eval_path)) {
          record.metrics = read_eval_csv(eval_path);
          record.ok = true;
        } else if (fs::exists(dir / "status.txt")) {
          record.ok = false;
          record.error = "diverged";
        } else {
          throw std::runtime_error("missing run artifacts: expected " + eval_path.string());
        }
        records.push_back(std::move(record));
      }
    }
  }
  write_tables(cfg, records);
  write_sweep_manifest(cfg, records, config_hash(serialized_config(cfg)));
}

void cmd_plot(const ExperimentConfig& cfg, const std::string& run_name) {
  const fs::path dir = cfg.experiment_dir();
  fs::create_directories(dir / "plots");
  write_focal_curves_svg(dir / "plots" / "focal_curves.svg", cfg.gamma_grid);

  std::vector<fs::path> run_dirs;
  if (!run_name.empty()) {
    const fs::path rd = runs_dir(cfg) / run_name;
    if (!fs::exists(rd)) {
      throw std::runtime_error("missing run directory: expected " + rd.string());
    }
    run_dirs.push_back(rd);
  } else if (fs::exists(runs_dir(cfg))) {
    for (const auto& entry : fs::directory_iterator(runs_dir(cfg))) {
      if (entry.is_directory()) run_dirs.push_back(entry.path());
    }
    std::sort(run_dirs.begin(), run_dirs.end());
  }
  for (const fs::path& rd : run_dirs) {
    const fs::path prob_csv = rd / "prob_hist.csv";
    const fs::path loss_csv = rd / "loss_hist.csv";
    if (!fs::exists(prob_csv) || !fs::exists(loss_csv)) {
      if (!run_name.empty()) {
        throw std::runtime_error("missing histogram artifacts: expected " + prob_csv.string() +
                                 " and " + loss_csv.string());
      }
      continue;  // skip incomplete (e.g. diverged) runs in bulk mode
    }
    const std::string stem = rd.filename().string();
    write_histogram_svg(rd / "prob_hist.svg", read_histogram_csv(prob_csv),
                        "ground-truth probability: " + stem, "probability of ground-truth class");
    write_histogram_svg(rd / "loss_hist.svg", read_histogram_csv(loss_csv),
                        "per-example loss: " + stem, "loss");
  }
}

}  // namespace sclab
