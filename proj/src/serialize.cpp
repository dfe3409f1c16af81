#include "sclab/serialize.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>
#include <vector>

#include "sclab/version.hpp"

namespace sclab {

namespace fs = std::filesystem;

std::string fmt_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& text, const std::string& context) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{} || res.ptr != last) {
    throw std::runtime_error(context + ": cannot parse real number from '" + text + "'");
  }
  return v;
}

long parse_long(const std::string& text, const std::string& context) {
  long v = 0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{} || res.ptr != last) {
    throw std::runtime_error(context + ": cannot parse integer from '" + text + "'");
  }
  return v;
}

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);  // binary: no newline translation
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path.string());
  return in;
}

void write_array(std::ofstream& out, const char* name, const std::vector<double>& v) {
  out << name;
  for (double x : v) out << ' ' << fmt_double(x);
  out << '\n';
}

std::vector<double> read_array(std::istringstream& line, const std::string& context,
                               std::size_t expected) {
  std::vector<double> v;
  v.reserve(expected);
  std::string tok;
  while (line >> tok) v.push_back(parse_double(tok, context));
  if (v.size() != expected) {
    throw std::runtime_error(context + ": expected " + std::to_string(expected) +
                             " entries, found " + std::to_string(v.size()));
  }
  return v;
}

std::vector<std::string> split_csv(const std::string& line) {
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
  return fields;
}

int label_from_name(const std::string& name, const std::string& context) {
  if (name == "entailment") return kEntailment;
  if (name == "neutral") return kNeutral;
  if (name == "contradiction") return kContradiction;
  throw std::runtime_error(context + ": unknown label '" + name + "'");
}

HeuristicKind kind_from_name(const std::string& name, const std::string& context) {
  if (name == "lexical_overlap") return HeuristicKind::LexicalOverlap;
  if (name == "subsequence") return HeuristicKind::Subsequence;
  if (name == "constituent") return HeuristicKind::Constituent;
  throw std::runtime_error(context + ": unknown heuristic kind '" + name + "'");
}

void write_split(const fs::path& path, const std::vector<Example>& examples, int d_g, int d_s) {
  std::ofstream out = open_out(path);
  out << "label,heuristic_kind,subcase,hard";
  for (int i = 0; i < d_g; ++i) out << ",g" << i;
  for (int i = 0; i < d_s; ++i) out << ",s" << i;
  out << '\n';
  for (const Example& ex : examples) {
    out << label_name(ex.label) << ',';
    if (ex.heuristic_tag) {
      out << heuristic_kind_name(ex.heuristic_tag->kind) << ','
          << subcase_name(ex.heuristic_tag->subcase) << ',';
    } else {
      out << ",,";
    }
    if (ex.hard) out << (*ex.hard ? '1' : '0');
    for (double x : ex.genuine) out << ',' << fmt_double(x);
    for (double x : ex.shortcut) out << ',' << fmt_double(x);
    out << '\n';
  }
}

std::vector<Example> read_split(const fs::path& path, int d_g, int d_s) {
  std::ifstream in = open_in(path);
  const std::string context = path.string();
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(context + ": missing header");
  std::vector<Example> out;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    const std::size_t expected = 4 + static_cast<std::size_t>(d_g) + d_s;
    if (fields.size() != expected) {
      throw std::runtime_error(context + ": row " + std::to_string(row) + " has " +
                               std::to_string(fields.size()) + " fields, expected " +
                               std::to_string(expected));
    }
    Example ex;
    ex.label = label_from_name(fields[0], context);
    if (!fields[1].empty() || !fields[2].empty()) {
      HeuristicTag tag;
      tag.kind = kind_from_name(fields[1], context);
      if (fields[2] == "entailed") {
        tag.subcase = Subcase::Entailed;
      } else if (fields[2] == "non_entailed") {
        tag.subcase = Subcase::NonEntailed;
      } else {
        throw std::runtime_error(context + ": unknown subcase '" + fields[2] + "'");
      }
      ex.heuristic_tag = tag;
    }
    if (!fields[3].empty()) ex.hard = fields[3] == "1";
    ex.genuine.reserve(d_g);
    for (int i = 0; i < d_g; ++i) ex.genuine.push_back(parse_double(fields[4 + i], context));
    ex.shortcut.reserve(d_s);
    for (int i = 0; i < d_s; ++i) {
      ex.shortcut.push_back(parse_double(fields[4 + d_g + i], context));
    }
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace

void save_checkpoint(const fs::path& path, const ModelParams& params, std::uint64_t seed) {
  params.validate();
  std::ofstream out = open_out(path);
  out << kCheckpointMagic << '\n';
  out << "view " << (params.view == View::Full ? "full" : "shortcut_only") << '\n';
  out << "input_dim " << params.input_dim << '\n';
  out << "hidden_dim " << params.hidden_dim << '\n';
  out << "classes " << kNumClasses << '\n';
  out << "seed " << seed << '\n';
  write_array(out, "w1", params.w1);
  write_array(out, "b1", params.b1);
  write_array(out, "w2", params.w2);
  write_array(out, "b2", params.b2);
}

Checkpoint load_checkpoint(const fs::path& path) {
  std::ifstream in = open_in(path);
  const std::string context = path.string();
  std::string line;
  if (!std::getline(in, line) || line != kCheckpointMagic) {
    throw std::runtime_error(context + ": not a checkpoint file (bad magic header)");
  }
  Checkpoint ck;
  auto expect_key = [&](const char* key) -> std::string {
    if (!std::getline(in, line)) throw std::runtime_error(context + ": truncated checkpoint");
    std::istringstream ss(line);
    std::string k, v;
    ss >> k >> v;
    if (k != key) {
      throw std::runtime_error(context + ": expected key '" + key + "', found '" + k + "'");
    }
    return v;
  };
  const std::string view = expect_key("view");
  if (view == "full") {
    ck.params.view = View::Full;
  } else if (view == "shortcut_only") {
    ck.params.view = View::ShortcutOnly;
  } else {
    throw std::runtime_error(context + ": unknown view '" + view + "'");
  }
  ck.params.input_dim = static_cast<int>(parse_long(expect_key("input_dim"), context));
  ck.params.hidden_dim = static_cast<int>(parse_long(expect_key("hidden_dim"), context));
  const long classes = parse_long(expect_key("classes"), context);
  if (classes != kNumClasses) {
    throw std::runtime_error(context + ": checkpoint has " + std::to_string(classes) +
                             " classes, expected " + std::to_string(kNumClasses));
  }
  ck.seed = static_cast<std::uint64_t>(parse_long(expect_key("seed"), context));
  const auto h = static_cast<std::size_t>(ck.params.hidden_dim);
  const auto d = static_cast<std::size_t>(ck.params.input_dim);
  auto read_tensor = [&](const char* key, std::size_t n) {
    if (!std::getline(in, line)) throw std::runtime_error(context + ": truncated checkpoint");
    std::istringstream ss(line);
    std::string k;
    ss >> k;
    if (k != key) {
      throw std::runtime_error(context + ": expected tensor '" + key + "', found '" + k + "'");
    }
    return read_array(ss, context, n);
  };
  ck.params.w1 = read_tensor("w1", h * d);
  ck.params.b1 = read_tensor("b1", h);
  ck.params.w2 = read_tensor("w2", static_cast<std::size_t>(kNumClasses) * h);
  ck.params.b2 = read_tensor("b2", kNumClasses);
  ck.params.validate();
  return ck;
}

void write_corpus(const CorpusBundle& bundle, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create corpus directory " + dir.string());
  const GenSpec& gs = bundle.gen_spec;
  std::ofstream m = open_out(dir / "manifest.txt");
  m << "version " << bundle.version << '\n';
  m << "d_g " << gs.d_g << '\n';
  m << "d_s " << gs.d_s << '\n';
  m << "n_train " << gs.n_train << '\n';
  m << "n_val " << gs.n_val << '\n';
  m << "n_test " << gs.n_test << '\n';
  m << "n_challenge_per_cell " << gs.n_challenge_per_cell << '\n';
  m << "bias_rate " << fmt_double(gs.bias_rate) << '\n';
  m << "counterexample_rate " << fmt_double(gs.counterexample_rate) << '\n';
  m << "noise_sigma " << fmt_double(gs.noise_sigma) << '\n';
  m << "mismatch_shift " << fmt_double(gs.mismatch_shift) << '\n';
  m << "seed " << gs.seed << '\n';
  write_split(dir / "train.csv", bundle.train, gs.d_g, gs.d_s);
  write_split(dir / "val_matched.csv", bundle.val_matched, gs.d_g, gs.d_s);
  write_split(dir / "val_mismatched.csv", bundle.val_mismatched, gs.d_g, gs.d_s);
  write_split(dir / "test.csv", bundle.test, gs.d_g, gs.d_s);
  write_split(dir / "challenge.csv", bundle.challenge, gs.d_g, gs.d_s);
  write_split(dir / "challenge_pool.csv", bundle.challenge_pool, gs.d_g, gs.d_s);
}

CorpusBundle read_corpus(const fs::path& dir) {
  const fs::path manifest = dir / "manifest.txt";
  if (!fs::exists(manifest)) {
    throw std::runtime_error("missing corpus manifest: " + manifest.string());
  }
  std::ifstream in = open_in(manifest);
  CorpusBundle bundle;
  GenSpec& gs = bundle.gen_spec;
  std::string key, value;
  const std::string context = manifest.string();
  while (in >> key >> value) {
    if (key == "version") {
      bundle.version = value;
    } else if (key == "d_g") {
      gs.d_g = static_cast<int>(parse_long(value, context));
    } else if (key == "d_s") {
      gs.d_s = static_cast<int>(parse_long(value, context));
    } else if (key == "n_train") {
      gs.n_train = static_cast<int>(parse_long(value, context));
    } else if (key == "n_val") {
      gs.n_val = static_cast<int>(parse_long(value, context));
    } else if (key == "n_test") {
      gs.n_test = static_cast<int>(parse_long(value, context));
    } else if (key == "n_challenge_per_cell") {
      gs.n_challenge_per_cell = static_cast<int>(parse_long(value, context));
    } else if (key == "bias_rate") {
      gs.bias_rate = parse_double(value, context);
    } else if (key == "counterexample_rate") {
      gs.counterexample_rate = parse_double(value, context);
    } else if (key == "noise_sigma") {
      gs.noise_sigma = parse_double(value, context);
    } else if (key == "mismatch_shift") {
      gs.mismatch_shift = parse_double(value, context);
    } else if (key == "seed") {
      gs.seed = static_cast<std::uint64_t>(parse_long(value, context));
    } else {
      throw std::runtime_error(context + ": unknown manifest key '" + key + "'");
    }
  }
  if (bundle.version != kCorpusVersion) {
    throw std::runtime_error(context + ": unsupported corpus version '" + bundle.version + "'");
  }
  bundle.train = read_split(dir / "train.csv", gs.d_g, gs.d_s);
  bundle.val_matched = read_split(dir / "val_matched.csv", gs.d_g, gs.d_s);
  bundle.val_mismatched = read_split(dir / "val_mismatched.csv", gs.d_g, gs.d_s);
  bundle.test = read_split(dir / "test.csv", gs.d_g, gs.d_s);
  bundle.challenge = read_split(dir / "challenge.csv", gs.d_g, gs.d_s);
  bundle.challenge_pool = read_split(dir / "challenge_pool.csv", gs.d_g, gs.d_s);
  const auto check_count = [&](const char* name, std::size_t actual, std::size_t expected) {
    if (actual != expected) {
      throw std::runtime_error(dir.string() + ": split " + name + " has " +
                               std::to_string(actual) + " rows, manifest says " +
                               std::to_string(expected));
    }
  };
  check_count("train", bundle.train.size(), gs.n_train);
  check_count("val_matched", bundle.val_matched.size(), gs.n_val);
  check_count("val_mismatched", bundle.val_mismatched.size(), gs.n_val);
  check_count("test", bundle.test.size(), gs.n_test);
  check_count("challenge", bundle.challenge.size(),
              static_cast<std::size_t>(gs.n_challenge_per_cell) * 6);
  return bundle;
}

}  // namespace sclab
