#include "sclab/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "sclab/serialize.hpp"

namespace sclab {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> items;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      items.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  const std::string last = trim(cur);
  if (!last.empty() || !items.empty()) items.push_back(last);
  return items;
}

bool parse_bool(const std::string& v, const std::string& context) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::runtime_error(context + ": expected true/false, got '" + v + "'");
}

[[noreturn]] void fail(const std::string& context, int line_no, const std::string& msg) {
  throw std::runtime_error(context + ":" + std::to_string(line_no) + ": " + msg);
}

}  // namespace

void ExperimentConfig::validate() const {
  if (name.empty()) throw std::runtime_error("config: experiment name must not be empty");
  if (gamma_grid.empty() || injection_grid.empty() || seeds.empty()) {
    throw std::runtime_error("config: gamma_grid, injection_grid and seeds must be nonempty");
  }
  for (double g : gamma_grid) {
    if (g < 0.0) throw std::runtime_error("config: gamma values must be >= 0");
  }
  for (int n : injection_grid) {
    if (n < 0) throw std::runtime_error("config: injection counts must be >= 0");
  }
  gen.validate();
  if (model.hidden_dim < 1) throw std::runtime_error("config: hidden_dim must be >= 1");
  train.validate();
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& context) {
  ExperimentConfig cfg;
  bool optim_epochs_set = false;
  bool max_epochs_set = false;

  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(context, line_no, "malformed section header '" + line + "'");
      section = line.substr(1, line.size() - 2);
      if (section != "experiment" && section != "gen" && section != "model" &&
          section != "train" && section != "optim") {
        fail(context, line_no, "unknown section '" + section + "'");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(context, line_no, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty()) fail(context, line_no, "key '" + key + "' outside any section");
    const std::string where = context + ":" + std::to_string(line_no);

    if (section == "experiment") {
      if (key == "name") {
        cfg.name = value;
      } else if (key == "output_dir") {
        cfg.output_dir = value;
      } else if (key == "gamma_grid") {
        cfg.gamma_grid.clear();
        for (const auto& item : split_list(value)) {
          cfg.gamma_grid.push_back(parse_double(item, where));
        }
      } else if (key == "injection_grid") {
        cfg.injection_grid.clear();
        for (const auto& item : split_list(value)) {
          cfg.injection_grid.push_back(static_cast<int>(parse_long(item, where)));
        }
      } else if (key == "seeds") {
        cfg.seeds.clear();
        for (const auto& item : split_list(value)) {
          cfg.seeds.push_back(static_cast<std::uint64_t>(parse_long(item, where)));
        }
      } else {
        fail(context, line_no, "unknown key '" + key + "' in [experiment]");
      }
    } else if (section == "gen") {
      if (key == "d_g") {
        cfg.gen.d_g = static_cast<int>(parse_long(value, where));
      } else if (key == "d_s") {
        cfg.gen.d_s = static_cast<int>(parse_long(value, where));
      } else if (key == "n_train") {
        cfg.gen.n_train = static_cast<int>(parse_long(value, where));
      } else if (key == "n_val") {
        cfg.gen.n_val = static_cast<int>(parse_long(value, where));
      } else if (key == "n_test") {
        cfg.gen.n_test = static_cast<int>(parse_long(value, where));
      } else if (key == "n_challenge_per_cell") {
        cfg.gen.n_challenge_per_cell = static_cast<int>(parse_long(value, where));
      } else if (key == "bias_rate") {
        cfg.gen.bias_rate = parse_double(value, where);
      } else if (key == "counterexample_rate") {
        cfg.gen.counterexample_rate = parse_double(value, where);
      } else if (key == "noise_sigma") {
        cfg.gen.noise_sigma = parse_double(value, where);
      } else if (key == "mismatch_shift") {
        cfg.gen.mismatch_shift = parse_double(value, where);
      } else if (key == "seed") {
        cfg.gen.seed = static_cast<std::uint64_t>(parse_long(value, where));
      } else {
        fail(context, line_no, "unknown key '" + key + "' in [gen]");
      }
    } else if (section == "model") {
      if (key == "hidden_dim") {
        cfg.model.hidden_dim = static_cast<int>(parse_long(value, where));
      } else {
        fail(context, line_no, "unknown key '" + key + "' in [model]");
      }
    } else if (section == "train") {
      if (key == "loss") {
        if (value == "ce") {
          cfg.train.loss.kind = LossKind::CrossEntropy;
        } else if (value == "focal") {
          cfg.train.loss.kind = LossKind::Focal;
        } else if (value == "dfl") {
          cfg.train.loss.kind = LossKind::DebiasedFocal;
        } else if (value == "poe") {
          cfg.train.loss.kind = LossKind::ProductOfExperts;
        } else {
          fail(context, line_no, "unknown loss '" + value + "' (ce|focal|dfl|poe)");
        }
      } else if (key == "gamma") {
        cfg.train.loss.gamma = parse_double(value, where);
      } else if (key == "clamp_eps") {
        cfg.train.loss.clamp_eps = parse_double(value, where);
      } else if (key == "reduction") {
        if (value == "mean") {
          cfg.train.loss.reduction = Reduction::Mean;
        } else if (value == "sum") {
          cfg.train.loss.reduction = Reduction::Sum;
        } else {
          fail(context, line_no, "unknown reduction '" + value + "' (mean|sum)");
        }
      } else if (key == "early_stopping") {
        cfg.train.early_stopping = parse_bool(value, where);
      } else if (key == "validation_split") {
        if (value == "matched") {
          cfg.train.validation_split = ValSplit::Matched;
        } else if (value == "mismatched") {
          cfg.train.validation_split = ValSplit::Mismatched;
        } else {
          fail(context, line_no, "unknown validation_split '" + value + "'");
        }
      } else if (key == "max_epochs") {
        cfg.train.max_epochs = static_cast<int>(parse_long(value, where));
        max_epochs_set = true;
      } else if (key == "seed") {
        cfg.train.seed = static_cast<std::uint64_t>(parse_long(value, where));
      } else if (key == "bias_model_source") {
        if (value == "none") {
          cfg.train.bias_model_source = {BiasSource::None, ""};
        } else if (value == "train_shortcut_first") {
          cfg.train.bias_model_source = {BiasSource::TrainShortcutOnlyFirst, ""};
        } else if (value.rfind("checkpoint:", 0) == 0) {
          cfg.train.bias_model_source = {BiasSource::Checkpoint,
                                         value.substr(std::string("checkpoint:").size())};
        } else {
          fail(context, line_no,
               "unknown bias_model_source '" + value +
                   "' (none|train_shortcut_first|checkpoint:<path>)");
        }
      } else {
        fail(context, line_no, "unknown key '" + key + "' in [train]");
      }
    } else if (section == "optim") {
      if (key == "kind") {
        if (value == "adamw") {
          cfg.train.optim.kind = OptimKind::AdamW;
        } else if (value == "sgd") {
          cfg.train.optim.kind = OptimKind::Sgd;
        } else {
          fail(context, line_no, "unknown optimizer '" + value + "' (adamw|sgd)");
        }
      } else if (key == "peak_lr") {
        cfg.train.optim.peak_lr = parse_double(value, where);
      } else if (key == "adam_eps") {
        cfg.train.optim.adam_eps = parse_double(value, where);
      } else if (key == "beta1") {
        cfg.train.optim.beta1 = parse_double(value, where);
      } else if (key == "beta2") {
        cfg.train.optim.beta2 = parse_double(value, where);
      } else if (key == "weight_decay") {
        cfg.train.optim.weight_decay = parse_double(value, where);
      } else if (key == "clip_norm") {
        if (value == "none") {
          cfg.train.optim.clip_norm.reset();
        } else {
          cfg.train.optim.clip_norm = parse_double(value, where);
        }
      } else if (key == "warmup_fraction") {
        cfg.train.optim.warmup_fraction = parse_double(value, where);
      } else if (key == "shrink_factor") {
        cfg.train.optim.shrink_factor = parse_double(value, where);
      } else if (key == "batch_size") {
        cfg.train.optim.batch_size = static_cast<int>(parse_long(value, where));
      } else if (key == "epochs") {
        cfg.train.optim.epochs = static_cast<int>(parse_long(value, where));
        optim_epochs_set = true;
      } else {
        fail(context, line_no, "unknown key '" + key + "' in [optim]");
      }
    }
  }

  // max_epochs is authoritative for the loop; [optim] epochs mirrors it so
  // the AdamW schedule length and the loop never disagree.
  if (optim_epochs_set && max_epochs_set &&
      cfg.train.optim.epochs != cfg.train.max_epochs) {
    throw std::runtime_error(context + ": [optim] epochs and [train] max_epochs disagree");
  }
  if (optim_epochs_set && !max_epochs_set) cfg.train.max_epochs = cfg.train.optim.epochs;
  cfg.train.optim.epochs = cfg.train.max_epochs;

  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

std::string config_hash(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  static const char* hex = "0123456789abcdef";
  for (int i = 15; i >= 0; --i) {
    buf[i] = hex[h & 0xf];
    h >>= 4;
  }
  buf[16] = '\0';
  return std::string(buf);
}

}  // namespace sclab
