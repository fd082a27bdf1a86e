#include <charconv>
#include <sstream>

#include "hwad/csv.hpp"
#include "hwad/errors.hpp"
#include "hwad/experiment.hpp"

namespace hwad::cli {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

int to_int(const std::string& v, const std::string& key) {
  int out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
    throw ConfigError("config key '" + key + "': bad integer '" + v + "'");
  }
  return out;
}

std::uint64_t to_u64(const std::string& v, const std::string& key) {
  std::uint64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
    throw ConfigError("config key '" + key + "': bad unsigned integer '" + v + "'");
  }
  return out;
}

double to_double(const std::string& v, const std::string& key) {
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
    throw ConfigError("config key '" + key + "': bad number '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config key '" + key + "': bad boolean '" + v + "'");
}

std::vector<int> to_int_list(const std::string& v, const std::string& key) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto dash = item.find('-');
    if (dash != std::string::npos && dash > 0) {
      const int lo = to_int(item.substr(0, dash), key);
      const int hi = to_int(item.substr(dash + 1), key);
      if (hi < lo) throw ConfigError("config key '" + key + "': inverted range '" + item + "'");
      for (int i = lo; i <= hi; ++i) out.push_back(i);
    } else {
      out.push_back(to_int(item, key));
    }
  }
  if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
  return out;
}

synth::Range to_range(const std::string& v, const std::string& key) {
  const auto colon = v.find(':');
  if (colon == std::string::npos) {
    const int n = to_int(v, key);
    return synth::Range{n, n};
  }
  return synth::Range{to_int(v.substr(0, colon), key), to_int(v.substr(colon + 1), key)};
}

}  // namespace

void apply_override(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "seed_base") {
    cfg.seed_base = to_u64(value, key);
  } else if (key == "output_dir") {
    cfg.output_dir = value;
  } else if (key == "segmentation") {
    if (value == "stored") {
      cfg.resegment = false;
    } else if (value == "pen_state") {
      cfg.resegment = true;
      cfg.segmentation = kin::SegmentationMode::pen_state;
    } else if (value == "pen_state_velocity") {
      cfg.resegment = true;
      cfg.segmentation = kin::SegmentationMode::pen_state_velocity;
    } else {
      throw ConfigError("segmentation must be stored, pen_state or pen_state_velocity");
    }
  } else if (key == "generator.seed") {
    cfg.generator.seed = to_u64(value, key);
  } else if (key == "generator.n_ad") {
    cfg.generator.n_ad = to_int(value, key);
  } else if (key == "generator.n_hc") {
    cfg.generator.n_hc = to_int(value, key);
  } else if (key == "generator.tasks") {
    cfg.generator.tasks = value == "all" ? std::vector<int>{} : to_int_list(value, key);
  } else if (key == "generator.samples_per_stroke") {
    cfg.generator.samples_per_stroke = to_range(value, key);
  } else if (key == "generator.strokes_per_task") {
    cfg.generator.strokes_per_task = to_range(value, key);
  } else if (key == "generator.effect.velocity_scale") {
    cfg.generator.effect.velocity_scale = to_double(value, key);
  } else if (key == "generator.effect.jerk_scale") {
    cfg.generator.effect.jerk_scale = to_double(value, key);
  } else if (key == "generator.effect.pause_scale") {
    cfg.generator.effect.pause_scale = to_double(value, key);
  } else if (key == "generator.effect.drift") {
    cfg.generator.effect.drift = to_double(value, key);
  } else if (key == "grid.ws") {
    cfg.grid.ws = to_int_list(value, key);
  } else if (key == "grid.strides") {
    cfg.grid.strides = to_int_list(value, key);
  } else if (key == "model.cell") {
    cfg.model.cell = nn::cell_from_name(value);
  } else if (key == "model.hidden") {
    cfg.model.hidden = to_int(value, key);
  } else if (key == "model.bidirectional") {
    cfg.model.bidirectional = to_bool(value, key);
  } else if (key == "model.dropout") {
    cfg.model.dropout = to_double(value, key);
  } else if (key == "model.embed_dim") {
    cfg.model.embed_dim = to_int(value, key);
  } else if (key == "model.layer_norm") {
    cfg.model.layer_norm = to_bool(value, key);
  } else if (key == "training.epochs") {
    cfg.training.epochs = to_int(value, key);
  } else if (key == "training.batch_size") {
    cfg.training.batch_size = to_int(value, key);
  } else if (key == "training.jobs") {
    cfg.training.jobs = to_int(value, key);
  } else if (key == "training.val_fraction") {
    cfg.training.val_fraction = to_double(value, key);
  } else if (key == "training.early_stop_patience") {
    cfg.training.early_stop_patience = to_int(value, key);
  } else if (key == "training.folds") {
    cfg.training.folds = to_int(value, key);
  } else if (key == "ensemble.kinds") {
    std::vector<ens::LearnerKind> kinds;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item == "logistic") {
        kinds.push_back(ens::LearnerKind::logistic);
      } else if (item == "stump_forest") {
        kinds.push_back(ens::LearnerKind::decision_stump_forest);
      } else if (!item.empty()) {
        throw ConfigError("ensemble.kinds: unknown kind '" + item + "'");
      }
    }
    if (kinds.empty()) throw ConfigError("ensemble.kinds: empty list");
    cfg.ensemble.kinds = std::move(kinds);
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

ExperimentConfig load_config_file(const std::string& path) {
  ExperimentConfig cfg;
  const std::string text = csv::read_file(path);
  std::stringstream ss(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key = value");
    }
    apply_override(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

std::string config_schema_help() {
  return
      "seed_base = 42                      # base seed; fold f uses seed_base + f\n"
      "output_dir = out\n"
      "segmentation = stored               # stored | pen_state | pen_state_velocity\n"
      "generator.seed = 7\n"
      "generator.n_ad = 10\n"
      "generator.n_hc = 10\n"
      "generator.tasks = all               # all, list (1,2,5) or ranges (1-10)\n"
      "generator.samples_per_stroke = 30:60\n"
      "generator.strokes_per_task = 60:66\n"
      "generator.effect.velocity_scale = 0.7\n"
      "generator.effect.jerk_scale = 1.5\n"
      "generator.effect.pause_scale = 1.4\n"
      "generator.effect.drift = 0          # 0 = uniform effect, (0,1] = ramp across strokes\n"
      "grid.ws = 60,70,80\n"
      "grid.strides = 1,2,5\n"
      "model.cell = gru                    # rnn | lstm | gru\n"
      "model.hidden = 128\n"
      "model.bidirectional = true\n"
      "model.dropout = 0.3\n"
      "model.embed_dim = 32\n"
      "model.layer_norm = true\n"
      "training.epochs = 6\n"
      "training.batch_size = 64\n"
      "training.jobs = 1\n"
      "training.val_fraction = 0.15\n"
      "training.early_stop_patience = 10   # half-epoch validations\n"
      "training.folds = 5\n"
      "ensemble.kinds = logistic,stump_forest\n";
}

}  // namespace hwad::cli
