#include <algorithm>
#include <filesystem>
#include <iostream>

#include "hwad/csv.hpp"
#include "hwad/errors.hpp"
#include "hwad/experiment.hpp"
#include "hwad/tss.hpp"

namespace hwad::cli {

namespace fs = std::filesystem;

namespace {

std::string path_join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

std::string cell_stem(const std::string& model, int ws, int stride) {
  return model + "_w" + std::to_string(ws) + "_s" + std::to_string(stride);
}

std::vector<FeatureSequence> dataset_sequences(const FeatureDataset& ds) { return ds.sequences; }

void write_cell_outputs(const ExperimentConfig& cfg, const CellResult& result) {
  const std::string stem = cell_stem(result.model, result.ws, result.stride);
  csv::write_file_atomic(results_path(cfg, result.model, result.ws, result.stride),
                         result_to_json(result));
  for (const auto& fold : result.folds) {
    if (!fold.train_log_csv.empty()) {
      csv::write_file_atomic(path_join(cfg.output_dir, "logs/" + stem + "_fold" +
                                                           std::to_string(fold.fold_index) + ".csv"),
                             fold.train_log_csv);
    }
    if (!fold.checkpoint.empty()) {
      csv::write_file_atomic(path_join(cfg.output_dir, "checkpoints/" + stem + "_fold" +
                                                           std::to_string(fold.fold_index) + ".ckpt"),
                             fold.checkpoint);
    }
  }
}

}  // namespace

std::string results_path(const ExperimentConfig& cfg, const std::string& model, int ws,
                         int stride) {
  return path_join(cfg.output_dir, "results/" + cell_stem(model, ws, stride) + ".json");
}

FeatureDataset load_dataset(const ExperimentConfig& cfg) {
  const auto subjects = csv::subjects_from_csv(
      csv::read_file(path_join(cfg.output_dir, "subjects.csv")));
  const auto rows = csv::features_from_csv(
      csv::read_file(path_join(cfg.output_dir, "features.csv")));
  if (rows.empty()) throw DataError("features.csv has no rows");
  return build_dataset(subjects, rows);
}

void cmd_generate(const ExperimentConfig& cfg) {
  synth::validate_config(cfg.generator);
  const synth::Cohort cohort = synth::generate_cohort(cfg.generator);

  csv::write_file_atomic(path_join(cfg.output_dir, "subjects.csv"),
                         csv::subjects_to_csv(cohort.subjects));
  csv::write_file_atomic(path_join(cfg.output_dir, "recordings.csv"),
                         csv::recordings_to_csv(cohort.recordings));

  std::size_t strokes = 0, samples = 0;
  for (const auto& rec : cohort.recordings) {
    strokes += rec.strokes.size();
    samples += rec.sample_count();
  }
  std::cout << "cohort: " << cfg.generator.n_ad << " AD + " << cfg.generator.n_hc << " HC, "
            << cohort.recordings.size() << " recordings, " << strokes << " strokes, " << samples
            << " samples\n";
}

void cmd_extract(const ExperimentConfig& cfg) {
  auto recordings = csv::recordings_from_csv(
      csv::read_file(path_join(cfg.output_dir, "recordings.csv")));
  if (recordings.empty()) throw DataError("recordings.csv has no rows");

  std::vector<csv::FeatureRow> rows;
  for (auto& rec : recordings) {
    if (cfg.resegment) {
      std::vector<PenSample> flat;
      flat.reserve(rec.sample_count());
      for (const auto& stroke : rec.strokes) {
        flat.insert(flat.end(), stroke.samples.begin(), stroke.samples.end());
      }
      rec.strokes = kin::segment_strokes(flat, cfg.segmentation);
    }
    const auto features = kin::extract_task_features(rec);
    for (std::size_t i = 0; i < features.size(); ++i) {
      rows.push_back(csv::FeatureRow{rec.subject_id, rec.task_id,
                                     rec.strokes[i].index, features[i]});
    }
  }
  csv::write_file_atomic(path_join(cfg.output_dir, "features.csv"), csv::features_to_csv(rows));
  std::cout << "extracted " << rows.size() << " stroke feature rows\n";
}

void cmd_tss(const ExperimentConfig& cfg) {
  const FeatureDataset ds = load_dataset(cfg);
  const tss::GridScan scan = tss::tss_grid_scan(dataset_sequences(ds), cfg.grid.ws,
                                                cfg.grid.strides);
  csv::write_file_atomic(path_join(cfg.output_dir, "tss_surface.csv"),
                         tss::surface_to_csv(scan));
  const auto& best = scan.best();
  std::cout << "tss argmax: stride " << best.stride << ", window " << best.window << " (tss "
            << best.components.tss() << ")\n";
}

void cmd_train(const ExperimentConfig& cfg, const std::string& model, int ws, int stride) {
  const FeatureDataset ds = load_dataset(cfg);
  nn::EncoderConfig model_cfg = cfg.model;
  if (!model.empty()) model_cfg.cell = nn::cell_from_name(model);

  std::vector<std::pair<int, int>> cells;
  if (ws > 0 && stride > 0) {
    cells.emplace_back(ws, stride);
  } else {
    for (int w : cfg.grid.ws) {
      for (int s : cfg.grid.strides) cells.emplace_back(w, s);
    }
  }
  for (const auto& [w, s] : cells) {
    const CellResult result = run_training_cell(ds, model_cfg, cfg.training, cfg.seed_base, w, s);
    write_cell_outputs(cfg, result);
    std::cout << nn::cell_name(model_cfg.cell) << " ws " << w << " stride " << s
              << ": accuracy " << cv::format_mean_std(result.subject_report.accuracy) << "\n";
  }
}

void cmd_evaluate(const ExperimentConfig& cfg, const std::string& model, int ws, int stride) {
  if (ws <= 0 || stride <= 0) throw ConfigError("evaluate needs --ws and --stride");
  const FeatureDataset ds = load_dataset(cfg);
  const std::string name = model.empty() ? nn::cell_name(cfg.model.cell) : model;
  const std::string stem = cell_stem(name, ws, stride);

  std::vector<std::string> blobs;
  for (int f = 0; f < cfg.training.folds; ++f) {
    blobs.push_back(csv::read_file(path_join(
        cfg.output_dir, "checkpoints/" + stem + "_fold" + std::to_string(f) + ".ckpt")));
  }
  const CellResult result =
      evaluate_checkpoints(ds, blobs, cfg.training, cfg.seed_base, ws, stride);
  csv::write_file_atomic(path_join(cfg.output_dir, "results/" + stem + "_eval.json"),
                         result_to_json(result));
  std::cout << render_report(result);
}

void cmd_ensemble(const ExperimentConfig& cfg, const std::string& strategy) {
  const FeatureDataset ds = load_dataset(cfg);
  std::vector<ens::Strategy> strategies;
  if (strategy.empty() || strategy == "all") {
    strategies = {ens::Strategy::mv, ens::Strategy::wmv, ens::Strategy::ranking,
                  ens::Strategy::stacking};
  } else {
    strategies = {ens::strategy_from_name(strategy)};
  }
  for (ens::Strategy s : strategies) {
    const CellResult result = run_ensemble_cell(ds, cfg.ensemble, s, cfg.training, cfg.seed_base);
    write_cell_outputs(cfg, result);
    std::cout << ens::strategy_name(s) << ": accuracy "
              << cv::format_mean_std(result.subject_report.accuracy) << "\n";
  }
}

void cmd_compare(const ExperimentConfig& cfg, const std::vector<std::string>& files) {
  std::vector<std::string> inputs = files;
  if (inputs.empty()) {
    const fs::path dir = fs::path(cfg.output_dir) / "results";
    if (fs::exists(dir)) {
      for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.path().extension() == ".json") inputs.push_back(entry.path().string());
      }
    }
    std::sort(inputs.begin(), inputs.end());
  }
  std::vector<CellResult> results;
  for (const auto& file : inputs) {
    results.push_back(result_from_json(csv::read_file(file)));
  }
  const std::string table = comparison_table(std::move(results));
  csv::write_file_atomic(path_join(cfg.output_dir, "comparison.txt"), table);
  std::cout << table;
}

void cmd_report(const std::string& file) {
  std::cout << render_report(result_from_json(csv::read_file(file)));
}

}  // namespace hwad::cli
