#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hwad/dataset.hpp"
#include "hwad/ensembles.hpp"
#include "hwad/evaluation.hpp"
#include "hwad/kinematics.hpp"
#include "hwad/neural.hpp"
#include "hwad/synth.hpp"

namespace hwad::cli {

struct GridSpec {
  std::vector<int> ws{60, 70, 80};
  std::vector<int> strides{1, 2, 5};
};

struct TrainingSpec {
  int epochs = 6;
  int batch_size = 64;
  int jobs = 1;
  double val_fraction = 0.15;
  int early_stop_patience = 10;  // half-epoch validations
  int folds = 5;
};

struct EnsembleSpec {
  std::vector<ens::LearnerKind> kinds{ens::LearnerKind::logistic,
                                      ens::LearnerKind::decision_stump_forest};
};

// Experiment manifest: one self-describing config file; CLI flags override
// individual keys.
struct ExperimentConfig {
  std::uint64_t seed_base = 42;
  std::string output_dir = "out";
  synth::GeneratorConfig generator;
  GridSpec grid;
  nn::EncoderConfig model;
  TrainingSpec training;
  EnsembleSpec ensemble;
  kin::SegmentationMode segmentation = kin::SegmentationMode::pen_state;
  bool resegment = false;  // re-segment from samples instead of stored strokes
};

ExperimentConfig load_config_file(const std::string& path);
void apply_override(ExperimentConfig& cfg, const std::string& key, const std::string& value);
std::string config_schema_help();

// ---------------------------------------------------------------------------
// Pipelines
// ---------------------------------------------------------------------------

struct FoldOutcome {
  int fold_index = 0;
  cv::Metrics subject_metrics;
  cv::Metrics secondary_metrics;  // window-level (neural) or stroke-level (ensembles)
  std::string train_log_csv;      // step,split,loss,f1,lr,grad_norm
  std::string checkpoint;         // serialized params, neural cells only
};

struct CellResult {
  std::string model;  // cell name or ensemble strategy
  int ws = 0;
  int stride = 0;
  std::vector<FoldOutcome> folds;
  cv::FoldReport subject_report;
  cv::FoldReport secondary_report;
};

// Full k-fold training of one (model, ws, stride) cell.
CellResult run_training_cell(const FeatureDataset& ds, const nn::EncoderConfig& model_cfg,
                             const TrainingSpec& training, std::uint64_t seed_base, int ws,
                             int stride);

// Re-evaluates stored checkpoints on the test folds (no training).
CellResult evaluate_checkpoints(const FeatureDataset& ds, const std::vector<std::string>& blobs,
                                const TrainingSpec& training, std::uint64_t seed_base, int ws,
                                int stride);

// Stroke-level base learners + one subject-level aggregation strategy over
// the same fold assignments as the neural cells.
CellResult run_ensemble_cell(const FeatureDataset& ds, const EnsembleSpec& spec,
                             ens::Strategy strategy, const TrainingSpec& training,
                             std::uint64_t seed_base);

// ---------------------------------------------------------------------------
// Results files
// ---------------------------------------------------------------------------

std::string result_to_json(const CellResult& result);
CellResult result_from_json(const std::string& text);

// Merged "mean (std)" table over several results, sorted by mean accuracy
// (descending; ties by model, ws, stride).
std::string comparison_table(std::vector<CellResult> results);

std::string render_report(const CellResult& result);

// ---------------------------------------------------------------------------
// Commands (throw ConfigError/DataError/NumericError; the CLI maps them to
// exit codes 1/2/3)
// ---------------------------------------------------------------------------

void cmd_generate(const ExperimentConfig& cfg);
void cmd_extract(const ExperimentConfig& cfg);
void cmd_tss(const ExperimentConfig& cfg);
void cmd_train(const ExperimentConfig& cfg, const std::string& model, int ws, int stride);
void cmd_evaluate(const ExperimentConfig& cfg, const std::string& model, int ws, int stride);
void cmd_ensemble(const ExperimentConfig& cfg, const std::string& strategy);
void cmd_compare(const ExperimentConfig& cfg, const std::vector<std::string>& files);
void cmd_report(const std::string& file);

// Shared plumbing.
FeatureDataset load_dataset(const ExperimentConfig& cfg);
std::string results_path(const ExperimentConfig& cfg, const std::string& model, int ws,
                         int stride);

}  // namespace hwad::cli
