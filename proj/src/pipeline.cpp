#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <thread>

#include "hwad/csv.hpp"
#include "hwad/errors.hpp"
#include "hwad/experiment.hpp"
#include "hwad/optimizer.hpp"
#include "hwad/preprocessing.hpp"

namespace hwad::cli {

namespace {

// Sequences of every subject in `ids`, robust-scaled and windowed.
std::vector<WindowBatch> build_windows(const FeatureDataset& ds,
                                       const std::set<std::string>& ids,
                                       const prep::RobustScaleParams& scale, int ws,
                                       int stride) {
  std::vector<WindowBatch> out;
  for (const auto& seq : ds.sequences) {
    if (!ids.count(seq.subject_id)) continue;
    const SubjectRecord& subject = ds.subject(seq.subject_id);
    auto rows = prep::robust_transform(seq.rows, scale);
    auto windows = prep::make_windows(rows, ws, stride, seq.task_id, encode_statics(subject),
                                      seq.subject_id, subject.label);
    for (auto& w : windows) {
      prep::window_standardize(w);
      out.push_back(std::move(w));
    }
  }
  return out;
}

prep::RobustScaleParams fit_on_train(const FeatureDataset& ds,
                                     const std::set<std::string>& train_ids) {
  std::vector<std::vector<double>> rows;
  for (const auto& seq : ds.sequences) {
    if (!train_ids.count(seq.subject_id)) continue;
    rows.insert(rows.end(), seq.rows.begin(), seq.rows.end());
  }
  return prep::robust_fit(rows);
}

double window_f1(const std::vector<double>& probs, const std::vector<int>& labels) {
  double tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const int pred = probs[i] >= 0.5 ? 1 : 0;
    if (pred == 1 && labels[i] == 1) ++tp;
    if (pred == 1 && labels[i] == 0) ++fp;
    if (pred == 0 && labels[i] == 1) ++fn;
  }
  const double den = 2.0 * tp + fp + fn;
  return den > 0 ? 2.0 * tp / den : 0.0;
}

struct EvalOutcome {
  cv::Metrics subject_metrics;
  cv::Metrics window_metrics;
  double loss = 0.0;
  double f1 = 0.0;  // window-level, fraction
};

EvalOutcome evaluate_windows(const std::vector<WindowBatch>& windows,
                             const nn::ModelParams& params,
                             const std::pair<double, double>& weights) {
  std::vector<double> probs;
  std::vector<int> labels;
  probs.reserve(windows.size());
  labels.reserve(windows.size());
  std::map<std::string, std::vector<double>> by_subject;
  std::map<std::string, int> subject_label;
  nn::ForwardTrace trace;
  for (const auto& w : windows) {
    const double p = nn::forward(w, params, false, nullptr, &trace);
    probs.push_back(p);
    labels.push_back(w.label);
    by_subject[w.subject_id].push_back(p);
    subject_label[w.subject_id] = w.label;
  }

  EvalOutcome out;
  out.loss = opt::weighted_bce(probs, labels, weights);
  out.f1 = window_f1(probs, labels);

  std::vector<int> window_decisions;
  window_decisions.reserve(probs.size());
  for (double p : probs) window_decisions.push_back(p >= 0.5 ? 1 : 0);
  out.window_metrics = cv::confusion_metrics(window_decisions, labels);

  std::vector<int> decisions, subj_labels;
  for (const auto& [id, subject_probs] : by_subject) {
    decisions.push_back(cv::subject_decision(subject_probs));
    subj_labels.push_back(subject_label[id]);
  }
  out.subject_metrics = cv::confusion_metrics(decisions, subj_labels);
  return out;
}

FoldOutcome train_one_fold(const FeatureDataset& ds, const cv::FoldAssignment& fold,
                           const nn::EncoderConfig& model_cfg, const TrainingSpec& training,
                           std::uint64_t seed_base, int ws, int stride) {
  const std::uint64_t seed = cv::fold_seed(seed_base, fold.fold_index);
  Rng init_rng(derive_seed(seed, 1));
  Rng dropout_rng(derive_seed(seed, 2));
  Rng shuffle_rng(derive_seed(seed, 3));

  const auto scale = fit_on_train(ds, fold.train);
  const auto train_windows = build_windows(ds, fold.train, scale, ws, stride);
  const auto val_windows = build_windows(ds, fold.validation, scale, ws, stride);
  const auto test_windows = build_windows(ds, fold.test, scale, ws, stride);
  if (train_windows.empty() || val_windows.empty() || test_windows.empty()) {
    throw DataError("fold " + std::to_string(fold.fold_index) + ": empty split");
  }

  std::vector<int> train_labels;
  train_labels.reserve(train_windows.size());
  for (const auto& w : train_windows) train_labels.push_back(w.label);
  const auto weights = opt::class_weights(train_labels);

  nn::EncoderConfig cfg = model_cfg;
  cfg.feature_dim = ds.feature_dim();
  nn::ModelParams params = nn::ModelParams::init(cfg, init_rng);
  auto optim = opt::OptimState::init(params.flat.size());
  opt::PlateauScheduler plateau;
  opt::EarlyStopper stopper;
  stopper.patience = training.early_stop_patience;

  std::string log = "step,split,loss,f1,lr,grad_norm\n";
  auto log_line = [&log](long step, const char* split, double loss, double f1, double lr,
                         double grad_norm, bool has_f1, bool has_grad) {
    log += std::to_string(step);
    log += ',';
    log += split;
    log += ',';
    log += csv::format_double(loss);
    log += ',';
    if (has_f1) log += csv::format_double(f1);
    log += ',';
    log += csv::format_double(lr);
    log += ',';
    if (has_grad) log += csv::format_double(grad_norm);
    log += '\n';
  };

  std::vector<std::size_t> order(train_windows.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t batch_size = static_cast<std::size_t>(training.batch_size);
  const std::size_t steps_per_epoch = (order.size() + batch_size - 1) / batch_size;

  std::vector<double> grads(params.flat.size(), 0.0);
  nn::ForwardTrace trace;
  long step = 0;
  bool stop = false;

  auto validate = [&](bool epoch_end) {
    const EvalOutcome val = evaluate_windows(val_windows, params, weights);
    log_line(step, "val", val.loss, val.f1, optim.lr, 0.0, true, false);
    if (stopper.update(val.f1)) stop = true;
    if (epoch_end) plateau.step(val.f1, optim);
  };

  for (int epoch = 0; epoch < training.epochs && !stop; ++epoch) {
    shuffle_rng.shuffle(order);
    std::size_t offset = 0;
    std::size_t batch_index = 0;
    while (offset < order.size() && !stop) {
      const std::size_t end = std::min(offset + batch_size, order.size());
      const auto n = static_cast<double>(end - offset);

      std::fill(grads.begin(), grads.end(), 0.0);
      double batch_loss = 0.0;
      for (std::size_t i = offset; i < end; ++i) {
        const WindowBatch& w = train_windows[order[i]];
        const double p = nn::forward(w, params, true, &dropout_rng, &trace);
        const double pc = std::clamp(p, 1e-7, 1.0 - 1e-7);
        const double wy = w.label == 1 ? weights.second : weights.first;
        batch_loss += w.label == 1 ? -wy * std::log(pc) : -wy * std::log(1.0 - pc);
        // d(mean loss)/d(prob) for this sample; zero when clamped.
        double dprob = 0.0;
        if (p > 1e-7 && p < 1.0 - 1e-7) {
          dprob = (w.label == 1 ? -wy / p : wy / (1.0 - p)) / n;
        }
        nn::backward(trace, params, dprob, grads);
      }
      batch_loss /= n;
      if (std::isnan(batch_loss)) {
        throw NumericError("fold " + std::to_string(fold.fold_index) + " step " +
                           std::to_string(step) + ": loss is NaN");
      }
      const double grad_norm = opt::clip_gradients(grads, 1.0);
      opt::adamw_step(params.flat, grads, optim, &params.manifest);
      ++step;
      log_line(step, "train", batch_loss, 0.0, optim.lr, grad_norm, false, true);

      ++batch_index;
      if (batch_index == (steps_per_epoch + 1) / 2 && steps_per_epoch > 1) {
        validate(false);  // half-epoch validation
      }
      offset = end;
    }
    if (!stop) validate(true);
  }

  const EvalOutcome test = evaluate_windows(test_windows, params, weights);
  log_line(step, "test", test.loss, test.f1, optim.lr, 0.0, true, false);

  FoldOutcome out;
  out.fold_index = fold.fold_index;
  out.subject_metrics = test.subject_metrics;
  out.secondary_metrics = test.window_metrics;
  out.train_log_csv = std::move(log);
  out.checkpoint = nn::checkpoint_serialize(params);
  return out;
}

CellResult finish_cell(std::string model, int ws, int stride, std::vector<FoldOutcome> folds) {
  CellResult result;
  result.model = std::move(model);
  result.ws = ws;
  result.stride = stride;
  std::sort(folds.begin(), folds.end(),
            [](const FoldOutcome& a, const FoldOutcome& b) { return a.fold_index < b.fold_index; });
  result.folds = std::move(folds);
  std::vector<cv::Metrics> subject, secondary;
  for (const auto& f : result.folds) {
    subject.push_back(f.subject_metrics);
    secondary.push_back(f.secondary_metrics);
  }
  result.subject_report = cv::aggregate_folds(subject);
  result.secondary_report = cv::aggregate_folds(secondary);
  return result;
}

// Runs fn(fold_index) over all folds with up to `jobs` workers.
template <typename Fn>
void for_each_fold(int n_folds, int jobs, Fn&& fn) {
  if (jobs <= 1) {
    for (int f = 0; f < n_folds; ++f) fn(f);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> workers;
  std::exception_ptr error;
  std::mutex error_mutex;
  const int n_workers = std::min(jobs, n_folds);
  for (int w = 0; w < n_workers; ++w) {
    workers.emplace_back([&]() {
      while (true) {
        const int f = next.fetch_add(1);
        if (f >= n_folds) return;
        try {
          fn(f);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

CellResult run_training_cell(const FeatureDataset& ds, const nn::EncoderConfig& model_cfg,
                             const TrainingSpec& training, std::uint64_t seed_base, int ws,
                             int stride) {
  const auto folds = cv::stratified_subject_folds(ds.subjects, training.folds, seed_base,
                                                  training.val_fraction);
  std::vector<FoldOutcome> outcomes(folds.size());
  for_each_fold(static_cast<int>(folds.size()), training.jobs, [&](int f) {
    outcomes[static_cast<std::size_t>(f)] = train_one_fold(
        ds, folds[static_cast<std::size_t>(f)], model_cfg, training, seed_base, ws, stride);
  });
  return finish_cell(nn::cell_name(model_cfg.cell), ws, stride, std::move(outcomes));
}

CellResult evaluate_checkpoints(const FeatureDataset& ds, const std::vector<std::string>& blobs,
                                const TrainingSpec& training, std::uint64_t seed_base, int ws,
                                int stride) {
  const auto folds = cv::stratified_subject_folds(ds.subjects, training.folds, seed_base,
                                                  training.val_fraction);
  if (blobs.size() != folds.size()) {
    throw DataError("expected " + std::to_string(folds.size()) + " checkpoints, got " +
                    std::to_string(blobs.size()));
  }
  std::vector<FoldOutcome> outcomes(folds.size());
  std::string model_name = "?";
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const nn::ModelParams params = nn::checkpoint_deserialize(blobs[f]);
    model_name = nn::cell_name(params.config.cell);
    const auto scale = fit_on_train(ds, folds[f].train);
    const auto test_windows = build_windows(ds, folds[f].test, scale, ws, stride);

    std::vector<int> train_labels;
    for (const auto& seq : ds.sequences) {
      if (folds[f].train.count(seq.subject_id)) {
        train_labels.push_back(ds.subject(seq.subject_id).label);
      }
    }
    const auto weights = opt::class_weights(train_labels);
    const EvalOutcome test = evaluate_windows(test_windows, params, weights);
    FoldOutcome out;
    out.fold_index = folds[f].fold_index;
    out.subject_metrics = test.subject_metrics;
    out.secondary_metrics = test.window_metrics;
    outcomes[f] = std::move(out);
  }
  return finish_cell(model_name, ws, stride, std::move(outcomes));
}

// ---------------------------------------------------------------------------
// Ensembles
// ---------------------------------------------------------------------------

namespace {

using TaskRows = std::map<int, std::vector<ens::LabeledRow>>;

TaskRows collect_rows(const FeatureDataset& ds, const std::set<std::string>& ids,
                      const prep::RobustScaleParams& scale) {
  TaskRows by_task;
  for (const auto& seq : ds.sequences) {
    if (!ids.count(seq.subject_id)) continue;
    const int label = ds.subject(seq.subject_id).label;
    const auto rows = prep::robust_transform(seq.rows, scale);
    for (const auto& row : rows) {
      by_task[seq.task_id].push_back(ens::LabeledRow{row, label});
    }
  }
  return by_task;
}

// Per-task mean probability over all of the subject's strokes and learners;
// missing tasks are imputed 0.5.
std::vector<double> subject_task_probs(const FeatureDataset& ds, const std::string& subject_id,
                                       const prep::RobustScaleParams& scale,
                                       const ens::Pools& pools,
                                       const std::vector<int>& task_order) {
  std::map<int, std::pair<double, std::size_t>> acc;  // task -> (sum, count)
  for (const auto& seq : ds.sequences) {
    if (seq.subject_id != subject_id) continue;
    const auto pool_it = pools.by_task.find(seq.task_id);
    if (pool_it == pools.by_task.end()) continue;
    const auto rows = prep::robust_transform(seq.rows, scale);
    for (const auto& row : rows) {
      for (const auto& learner : pool_it->second.learners) {
        auto& slot = acc[seq.task_id];
        slot.first += learner.predict(row);
        slot.second += 1;
      }
    }
  }
  std::vector<double> probs;
  probs.reserve(task_order.size());
  for (int task : task_order) {
    const auto it = acc.find(task);
    probs.push_back(it == acc.end() || it->second.second == 0
                        ? 0.5
                        : it->second.first / static_cast<double>(it->second.second));
  }
  return probs;
}

int decide_subject(const FeatureDataset& ds, const std::string& subject_id,
                   const prep::RobustScaleParams& scale, const ens::Pools& pools,
                   const std::vector<int>& task_order, ens::Strategy strategy,
                   const ens::StackingModel& meta) {
  switch (strategy) {
    case ens::Strategy::mv:
    case ens::Strategy::wmv: {
      std::vector<int> votes;
      std::vector<double> weights;
      for (const auto& seq : ds.sequences) {
        if (seq.subject_id != subject_id) continue;
        const auto pool_it = pools.by_task.find(seq.task_id);
        if (pool_it == pools.by_task.end()) continue;
        const auto rows = prep::robust_transform(seq.rows, scale);
        for (const auto& row : rows) {
          for (const auto& learner : pool_it->second.learners) {
            votes.push_back(learner.predict(row) >= 0.5 ? 1 : 0);
            weights.push_back(learner.validation_accuracy);
          }
        }
      }
      if (votes.empty()) return 1;
      return strategy == ens::Strategy::mv ? ens::majority_vote(votes)
                                           : ens::weighted_majority_vote(votes, weights);
    }
    case ens::Strategy::ranking: {
      std::vector<double> probs = subject_task_probs(ds, subject_id, scale, pools, task_order);
      std::vector<double> accuracies;
      accuracies.reserve(task_order.size());
      for (int task : task_order) {
        accuracies.push_back(pools.by_task.at(task).validation_accuracy());
      }
      return ens::ranking_aggregate(probs, accuracies);
    }
    case ens::Strategy::stacking: {
      const auto probs = subject_task_probs(ds, subject_id, scale, pools, task_order);
      return ens::stacking_aggregate(probs, meta);
    }
  }
  return 1;
}

}  // namespace

CellResult run_ensemble_cell(const FeatureDataset& ds, const EnsembleSpec& spec,
                             ens::Strategy strategy, const TrainingSpec& training,
                             std::uint64_t seed_base) {
  const auto folds = cv::stratified_subject_folds(ds.subjects, training.folds, seed_base,
                                                  training.val_fraction);
  std::vector<FoldOutcome> outcomes;
  for (const auto& fold : folds) {
    const std::uint64_t seed = cv::fold_seed(seed_base, fold.fold_index);
    const auto scale = fit_on_train(ds, fold.train);
    const auto train_rows = collect_rows(ds, fold.train, scale);
    const auto val_rows = collect_rows(ds, fold.validation, scale);
    const auto pools = ens::train_base_learners(train_rows, val_rows, spec.kinds, seed);
    if (pools.by_task.empty()) {
      throw DataError("fold " + std::to_string(fold.fold_index) + ": no usable task pools");
    }

    std::vector<int> task_order;
    for (const auto& [task, pool] : pools.by_task) task_order.push_back(task);

    ens::StackingModel meta;
    if (strategy == ens::Strategy::stacking) {
      std::vector<ens::LabeledRow> meta_rows;
      for (const auto& id : fold.train) {
        meta_rows.push_back(ens::LabeledRow{
            subject_task_probs(ds, id, scale, pools, task_order), ds.subject(id).label});
      }
      meta = ens::train_stacking(meta_rows);
    }

    std::vector<int> decisions, labels;
    std::vector<int> stroke_decisions, stroke_labels;
    for (const auto& id : fold.test) {
      decisions.push_back(decide_subject(ds, id, scale, pools, task_order, strategy, meta));
      labels.push_back(ds.subject(id).label);
    }
    // Stroke-level view: pooled mean probability per stroke.
    for (const auto& seq : ds.sequences) {
      if (!fold.test.count(seq.subject_id)) continue;
      const auto pool_it = pools.by_task.find(seq.task_id);
      if (pool_it == pools.by_task.end()) continue;
      const int label = ds.subject(seq.subject_id).label;
      const auto rows = prep::robust_transform(seq.rows, scale);
      for (const auto& row : rows) {
        double p = 0.0;
        for (const auto& learner : pool_it->second.learners) p += learner.predict(row);
        p /= static_cast<double>(pool_it->second.learners.size());
        stroke_decisions.push_back(p >= 0.5 ? 1 : 0);
        stroke_labels.push_back(label);
      }
    }

    FoldOutcome out;
    out.fold_index = fold.fold_index;
    out.subject_metrics = cv::confusion_metrics(decisions, labels);
    out.secondary_metrics = cv::confusion_metrics(stroke_decisions, stroke_labels);
    outcomes.push_back(std::move(out));
  }
  return finish_cell(ens::strategy_name(strategy), 0, 0, std::move(outcomes));
}

}  // namespace hwad::cli
