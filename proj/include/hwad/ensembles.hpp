#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hwad/rng.hpp"

namespace hwad::ens {

enum class LearnerKind { logistic, decision_stump_forest };
enum class Strategy { mv, wmv, ranking, stacking };

const char* strategy_name(Strategy s);
Strategy strategy_from_name(const std::string& name);

struct LabeledRow {
  std::vector<double> x;
  int label = 0;
};

// Stroke-level base classifier; emits an AD probability per feature vector.
struct BaseLearner {
  LearnerKind kind = LearnerKind::logistic;
  int task_id = 1;
  double validation_accuracy = 0.5;

  // logistic: weights [dim] + bias
  std::vector<double> weights;
  double bias = 0.0;

  // stump forest
  struct Stump {
    int feature = 0;
    double threshold = 0.0;
    int above_label = 1;  // label when x[feature] > threshold
  };
  std::vector<Stump> stumps;

  double predict(const std::vector<double>& features) const;
};

// Full-batch gradient descent with momentum on L2-regularized logistic loss;
// deterministic (zero init, fixed iteration count).
BaseLearner train_logistic(const std::vector<LabeledRow>& rows, int task_id);

// Bagged one-level decision stumps on bootstrap samples with random feature
// choice, seeded.
BaseLearner train_stump_forest(const std::vector<LabeledRow>& rows, int task_id,
                               std::uint64_t seed);

struct TaskPool {
  int task_id = 1;
  std::vector<BaseLearner> learners;

  double validation_accuracy() const;  // mean over the pool
};

struct Pools {
  std::map<int, TaskPool> by_task;
  std::vector<std::string> warnings;  // skipped tasks etc.
};

// One learner per (task, kind); tasks with fewer than 10 training strokes are
// skipped with a warning. Validation accuracy is measured on val_by_task.
Pools train_base_learners(const std::map<int, std::vector<LabeledRow>>& train_by_task,
                          const std::map<int, std::vector<LabeledRow>>& val_by_task,
                          const std::vector<LearnerKind>& kinds, std::uint64_t seed);

// Subject-level aggregations. Ties always resolve to AD (label 1).
int majority_vote(const std::vector<int>& votes);
int weighted_majority_vote(const std::vector<int>& votes, const std::vector<double>& weights,
                           bool* used_fallback = nullptr);

// Borda-weighted mean of per-task probabilities; tasks ranked by validation
// accuracy (rank r of R gets weight R - r + 1).
int ranking_aggregate(const std::vector<double>& task_mean_probs,
                      const std::vector<double>& task_accuracies);

struct StackingModel {
  std::vector<double> weights;
  double bias = 0.0;
  bool trained = false;

  double predict(const std::vector<double>& task_probs) const;
};

// Meta logistic over per-task mean-probability vectors (one column per task,
// missing tasks imputed 0.5 by the caller).
StackingModel train_stacking(const std::vector<LabeledRow>& subject_rows);

int stacking_aggregate(const std::vector<double>& task_probs, const StackingModel& meta);

}  // namespace hwad::ens
