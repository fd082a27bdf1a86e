#include "hwad/ensembles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hwad/errors.hpp"

namespace hwad::ens {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Shared logistic trainer: full-batch GD with momentum, zero init.
void fit_logistic(const std::vector<LabeledRow>& rows, std::vector<double>& w, double& b) {
  const std::size_t dim = rows.front().x.size();
  w.assign(dim, 0.0);
  b = 0.0;
  std::vector<double> vw(dim, 0.0);
  double vb = 0.0;
  constexpr int kIters = 400;
  constexpr double kLr = 0.1;
  constexpr double kMomentum = 0.9;
  constexpr double kL2 = 1e-4;
  const double inv_n = 1.0 / static_cast<double>(rows.size());

  std::vector<double> gw(dim);
  for (int it = 0; it < kIters; ++it) {
    std::fill(gw.begin(), gw.end(), 0.0);
    double gb = 0.0;
    for (const auto& row : rows) {
      double z = b;
      for (std::size_t j = 0; j < dim; ++j) z += w[j] * row.x[j];
      const double err = sigmoid(z) - static_cast<double>(row.label);
      for (std::size_t j = 0; j < dim; ++j) gw[j] += err * row.x[j];
      gb += err;
    }
    for (std::size_t j = 0; j < dim; ++j) {
      vw[j] = kMomentum * vw[j] - kLr * (gw[j] * inv_n + kL2 * w[j]);
      w[j] += vw[j];
    }
    vb = kMomentum * vb - kLr * gb * inv_n;
    b += vb;
  }
}

double pool_accuracy(const BaseLearner& learner, const std::vector<LabeledRow>& val) {
  if (val.empty()) return 0.5;
  std::size_t correct = 0;
  for (const auto& row : val) {
    const int pred = learner.predict(row.x) >= 0.5 ? 1 : 0;
    if (pred == row.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(val.size());
}

}  // namespace

const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::mv: return "mv";
    case Strategy::wmv: return "wmv";
    case Strategy::ranking: return "ranking";
    case Strategy::stacking: return "stacking";
  }
  return "?";
}

Strategy strategy_from_name(const std::string& name) {
  if (name == "mv") return Strategy::mv;
  if (name == "wmv") return Strategy::wmv;
  if (name == "ranking") return Strategy::ranking;
  if (name == "stacking") return Strategy::stacking;
  throw ConfigError("unknown ensemble strategy '" + name + "'");
}

double BaseLearner::predict(const std::vector<double>& features) const {
  if (kind == LearnerKind::logistic) {
    double z = bias;
    for (std::size_t j = 0; j < weights.size(); ++j) z += weights[j] * features[j];
    return sigmoid(z);
  }
  // Smoothed vote fraction keeps the probability inside (0, 1).
  double votes = 0.0;
  for (const auto& s : stumps) {
    const int label = features[static_cast<std::size_t>(s.feature)] > s.threshold
                          ? s.above_label
                          : 1 - s.above_label;
    votes += label;
  }
  return (votes + 0.5) / (static_cast<double>(stumps.size()) + 1.0);
}

BaseLearner train_logistic(const std::vector<LabeledRow>& rows, int task_id) {
  if (rows.empty()) throw DataError("train_logistic: no rows");
  BaseLearner learner;
  learner.kind = LearnerKind::logistic;
  learner.task_id = task_id;
  fit_logistic(rows, learner.weights, learner.bias);
  return learner;
}

BaseLearner train_stump_forest(const std::vector<LabeledRow>& rows, int task_id,
                               std::uint64_t seed) {
  if (rows.empty()) throw DataError("train_stump_forest: no rows");
  constexpr int kStumps = 25;
  constexpr int kMaxThresholds = 32;
  const std::size_t n = rows.size();
  const std::size_t dim = rows.front().x.size();

  BaseLearner learner;
  learner.kind = LearnerKind::decision_stump_forest;
  learner.task_id = task_id;
  Rng rng(seed);

  std::vector<std::size_t> sample(n);
  std::vector<double> values(n);
  for (int s = 0; s < kStumps; ++s) {
    for (std::size_t i = 0; i < n; ++i) {
      sample[i] = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n) - 1));
    }
    const int feature = static_cast<int>(rng.uniform_int(0, static_cast<std::int64_t>(dim) - 1));
    for (std::size_t i = 0; i < n; ++i) values[i] = rows[sample[i]].x[static_cast<std::size_t>(feature)];
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());

    BaseLearner::Stump best{feature, sorted.front() - 1.0, 1};
    std::size_t best_err = n + 1;
    const int candidates = std::min<int>(kMaxThresholds, static_cast<int>(n) - 1);
    for (int c = 0; c <= candidates; ++c) {
      const std::size_t idx = candidates > 0
                                  ? static_cast<std::size_t>(c) * (n - 1) / static_cast<std::size_t>(candidates)
                                  : 0;
      const double thr = sorted[idx];
      for (int above : {0, 1}) {
        std::size_t err = 0;
        for (std::size_t i = 0; i < n; ++i) {
          const int pred = values[i] > thr ? above : 1 - above;
          if (pred != rows[sample[i]].label) ++err;
        }
        if (err < best_err) {
          best_err = err;
          best = {feature, thr, above};
        }
      }
    }
    learner.stumps.push_back(best);
  }
  return learner;
}

double TaskPool::validation_accuracy() const {
  if (learners.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& l : learners) acc += l.validation_accuracy;
  return acc / static_cast<double>(learners.size());
}

Pools train_base_learners(const std::map<int, std::vector<LabeledRow>>& train_by_task,
                          const std::map<int, std::vector<LabeledRow>>& val_by_task,
                          const std::vector<LearnerKind>& kinds, std::uint64_t seed) {
  Pools pools;
  for (const auto& [task_id, rows] : train_by_task) {
    if (rows.size() < 10) {
      pools.warnings.push_back("task " + std::to_string(task_id) +
                               " skipped: only " + std::to_string(rows.size()) +
                               " training strokes");
      continue;
    }
    static const std::vector<LabeledRow> kEmpty;
    const auto val_it = val_by_task.find(task_id);
    const auto& val = val_it != val_by_task.end() ? val_it->second : kEmpty;

    TaskPool pool;
    pool.task_id = task_id;
    for (LearnerKind kind : kinds) {
      BaseLearner learner =
          kind == LearnerKind::logistic
              ? train_logistic(rows, task_id)
              : train_stump_forest(rows, task_id,
                                   derive_seed(seed, static_cast<std::uint64_t>(task_id)));
      learner.validation_accuracy = pool_accuracy(learner, val);
      pool.learners.push_back(std::move(learner));
    }
    pools.by_task.emplace(task_id, std::move(pool));
  }
  return pools;
}

int majority_vote(const std::vector<int>& votes) {
  if (votes.empty()) throw DataError("majority_vote on empty votes");
  std::size_t ones = 0;
  for (int v : votes) ones += static_cast<std::size_t>(v == 1);
  const std::size_t zeros = votes.size() - ones;
  return ones >= zeros ? 1 : 0;  // tie -> AD
}

int weighted_majority_vote(const std::vector<int>& votes, const std::vector<double>& weights,
                           bool* used_fallback) {
  if (votes.size() != weights.size() || votes.empty()) {
    throw DataError("weighted_majority_vote: size mismatch or empty input");
  }
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw DataError("weighted_majority_vote: negative weight");
    total += w;
  }
  if (total == 0.0) {
    if (used_fallback != nullptr) *used_fallback = true;
    return majority_vote(votes);
  }
  if (used_fallback != nullptr) *used_fallback = false;
  double w1 = 0.0, w0 = 0.0;
  for (std::size_t i = 0; i < votes.size(); ++i) {
    (votes[i] == 1 ? w1 : w0) += weights[i];
  }
  return w1 >= w0 ? 1 : 0;  // tie -> AD
}

int ranking_aggregate(const std::vector<double>& task_mean_probs,
                      const std::vector<double>& task_accuracies) {
  if (task_mean_probs.empty() || task_mean_probs.size() != task_accuracies.size()) {
    throw DataError("ranking_aggregate: need matching non-empty inputs");
  }
  const std::size_t n = task_mean_probs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return task_accuracies[a] > task_accuracies[b];
  });
  double num = 0.0, den = 0.0;
  for (std::size_t rank = 0; rank < n; ++rank) {
    const double weight = static_cast<double>(n - rank);  // R - r + 1
    num += weight * task_mean_probs[order[rank]];
    den += weight;
  }
  return num / den >= 0.5 ? 1 : 0;  // tie -> AD
}

double StackingModel::predict(const std::vector<double>& task_probs) const {
  if (!trained) throw DataError("stacking meta-learner is untrained");
  double z = bias;
  for (std::size_t j = 0; j < weights.size() && j < task_probs.size(); ++j) {
    z += weights[j] * task_probs[j];
  }
  return sigmoid(z);
}

StackingModel train_stacking(const std::vector<LabeledRow>& subject_rows) {
  if (subject_rows.empty()) throw DataError("train_stacking: no rows");
  StackingModel meta;
  fit_logistic(subject_rows, meta.weights, meta.bias);
  meta.trained = true;
  return meta;
}

int stacking_aggregate(const std::vector<double>& task_probs, const StackingModel& meta) {
  return meta.predict(task_probs) >= 0.5 ? 1 : 0;  // tie -> AD
}

}  // namespace hwad::ens
