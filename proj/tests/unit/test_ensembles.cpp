#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hwad/ensembles.hpp"
#include "hwad/errors.hpp"
#include "hwad/rng.hpp"

using namespace hwad;

namespace {

// Two Gaussian blobs along the first feature.
std::vector<ens::LabeledRow> blob_rows(Rng& rng, int n, double separation) {
  std::vector<ens::LabeledRow> rows;
  for (int i = 0; i < n; ++i) {
    const int label = i % 2;
    ens::LabeledRow row;
    row.label = label;
    row.x = {rng.normal(label == 1 ? separation : -separation, 1.0), rng.normal(0.0, 1.0),
             rng.normal(0.0, 1.0)};
    rows.push_back(std::move(row));
  }
  return rows;
}

double accuracy(const ens::BaseLearner& learner, const std::vector<ens::LabeledRow>& rows) {
  std::size_t ok = 0;
  for (const auto& r : rows) ok += (learner.predict(r.x) >= 0.5 ? 1 : 0) == r.label ? 1 : 0;
  return static_cast<double>(ok) / static_cast<double>(rows.size());
}

}  // namespace

TEST_CASE("logistic learner separates well-separated blobs") {
  Rng rng(1);
  const auto train = blob_rows(rng, 200, 2.0);
  const auto val = blob_rows(rng, 100, 2.0);
  const auto learner = ens::train_logistic(train, 3);
  CHECK(accuracy(learner, val) >= 0.9);
}

TEST_CASE("label-shuffled features give chance-level accuracy") {
  Rng outer(7);
  double mean_acc = 0.0;
  for (int seed = 0; seed < 10; ++seed) {
    Rng rng(static_cast<std::uint64_t>(seed) + 100);
    auto train = blob_rows(rng, 200, 2.0);
    // shuffle labels, breaking the association
    std::vector<int> labels;
    for (const auto& r : train) labels.push_back(r.label);
    rng.shuffle(labels);
    for (std::size_t i = 0; i < train.size(); ++i) train[i].label = labels[i];
    auto val = blob_rows(rng, 200, 2.0);
    std::vector<int> vlabels;
    for (const auto& r : val) vlabels.push_back(r.label);
    rng.shuffle(vlabels);
    for (std::size_t i = 0; i < val.size(); ++i) val[i].label = vlabels[i];
    mean_acc += accuracy(ens::train_logistic(train, 1), val);
  }
  mean_acc /= 10.0;
  CHECK(mean_acc >= 0.4);
  CHECK(mean_acc <= 0.6);
  (void)outer;
}

TEST_CASE("training is deterministic") {
  Rng rng(3);
  const auto rows = blob_rows(rng, 80, 1.0);
  const auto a = ens::train_logistic(rows, 2);
  const auto b = ens::train_logistic(rows, 2);
  CHECK(a.weights == b.weights);
  CHECK(a.bias == b.bias);

  const auto fa = ens::train_stump_forest(rows, 2, 55);
  const auto fb = ens::train_stump_forest(rows, 2, 55);
  REQUIRE(fa.stumps.size() == fb.stumps.size());
  for (std::size_t i = 0; i < fa.stumps.size(); ++i) {
    CHECK(fa.stumps[i].feature == fb.stumps[i].feature);
    CHECK(fa.stumps[i].threshold == fb.stumps[i].threshold);
    CHECK(fa.stumps[i].above_label == fb.stumps[i].above_label);
  }
}

TEST_CASE("stump forest also separates the blobs") {
  Rng rng(9);
  const auto train = blob_rows(rng, 300, 2.5);
  const auto val = blob_rows(rng, 150, 2.5);
  const auto learner = ens::train_stump_forest(train, 1, 4);
  CHECK(accuracy(learner, val) >= 0.85);
}

TEST_CASE("train_base_learners: per-task pools, small tasks skipped with warning") {
  Rng rng(11);
  std::map<int, std::vector<ens::LabeledRow>> train, val;
  train[1] = blob_rows(rng, 60, 2.0);
  train[2] = blob_rows(rng, 6, 2.0);  // below the 10-stroke floor
  val[1] = blob_rows(rng, 30, 2.0);
  const auto pools = ens::train_base_learners(
      train, val, {ens::LearnerKind::logistic, ens::LearnerKind::decision_stump_forest}, 77);
  CHECK(pools.by_task.count(1) == 1);
  CHECK(pools.by_task.count(2) == 0);
  REQUIRE(pools.warnings.size() == 1);
  CHECK(pools.warnings[0].find("task 2") != std::string::npos);
  CHECK(pools.by_task.at(1).learners.size() == 2);
  CHECK(pools.by_task.at(1).validation_accuracy() > 0.5);
}

TEST_CASE("majority_vote semantics") {
  CHECK(ens::majority_vote({1, 1, 0}) == 1);
  CHECK(ens::majority_vote({1, 0}) == 1);  // tie -> AD
  CHECK(ens::majority_vote({0, 0, 0}) == 0);
  CHECK_THROWS_AS(ens::majority_vote({}), DataError);
}

TEST_CASE("weighted_majority_vote semantics") {
  CHECK(ens::weighted_majority_vote({1, 0, 0}, {0.9, 0.4, 0.4}) == 1);  // 0.9 > 0.8
  CHECK(ens::weighted_majority_vote({1}, {0.3}) == 1);
  CHECK(ens::weighted_majority_vote({0}, {0.3}) == 0);

  bool fallback = false;
  CHECK(ens::weighted_majority_vote({0, 1}, {0.0, 0.0}, &fallback) == 1);
  CHECK(fallback);
}

TEST_CASE("WMV with uniform weights equals MV on every pattern up to length 6") {
  for (int len = 1; len <= 6; ++len) {
    for (int pattern = 0; pattern < (1 << len); ++pattern) {
      std::vector<int> votes;
      for (int b = 0; b < len; ++b) votes.push_back((pattern >> b) & 1);
      const std::vector<double> uniform(static_cast<std::size_t>(len), 0.37);
      CHECK(ens::weighted_majority_vote(votes, uniform) == ens::majority_vote(votes));
    }
  }
}

TEST_CASE("ranking_aggregate: Borda weighting") {
  // single task reduces to thresholding
  CHECK(ens::ranking_aggregate({0.6}, {0.9}) == 1);
  CHECK(ens::ranking_aggregate({0.4}, {0.9}) == 0);

  // two tasks, accuracies (0.9, 0.6), probs (0.8, 0.2): weighted mean 0.6
  CHECK(ens::ranking_aggregate({0.8, 0.2}, {0.9, 0.6}) == 1);

  // equal probabilities make the ranking irrelevant
  CHECK(ens::ranking_aggregate({0.7, 0.7, 0.7}, {0.9, 0.5, 0.1}) == 1);
  CHECK(ens::ranking_aggregate({0.3, 0.3, 0.3}, {0.9, 0.5, 0.1}) == 0);
  CHECK(ens::ranking_aggregate({0.5, 0.5}, {0.8, 0.2}) == 1);  // tie -> AD
}

TEST_CASE("stacking: zero meta weights give 0.5 -> AD by tie rule") {
  ens::StackingModel meta;
  meta.weights = {0.0, 0.0};
  meta.bias = 0.0;
  meta.trained = true;
  CHECK(ens::stacking_aggregate({0.2, 0.9}, meta) == 1);

  ens::StackingModel untrained;
  CHECK_THROWS_AS(ens::stacking_aggregate({0.5}, untrained), DataError);
}

TEST_CASE("stacking recovers a perfectly informative column") {
  Rng rng(13);
  std::vector<ens::LabeledRow> rows;
  for (int i = 0; i < 60; ++i) {
    const int label = i % 2;
    ens::LabeledRow r;
    r.label = label;
    r.x = {label == 1 ? 0.9 : 0.1, rng.uniform(0.4, 0.6)};
    rows.push_back(r);
  }
  const auto meta = ens::train_stacking(rows);
  std::size_t ok = 0;
  for (const auto& r : rows) ok += ens::stacking_aggregate(r.x, meta) == r.label ? 1 : 0;
  CHECK(static_cast<double>(ok) / static_cast<double>(rows.size()) >= 0.95);

  const auto meta2 = ens::train_stacking(rows);
  CHECK(meta.weights == meta2.weights);
  CHECK(meta.bias == meta2.bias);
}
