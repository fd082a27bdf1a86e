#include "hwad/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "hwad/errors.hpp"
#include "hwad/rng.hpp"

namespace hwad::cv {

std::vector<FoldAssignment> stratified_subject_folds(const std::vector<SubjectRecord>& subjects,
                                                     int k, std::uint64_t seed_base,
                                                     double val_fraction) {
  if (k < 2) throw ConfigError("stratified folds need k >= 2");

  std::vector<std::string> ad_ids, hc_ids;
  for (const auto& s : subjects) {
    (s.label == 1 ? ad_ids : hc_ids).push_back(s.subject_id);
  }
  if (static_cast<int>(ad_ids.size()) < k || static_cast<int>(hc_ids.size()) < k) {
    throw DataError("each class needs at least k subjects for k-fold CV");
  }
  std::sort(ad_ids.begin(), ad_ids.end());
  std::sort(hc_ids.begin(), hc_ids.end());

  Rng rng(seed_base);
  rng.shuffle(ad_ids);
  rng.shuffle(hc_ids);

  // Round-robin test assignment per class.
  std::vector<std::vector<std::string>> test_ad(static_cast<std::size_t>(k));
  std::vector<std::vector<std::string>> test_hc(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < ad_ids.size(); ++i) test_ad[i % k].push_back(ad_ids[i]);
  for (std::size_t i = 0; i < hc_ids.size(); ++i) test_hc[i % k].push_back(hc_ids[i]);

  std::vector<FoldAssignment> folds;
  folds.reserve(static_cast<std::size_t>(k));
  for (int f = 0; f < k; ++f) {
    FoldAssignment fold;
    fold.fold_index = f;
    fold.test.insert(test_ad[f].begin(), test_ad[f].end());
    fold.test.insert(test_hc[f].begin(), test_hc[f].end());

    std::vector<std::string> train_ad, train_hc;
    for (const auto& id : ad_ids) {
      if (!fold.test.count(id)) train_ad.push_back(id);
    }
    for (const auto& id : hc_ids) {
      if (!fold.test.count(id)) train_hc.push_back(id);
    }

    // Stratified validation holdout carved from the training subjects.
    Rng fold_rng(fold_seed(seed_base, f));
    auto carve = [&](std::vector<std::string>& pool) {
      fold_rng.shuffle(pool);
      auto n_val = static_cast<std::size_t>(
          std::llround(val_fraction * static_cast<double>(pool.size())));
      n_val = std::clamp<std::size_t>(n_val, 1, pool.size() - 1);
      for (std::size_t i = 0; i < pool.size(); ++i) {
        (i < n_val ? fold.validation : fold.train).insert(pool[i]);
      }
    };
    carve(train_ad);
    carve(train_hc);
    folds.push_back(std::move(fold));
  }
  return folds;
}

int subject_decision(const std::vector<double>& window_probs) {
  if (window_probs.empty()) throw DataError("subject_decision on empty probabilities");
  double mean = 0.0;
  for (double p : window_probs) mean += p;
  mean /= static_cast<double>(window_probs.size());
  return mean >= 0.5 ? 1 : 0;
}

Metrics confusion_metrics(const std::vector<int>& decisions, const std::vector<int>& labels) {
  if (decisions.size() != labels.size() || decisions.empty()) {
    throw DataError("confusion_metrics: size mismatch or empty input");
  }
  double tp = 0, tn = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1) {
      (decisions[i] == 1 ? tp : fn) += 1;
    } else {
      (decisions[i] == 0 ? tn : fp) += 1;
    }
  }
  Metrics m;
  const double n = tp + tn + fp + fn;
  m.accuracy = 100.0 * (tp + tn) / n;
  if (tp + fn > 0) {
    m.sensitivity = 100.0 * tp / (tp + fn);
  } else {
    m.sensitivity_defined = false;
  }
  if (tn + fp > 0) {
    m.specificity = 100.0 * tn / (tn + fp);
  } else {
    m.specificity_defined = false;
  }
  const double f1_den = 2.0 * tp + fp + fn;
  m.f1 = f1_den > 0 ? 100.0 * 2.0 * tp / f1_den : 0.0;
  return m;
}

namespace {

MetricSummary summarize(std::vector<double> values) {
  MetricSummary s;
  s.per_fold = std::move(values);
  if (s.per_fold.empty()) return s;
  for (double v : s.per_fold) s.mean += v;
  s.mean /= static_cast<double>(s.per_fold.size());
  if (s.per_fold.size() > 1) {
    double acc = 0.0;
    for (double v : s.per_fold) acc += (v - s.mean) * (v - s.mean);
    s.std_dev = std::sqrt(acc / static_cast<double>(s.per_fold.size() - 1));
  }
  return s;
}

}  // namespace

FoldReport aggregate_folds(const std::vector<Metrics>& fold_metrics) {
  if (fold_metrics.size() < 2) throw DataError("aggregate_folds needs at least 2 folds");
  std::vector<double> acc, sens, spec, f1;
  for (const auto& m : fold_metrics) {
    acc.push_back(m.accuracy);
    if (m.sensitivity_defined) sens.push_back(m.sensitivity);
    if (m.specificity_defined) spec.push_back(m.specificity);
    f1.push_back(m.f1);
  }
  FoldReport r;
  r.accuracy = summarize(std::move(acc));
  r.sensitivity = summarize(std::move(sens));
  r.specificity = summarize(std::move(spec));
  r.f1 = summarize(std::move(f1));
  return r;
}

std::string format_mean_std(const MetricSummary& m, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f (%.*f)", decimals, m.mean, decimals, m.std_dev);
  return buf;
}

}  // namespace hwad::cv
