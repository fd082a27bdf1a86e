#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "hwad/types.hpp"

namespace hwad::cv {

struct FoldAssignment {
  int fold_index = 0;
  std::set<std::string> train;
  std::set<std::string> validation;
  std::set<std::string> test;
};

// Subject-level stratified k-fold split: per-class shuffle seeded with
// seed_base, round-robin assignment to folds, then a stratified validation
// holdout (val_fraction of the training subjects, at least one per class)
// carved out with the fold's own seed. Throws when a class has fewer than k
// subjects.
std::vector<FoldAssignment> stratified_subject_folds(const std::vector<SubjectRecord>& subjects,
                                                     int k, std::uint64_t seed_base,
                                                     double val_fraction = 0.15);

inline std::uint64_t fold_seed(std::uint64_t seed_base, int fold_index) {
  return seed_base + static_cast<std::uint64_t>(fold_index);
}

// Mean window probability thresholded at 0.5; ties go to AD.
int subject_decision(const std::vector<double>& window_probs);

struct Metrics {
  double accuracy = 0.0;     // percent
  double sensitivity = 0.0;  // percent, AD is the positive class
  double specificity = 0.0;  // percent
  double f1 = 0.0;           // percent
  bool sensitivity_defined = true;
  bool specificity_defined = true;
};

// Confusion metrics over subject decisions (AD positive). Metrics whose
// denominator class is empty are flagged undefined.
Metrics confusion_metrics(const std::vector<int>& decisions, const std::vector<int>& labels);

struct MetricSummary {
  std::vector<double> per_fold;
  double mean = 0.0;
  double std_dev = 0.0;  // sample (n-1) standard deviation
};

struct FoldReport {
  MetricSummary accuracy;
  MetricSummary sensitivity;
  MetricSummary specificity;
  MetricSummary f1;
};

FoldReport aggregate_folds(const std::vector<Metrics>& fold_metrics);

// "mean (std)" with the given number of decimals, e.g. "80.18 (6.22)".
std::string format_mean_std(const MetricSummary& m, int decimals = 2);

}  // namespace hwad::cv
