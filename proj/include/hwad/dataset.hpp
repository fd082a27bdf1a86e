#pragma once

#include <string>
#include <vector>

#include "hwad/csv.hpp"
#include "hwad/types.hpp"

namespace hwad {

// One task's stroke-feature rows for one subject, in stroke order.
struct FeatureSequence {
  std::string subject_id;
  int task_id = 1;
  std::vector<std::vector<double>> rows;
};

// In-memory join of the feature table and the subject file.
struct FeatureDataset {
  std::vector<SubjectRecord> subjects;       // sorted by subject_id
  std::vector<FeatureSequence> sequences;    // sorted by (subject_id, task_id)

  const SubjectRecord& subject(const std::string& id) const;
  int feature_dim() const;
};

FeatureDataset build_dataset(const std::vector<SubjectRecord>& subjects,
                             const std::vector<csv::FeatureRow>& rows);

}  // namespace hwad
