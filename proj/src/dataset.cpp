#include "hwad/dataset.hpp"

#include <algorithm>

#include "hwad/errors.hpp"

namespace hwad {

const SubjectRecord& FeatureDataset::subject(const std::string& id) const {
  const auto it = std::lower_bound(
      subjects.begin(), subjects.end(), id,
      [](const SubjectRecord& s, const std::string& key) { return s.subject_id < key; });
  if (it == subjects.end() || it->subject_id != id) {
    throw DataError("unknown subject id '" + id + "'");
  }
  return *it;
}

int FeatureDataset::feature_dim() const {
  return sequences.empty() ? 0 : static_cast<int>(sequences.front().rows.front().size());
}

FeatureDataset build_dataset(const std::vector<SubjectRecord>& subjects,
                             const std::vector<csv::FeatureRow>& rows) {
  FeatureDataset ds;
  ds.subjects = subjects;
  std::sort(ds.subjects.begin(), ds.subjects.end(),
            [](const SubjectRecord& a, const SubjectRecord& b) {
              return a.subject_id < b.subject_id;
            });

  FeatureSequence* cur = nullptr;
  for (const auto& row : rows) {
    if (cur == nullptr || cur->subject_id != row.subject_id || cur->task_id != row.task_id) {
      ds.sequences.push_back(FeatureSequence{row.subject_id, row.task_id, {}});
      cur = &ds.sequences.back();
    }
    cur->rows.emplace_back(row.f.begin(), row.f.end());
  }
  std::sort(ds.sequences.begin(), ds.sequences.end(),
            [](const FeatureSequence& a, const FeatureSequence& b) {
              if (a.subject_id != b.subject_id) return a.subject_id < b.subject_id;
              return a.task_id < b.task_id;
            });

  for (const auto& seq : ds.sequences) {
    ds.subject(seq.subject_id);  // every sequence must resolve to a subject
  }
  return ds;
}

}  // namespace hwad
