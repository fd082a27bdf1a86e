#pragma once

#include <string>
#include <vector>

#include "hwad/types.hpp"

namespace hwad::csv {

// Shortest round-trip decimal form (bit-exact on re-parse).
std::string format_double(double v);

// Writes via a temporary file in the same directory, then renames.
void write_file_atomic(const std::string& path, const std::string& contents);

std::string read_file(const std::string& path);

// --- subject file: subject_id,label,sex,age,work,education ----------------

std::string subjects_to_csv(const std::vector<SubjectRecord>& subjects);
std::vector<SubjectRecord> subjects_from_csv(const std::string& text);

// --- recording file: subject_id,task_id,stroke_index,t,x,y,pressure,on_paper

std::string recordings_to_csv(const std::vector<TaskRecording>& recs);
std::vector<TaskRecording> recordings_from_csv(const std::string& text);

// --- feature table: subject_id,task_id,stroke_index,<feature columns> -----

struct FeatureRow {
  std::string subject_id;
  int task_id = 1;
  int stroke_index = 1;
  StrokeFeatureVector f{};
};

std::string features_to_csv(const std::vector<FeatureRow>& rows);
std::vector<FeatureRow> features_from_csv(const std::string& text);

}  // namespace hwad::csv
