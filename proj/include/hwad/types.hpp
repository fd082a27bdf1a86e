#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace hwad {

inline constexpr double kSamplePeriod = 0.005;  // 200 Hz digitizer
inline constexpr int kTaskCount = 34;

// One digitizer sample. pressure is 0 whenever the pen is in the air.
struct PenSample {
  double t = 0.0;         // seconds from recording start
  double x = 0.0;         // tablet units, horizontal
  double y = 0.0;         // tablet units, vertical
  double pressure = 0.0;  // device units, >= 0
  bool on_paper = false;
};

// Contiguous run of samples sharing one pen state.
struct Stroke {
  std::vector<PenSample> samples;  // length >= 2, time ordered
  int index = 1;                   // 1-based ordinal within its task

  bool on_paper() const { return !samples.empty() && samples.front().on_paper; }
  double duration() const { return samples.back().t - samples.front().t; }
  std::size_t size() const { return samples.size(); }
};

// All strokes of one subject performing one task.
struct TaskRecording {
  std::string subject_id;
  int task_id = 1;  // 1..34
  std::vector<Stroke> strokes;

  std::size_t sample_count() const {
    std::size_t n = 0;
    for (const auto& s : strokes) n += s.samples.size();
    return n;
  }
};

enum class Sex { female, male };
enum class Work { intellectual, manual };

struct SubjectRecord {
  std::string subject_id;
  int label = 0;  // 0 = HC, 1 = AD
  Sex sex = Sex::female;
  double age = 0.0;        // years, > 0
  Work work = Work::intellectual;
  double education = 0.0;  // years, >= 0
};

// Numeric encoding of the four demographics, fixed order (sex, age, work,
// education). Raw categories are kept in SubjectRecord; encoding happens only
// at model-input time.
using Statics = std::array<double, 4>;

Statics encode_statics(const SubjectRecord& s);

struct Violation {
  std::string where;
  std::string what;
};

// Structural checks for a recording. Violations are returned as data, one
// entry per broken invariant; an empty list means the recording is valid.
std::vector<Violation> validate_recording(const TaskRecording& rec);

// ---------------------------------------------------------------------------
// Stroke feature vector (canonical 27-feature catalogue)
// ---------------------------------------------------------------------------

inline constexpr int kStrokeFeatureCount = 27;

using StrokeFeatureVector = std::array<double, kStrokeFeatureCount>;

// Canonical column order of the feature table (CSV header uses these names).
extern const std::array<const char*, kStrokeFeatureCount> kStrokeFeatureNames;

enum FeatureIndex : int {
  kFeatSegmentIndex = 0,
  kFeatStartTime = 1,
  kFeatDuration = 2,
  kFeatStartVerticalPos = 3,
  kFeatVerticalSize = 4,
  kFeatPeakVerticalVelocity = 5,
  kFeatPeakVerticalAcceleration = 6,
  kFeatStartHorizontalPos = 7,
  kFeatHorizontalSize = 8,
  kFeatStraightnessError = 9,
  kFeatSlant = 10,
  kFeatLoopSurface = 11,
  kFeatRelativeInitialSlant = 12,
  kFeatRelativeTimeToPeakVelocity = 13,
  kFeatPenUpRatio = 14,
  kFeatAbsoluteSize = 15,
  kFeatAverageAbsoluteVelocity = 16,
  kFeatRoadLengthRatio = 17,
  kFeatAbsoluteYJerk = 18,
  kFeatNormalizedYJerk = 19,
  kFeatAverageNormalizedYJerk = 20,
  kFeatAbsoluteJerk = 21,
  kFeatNormalizedJerk = 22,
  kFeatAverageNormalizedJerk = 23,
  kFeatAccelerationPeakCount = 24,
  kFeatAveragePenPressure = 25,
  kFeatTaskStrokeCount = 26,
};

// Fixed-length window of per-stroke feature rows plus the conditioning data
// the encoder consumes alongside it.
struct WindowBatch {
  std::vector<double> values;  // row-major [ws x feature_dim]
  int ws = 0;
  int feature_dim = 0;
  int task_id = 1;
  Statics statics{};
  std::string subject_id;
  int label = 0;

  double& at(int row, int col) { return values[static_cast<std::size_t>(row) * feature_dim + col]; }
  double at(int row, int col) const { return values[static_cast<std::size_t>(row) * feature_dim + col]; }
};

}  // namespace hwad
