#include "hwad/types.hpp"

#include <cmath>
#include <sstream>

#include "hwad/errors.hpp"

namespace hwad {

const std::array<const char*, kStrokeFeatureCount> kStrokeFeatureNames = {
    "segment_index",
    "start_time",
    "duration",
    "start_vertical_position",
    "vertical_size",
    "peak_vertical_velocity",
    "peak_vertical_acceleration",
    "start_horizontal_position",
    "horizontal_size",
    "straightness_error",
    "slant",
    "loop_surface",
    "relative_initial_slant",
    "relative_time_to_peak_velocity",
    "pen_up_ratio",
    "absolute_size",
    "average_absolute_velocity",
    "road_length_ratio",
    "absolute_y_jerk",
    "normalized_y_jerk",
    "average_normalized_y_jerk",
    "absolute_jerk",
    "normalized_jerk",
    "average_normalized_jerk",
    "acceleration_peak_count",
    "average_pen_pressure",
    "task_stroke_count",
};

Statics encode_statics(const SubjectRecord& s) {
  return {s.sex == Sex::male ? 1.0 : 0.0, s.age,
          s.work == Work::manual ? 1.0 : 0.0, s.education};
}

namespace {

std::string loc(const TaskRecording& rec, std::size_t stroke, std::size_t sample) {
  std::ostringstream os;
  os << "subject " << rec.subject_id << " task " << rec.task_id << " stroke "
     << (stroke + 1) << " sample " << (sample + 1);
  return os.str();
}

}  // namespace

std::vector<Violation> validate_recording(const TaskRecording& rec) {
  std::vector<Violation> out;
  auto add = [&out](std::string where, std::string what) {
    out.push_back({std::move(where), std::move(what)});
  };

  if (rec.task_id < 1 || rec.task_id > kTaskCount) {
    add("subject " + rec.subject_id, "task_id outside [1, 34]");
  }

  for (std::size_t si = 0; si < rec.strokes.size(); ++si) {
    const Stroke& s = rec.strokes[si];
    if (s.index != static_cast<int>(si) + 1) {
      add(loc(rec, si, 0), "stroke indices not contiguous from 1");
    }
    if (s.samples.size() < 2) {
      add(loc(rec, si, 0), "stroke has fewer than 2 samples");
      continue;
    }
    const bool state = s.samples.front().on_paper;
    for (std::size_t pi = 0; pi < s.samples.size(); ++pi) {
      const PenSample& p = s.samples[pi];
      if (p.on_paper != state) add(loc(rec, si, pi), "mixed pen state within stroke");
      if (!p.on_paper && p.pressure != 0.0) add(loc(rec, si, pi), "in-air pressure");
      if (p.pressure < 0.0) add(loc(rec, si, pi), "negative pressure");
    }
  }

  // Timing invariants run over the flattened sample stream.
  const PenSample* prev = nullptr;
  for (std::size_t si = 0; si < rec.strokes.size(); ++si) {
    const Stroke& s = rec.strokes[si];
    for (std::size_t pi = 0; pi < s.samples.size(); ++pi) {
      const PenSample& p = s.samples[pi];
      if (prev != nullptr) {
        const double dt = p.t - prev->t;
        if (dt < 0.0) {
          add(loc(rec, si, pi), "non-monotonic time");
        } else if (std::abs(dt - kSamplePeriod) > 0.01 * kSamplePeriod) {
          add(loc(rec, si, pi), "sampling period off nominal by more than 1%");
        }
      }
      prev = &p;
    }
  }
  return out;
}

}  // namespace hwad
