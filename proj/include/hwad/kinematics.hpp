#pragma once

#include <optional>
#include <vector>

#include "hwad/types.hpp"

namespace hwad::kin {

// Per-sample derivative series of one stroke.
struct KinematicSeries {
  std::vector<double> vx, vy;  // units/s
  std::vector<double> ax, ay;  // units/s^2
  std::vector<double> jx, jy;  // units/s^3
  std::vector<double> speed;   // sqrt(vx^2 + vy^2)

  std::size_t size() const { return speed.size(); }
};

// Central differences at interior points, one-sided at the ends, applied to
// x and y independently and repeated for acceleration and jerk. Requires at
// least 5 samples (jerk sits three derivative levels down).
KinematicSeries differentiate(const Stroke& stroke);

enum class SegmentationMode {
  pen_state,           // split at every on_paper transition
  pen_state_velocity,  // additionally split on-paper runs at vy inversions
};

// Partitions a time-ordered sample stream into strokes. Every input sample
// lands in exactly one output stroke; concatenating the output reproduces the
// input. Velocity-inversion splits require the flanking speed peaks to exceed
// 5% of the run's maximum speed.
std::vector<Stroke> segment_strokes(const std::vector<PenSample>& samples,
                                    SegmentationMode mode);

// Population standard deviation of the perpendicular distances to the
// total-least-squares line, divided by the endpoint distance.
double straightness_error(const Stroke& stroke);

enum class JerkAxis { y, both };

// sqrt( (integral of j^2 dt / 2) * duration^5 / road_length^2 ), trapezoid
// rule on the sample grid. axis selects vertical jerk or jerk magnitude.
double normalized_jerk(const KinematicSeries& series, double duration,
                       double road_length, JerkAxis axis);

// Polyline arc length of the stroke path.
double arc_length(const Stroke& stroke);

// Fills the 27-feature vector for one stroke. `prev` is the preceding stroke
// of the same task (loop surface) or nullptr for the first stroke. The two
// task-averaged jerk features are filled with this stroke's own values here;
// extract_task_features replaces them with the task mean.
StrokeFeatureVector extract_stroke_features(const Stroke& stroke,
                                            const Stroke* prev,
                                            int task_total_strokes);

// Canonical per-task extraction: per-stroke features with the task-averaged
// normalized-jerk columns resolved.
std::vector<StrokeFeatureVector> extract_task_features(const TaskRecording& rec);

}  // namespace hwad::kin
