#pragma once

#include <cstdint>
#include <vector>

#include "hwad/rng.hpp"
#include "hwad/types.hpp"

namespace hwad::synth {

struct Range {
  int lo = 0;
  int hi = 0;
  bool valid() const { return lo > 0 && hi >= lo; }
};

// Class-conditional effect applied to AD trajectories. With drift == 0 the
// multipliers apply uniformly to every stroke; with drift in (0, 1] they ramp
// from no effect at the first stroke of a task to drift * full effect at the
// last, so the class signal lives in the across-stroke trend instead of the
// stroke-level marginals.
struct ClassEffect {
  double velocity_scale = 0.7;  // multiplier on AD on-paper pen speed
  double jerk_scale = 1.5;      // multiplier on AD high-frequency noise
  double pause_scale = 1.4;     // multiplier on AD in-air durations
  double drift = 0.0;
};

struct GeneratorConfig {
  std::uint64_t seed = 7;
  int n_ad = 10;
  int n_hc = 10;
  std::vector<int> tasks;             // empty = all 34
  Range samples_per_stroke{30, 60};   // per baseline stroke
  Range strokes_per_task{60, 66};
  ClassEffect effect;

  std::vector<int> task_list() const;
};

void validate_config(const GeneratorConfig& cfg);  // throws ConfigError

struct Cohort {
  std::vector<SubjectRecord> subjects;      // sorted by subject_id
  std::vector<TaskRecording> recordings;    // sorted by (subject_id, task_id)
};

// Pure function of the config; byte-identical output for identical configs.
Cohort generate_cohort(const GeneratorConfig& cfg);

// Streaming building blocks (each deterministic in (cfg, ordinal, task)).
// Subject ordinals run 0..n_ad-1 for AD, n_ad..n_ad+n_hc-1 for HC.
SubjectRecord make_subject(const GeneratorConfig& cfg, int ordinal);
TaskRecording generate_recording(const GeneratorConfig& cfg, int ordinal, int task_id);

// Context for applying a class effect to one baseline stroke.
struct InjectContext {
  double position = 1.0;       // ramp weight in [0, 1]; 1 = full effect
  double hf_noise_std = 0.0;   // baseline on-paper noise level
  Rng* rng = nullptr;          // required when extra noise is to be drawn
};

// HC input is returned unchanged. For AD, on-paper strokes are time-dilated
// by 1/velocity_scale and get extra high-frequency noise so total noise std
// scales by jerk_scale; in-air strokes gain a stationary hover so their
// duration scales by pause_scale. Timestamps stay on the 200 Hz grid.
std::vector<PenSample> inject_class_effect(const std::vector<PenSample>& stroke_samples,
                                           int label, const ClassEffect& effect,
                                           const InjectContext& ctx = {});

}  // namespace hwad::synth
