#include "hwad/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "hwad/errors.hpp"

namespace hwad::synth {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kHfNoiseStd = 0.03;  // tablet units, on-paper baseline

// Writing area (tablet units ~ mm on A4) and the steering box that keeps
// trajectories inside it.
constexpr double kBoxLoX = 30.0, kBoxHiX = 175.0;
constexpr double kBoxLoY = 45.0, kBoxHiY = 255.0;

struct SubjectStyle {
  double size_scale = 1.0;
  double speed_scale = 1.0;
  double slant_offset = 0.0;
};

SubjectStyle make_style(std::uint64_t subject_seed) {
  Rng rng(derive_seed(subject_seed, 0));
  SubjectStyle st;
  st.size_scale = std::exp(rng.normal(0.0, 0.15));
  st.speed_scale = std::exp(rng.normal(0.0, 0.10));
  st.slant_offset = rng.normal(0.0, 0.15);
  return st;
}

// Linear resampling of one stroke onto a grid with `factor`-scaled duration.
std::vector<PenSample> time_dilate(const std::vector<PenSample>& in, double factor) {
  const std::size_t n = in.size();
  if (n < 2 || factor == 1.0) return in;
  const double t0 = in.front().t;
  const auto out_n = static_cast<std::size_t>(
      std::llround(static_cast<double>(n - 1) * factor)) + 1;
  std::vector<PenSample> out(std::max<std::size_t>(out_n, 2));
  const double span = static_cast<double>(n - 1);
  for (std::size_t j = 0; j < out.size(); ++j) {
    // Source position in original sample units.
    double pos = static_cast<double>(j) / factor;
    pos = std::min(pos, span);
    const auto lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, n - 1);
    const double frac = pos - static_cast<double>(lo);
    PenSample p;
    p.t = t0 + static_cast<double>(j) * kSamplePeriod;
    p.x = in[lo].x + frac * (in[hi].x - in[lo].x);
    p.y = in[lo].y + frac * (in[hi].y - in[lo].y);
    p.pressure = in[lo].pressure + frac * (in[hi].pressure - in[lo].pressure);
    p.on_paper = in[lo].on_paper;
    out[j] = p;
  }
  return out;
}

}  // namespace

std::vector<int> GeneratorConfig::task_list() const {
  if (!tasks.empty()) return tasks;
  std::vector<int> all(kTaskCount);
  for (int i = 0; i < kTaskCount; ++i) all[i] = i + 1;
  return all;
}

void validate_config(const GeneratorConfig& cfg) {
  if (cfg.n_ad < 1 || cfg.n_hc < 1) {
    throw ConfigError("generator needs at least one subject per class");
  }
  if (!cfg.samples_per_stroke.valid() || cfg.samples_per_stroke.lo < 5) {
    throw ConfigError("samples_per_stroke range must be non-empty with lo >= 5");
  }
  if (!cfg.strokes_per_task.valid()) {
    throw ConfigError("strokes_per_task range must be non-empty");
  }
  for (int t : cfg.tasks) {
    if (t < 1 || t > kTaskCount) throw ConfigError("task ids must lie in [1, 34]");
  }
  if (cfg.effect.velocity_scale <= 0.0 || cfg.effect.jerk_scale <= 0.0 ||
      cfg.effect.pause_scale <= 0.0) {
    throw ConfigError("class-effect multipliers must be > 0");
  }
  if (cfg.effect.drift < 0.0 || cfg.effect.drift > 1.0) {
    throw ConfigError("effect drift must lie in [0, 1]");
  }
}

std::vector<PenSample> inject_class_effect(const std::vector<PenSample>& stroke_samples,
                                           int label, const ClassEffect& effect,
                                           const InjectContext& ctx) {
  if (label == 0 || stroke_samples.size() < 2) return stroke_samples;

  const double w = std::clamp(ctx.position, 0.0, 1.0);
  const double vs = 1.0 + (effect.velocity_scale - 1.0) * w;
  const double js = 1.0 + (effect.jerk_scale - 1.0) * w;
  const double ps = 1.0 + (effect.pause_scale - 1.0) * w;

  std::vector<PenSample> out;
  if (stroke_samples.front().on_paper) {
    out = time_dilate(stroke_samples, 1.0 / vs);
    // Extra noise on top of the baseline so total std scales by jerk_scale
    // (variances add).
    if (js > 1.0 && ctx.rng != nullptr && ctx.hf_noise_std > 0.0) {
      const double extra = ctx.hf_noise_std * std::sqrt(js * js - 1.0);
      for (auto& p : out) {
        p.x += ctx.rng->normal(0.0, extra);
        p.y += ctx.rng->normal(0.0, extra);
      }
    }
  } else {
    // Stationary hover prepended so the in-air duration scales by pause_scale.
    const auto n = stroke_samples.size();
    const auto hold = static_cast<std::size_t>(
        std::llround((ps - 1.0) * static_cast<double>(n - 1)));
    out.reserve(n + hold);
    const PenSample& first = stroke_samples.front();
    const double t0 = first.t;
    for (std::size_t j = 0; j < hold; ++j) {
      PenSample p = first;
      p.t = t0 + static_cast<double>(j) * kSamplePeriod;
      out.push_back(p);
    }
    for (std::size_t j = 0; j < n; ++j) {
      PenSample p = stroke_samples[j];
      p.t = t0 + static_cast<double>(hold + j) * kSamplePeriod;
      out.push_back(p);
    }
  }
  return out;
}

SubjectRecord make_subject(const GeneratorConfig& cfg, int ordinal) {
  const bool is_ad = ordinal < cfg.n_ad;
  const std::uint64_t subject_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(ordinal) + 1);
  Rng rng(derive_seed(subject_seed, 1000));  // demographics stream

  SubjectRecord s;
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%s%03d", is_ad ? "AD" : "HC",
                is_ad ? ordinal + 1 : ordinal - cfg.n_ad + 1);
  s.subject_id = buf;
  s.label = is_ad ? 1 : 0;
  // Demographics are class-matched by construction: same distributions for
  // both groups, so they carry no label signal.
  s.sex = rng.uniform() < 0.5 ? Sex::female : Sex::male;
  s.age = std::round(rng.uniform(55.0, 85.0) * 10.0) / 10.0;
  s.work = rng.uniform() < 0.5 ? Work::intellectual : Work::manual;
  s.education = std::round(rng.uniform(5.0, 18.0));
  return s;
}

namespace {

// Baseline (HC-style) on-paper stroke: linear progression plus a low-frequency
// sinusoid per axis plus high-frequency Gaussian noise.
std::vector<PenSample> gen_paper_stroke(Rng& rng, const SubjectStyle& style,
                                        double x0, double y0, int n_samples) {
  const bool inside = x0 > kBoxLoX && x0 < kBoxHiX && y0 > kBoxLoY && y0 < kBoxHiY;
  double theta;
  if (inside) {
    theta = style.slant_offset + rng.normal(0.0, 0.35);
  } else {
    theta = std::atan2(150.0 - y0, 100.0 - x0) + rng.normal(0.0, 0.1);
  }
  const double v = style.speed_scale * rng.uniform(15.0, 45.0);
  const double vx = v * std::cos(theta);
  const double vy = v * std::sin(theta) * (inside ? 0.3 : 1.0);

  const double amp_y = style.size_scale * rng.uniform(2.0, 8.0);
  const double amp_x = 0.3 * amp_y;
  const double fy = rng.uniform(1.5, 4.0);
  const double fx = rng.uniform(1.5, 4.0);
  const double phy = rng.uniform(0.0, 2.0 * kPi);
  const double phx = rng.uniform(0.0, 2.0 * kPi);

  const double base_pressure = rng.uniform(300.0, 600.0);
  const double pressure_amp = rng.uniform(10.0, 50.0);

  std::vector<PenSample> out(static_cast<std::size_t>(n_samples));
  for (int i = 0; i < n_samples; ++i) {
    const double t = i * kSamplePeriod;
    PenSample p;
    p.t = t;
    p.x = x0 + vx * t + amp_x * (std::sin(2.0 * kPi * fx * t + phx) - std::sin(phx)) +
          rng.normal(0.0, kHfNoiseStd);
    p.y = y0 + vy * t + amp_y * (std::sin(2.0 * kPi * fy * t + phy) - std::sin(phy)) +
          rng.normal(0.0, kHfNoiseStd);
    p.pressure = std::max(1.0, base_pressure + pressure_amp * std::sin(2.0 * kPi * 1.2 * t) +
                                   rng.normal(0.0, 5.0));
    p.on_paper = true;
    out[static_cast<std::size_t>(i)] = p;
  }
  return out;
}

// In-air transition: minimum-jerk-style quintic from the current position to
// a freshly chosen target, noise-free.
std::vector<PenSample> gen_air_stroke(Rng& rng, const SubjectStyle& style,
                                      double x0, double y0, int n_samples) {
  const bool inside = x0 > kBoxLoX && x0 < kBoxHiX && y0 > kBoxLoY && y0 < kBoxHiY;
  double theta;
  if (inside) {
    theta = rng.uniform(-kPi, kPi);
  } else {
    theta = std::atan2(150.0 - y0, 100.0 - x0) + rng.normal(0.0, 0.1);
  }
  const double hop = style.size_scale * rng.uniform(3.0, 12.0);
  const double x1 = x0 + hop * std::cos(theta);
  const double y1 = y0 + hop * std::sin(theta);

  std::vector<PenSample> out(static_cast<std::size_t>(n_samples));
  for (int i = 0; i < n_samples; ++i) {
    const double tau = static_cast<double>(i) / (n_samples - 1);
    const double blend = tau * tau * tau * (10.0 - 15.0 * tau + 6.0 * tau * tau);
    PenSample p;
    p.t = i * kSamplePeriod;
    p.x = x0 + (x1 - x0) * blend;
    p.y = y0 + (y1 - y0) * blend;
    p.pressure = 0.0;
    p.on_paper = false;
    out[static_cast<std::size_t>(i)] = p;
  }
  return out;
}

}  // namespace

TaskRecording generate_recording(const GeneratorConfig& cfg, int ordinal, int task_id) {
  const bool is_ad = ordinal < cfg.n_ad;
  const std::uint64_t subject_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(ordinal) + 1);
  const SubjectStyle style = make_style(subject_seed);
  Rng rng(derive_seed(subject_seed, static_cast<std::uint64_t>(task_id)));

  const SubjectRecord subject = make_subject(cfg, ordinal);

  TaskRecording rec;
  rec.subject_id = subject.subject_id;
  rec.task_id = task_id;

  const int n_strokes = static_cast<int>(
      rng.uniform_int(cfg.strokes_per_task.lo, cfg.strokes_per_task.hi));

  // Task start point varies per task so recordings do not overlap spatially.
  double x = rng.uniform(kBoxLoX + 10.0, kBoxLoX + 40.0);
  double y = rng.uniform(120.0, 200.0);

  std::vector<std::vector<PenSample>> strokes;
  strokes.reserve(static_cast<std::size_t>(n_strokes));
  for (int k = 0; k < n_strokes; ++k) {
    const int n = static_cast<int>(
        rng.uniform_int(cfg.samples_per_stroke.lo, cfg.samples_per_stroke.hi));
    std::vector<PenSample> baseline = (k % 2 == 0)
                                          ? gen_paper_stroke(rng, style, x, y, n)
                                          : gen_air_stroke(rng, style, x, y, n);
    double position = 1.0;
    if (cfg.effect.drift > 0.0) {
      position = n_strokes > 1
                     ? cfg.effect.drift * static_cast<double>(k) / (n_strokes - 1)
                     : cfg.effect.drift;
    }
    InjectContext ctx;
    ctx.position = position;
    ctx.hf_noise_std = kHfNoiseStd;
    ctx.rng = &rng;
    std::vector<PenSample> shaped =
        inject_class_effect(baseline, is_ad ? 1 : 0, cfg.effect, ctx);
    x = shaped.back().x;
    y = shaped.back().y;
    strokes.push_back(std::move(shaped));
  }

  // Re-time onto one continuous 200 Hz grid.
  std::size_t counter = 0;
  for (int k = 0; k < n_strokes; ++k) {
    Stroke s;
    s.index = k + 1;
    s.samples = std::move(strokes[static_cast<std::size_t>(k)]);
    for (auto& p : s.samples) {
      p.t = static_cast<double>(counter) * kSamplePeriod;
      ++counter;
    }
    rec.strokes.push_back(std::move(s));
  }
  return rec;
}

Cohort generate_cohort(const GeneratorConfig& cfg) {
  validate_config(cfg);
  Cohort cohort;
  const int total = cfg.n_ad + cfg.n_hc;
  const std::vector<int> tasks = cfg.task_list();
  cohort.subjects.reserve(static_cast<std::size_t>(total));
  cohort.recordings.reserve(static_cast<std::size_t>(total) * tasks.size());
  for (int ordinal = 0; ordinal < total; ++ordinal) {
    cohort.subjects.push_back(make_subject(cfg, ordinal));
    for (int task : tasks) {
      cohort.recordings.push_back(generate_recording(cfg, ordinal, task));
    }
  }
  return cohort;
}

}  // namespace hwad::synth
