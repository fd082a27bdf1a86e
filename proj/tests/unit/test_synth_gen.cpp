#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>

#include "common/test_util.hpp"
#include "hwad/csv.hpp"
#include "hwad/errors.hpp"
#include "hwad/kinematics.hpp"
#include "hwad/synth.hpp"

using namespace hwad;

namespace {

// Per-subject mean of the stroke mean speeds.
std::vector<double> subject_mean_speeds(const synth::Cohort& cohort, int label) {
  std::vector<double> out;
  for (const auto& subject : cohort.subjects) {
    if (subject.label != label) continue;
    double acc = 0.0;
    std::size_t n = 0;
    for (const auto& rec : cohort.recordings) {
      if (rec.subject_id != subject.subject_id) continue;
      for (const auto& f : kin::extract_task_features(rec)) {
        acc += f[kFeatAverageAbsoluteVelocity];
        ++n;
      }
    }
    out.push_back(acc / static_cast<double>(n));
  }
  return out;
}

double cohens_d(const std::vector<double>& a, const std::vector<double>& b) {
  auto mean = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    return m / static_cast<double>(v.size());
  };
  auto var = [&](const std::vector<double>& v, double m) {
    double acc = 0.0;
    for (double x : v) acc += (x - m) * (x - m);
    return acc / static_cast<double>(v.size() - 1);
  };
  const double ma = mean(a), mb = mean(b);
  const double pooled = std::sqrt(
      ((static_cast<double>(a.size()) - 1) * var(a, ma) + (static_cast<double>(b.size()) - 1) * var(b, mb)) /
      (static_cast<double>(a.size() + b.size()) - 2));
  return (ma - mb) / pooled;
}

// Best single-threshold accuracy over per-subject values.
double threshold_sweep_accuracy(const std::vector<double>& ad, const std::vector<double>& hc) {
  std::vector<double> all = ad;
  all.insert(all.end(), hc.begin(), hc.end());
  std::sort(all.begin(), all.end());
  double best = 0.0;
  for (std::size_t i = 0; i + 1 <= all.size(); ++i) {
    const double thr = i + 1 < all.size() ? 0.5 * (all[i] + all[i + 1]) : all[i] + 1.0;
    // AD is the slower class under the default effect.
    std::size_t correct = 0;
    for (double v : ad) correct += v <= thr ? 1 : 0;
    for (double v : hc) correct += v > thr ? 1 : 0;
    best = std::max(best, static_cast<double>(correct) / static_cast<double>(ad.size() + hc.size()));
  }
  return best;
}

}  // namespace

TEST_CASE("generate_cohort: counts and coverage") {
  synth::GeneratorConfig cfg;
  cfg.seed = 7;
  cfg.n_ad = 10;
  cfg.n_hc = 10;
  cfg.strokes_per_task = {6, 9};
  cfg.samples_per_stroke = {20, 40};
  const synth::Cohort cohort = synth::generate_cohort(cfg);
  CHECK(cohort.subjects.size() == 20);
  CHECK(cohort.recordings.size() == 680);  // 20 x 34

  // every (subject, task) pair covered exactly once
  std::set<std::pair<std::string, int>> seen;
  for (const auto& rec : cohort.recordings) {
    CHECK(seen.insert({rec.subject_id, rec.task_id}).second);
  }
}

TEST_CASE("generate_cohort is a pure function of its config") {
  synth::GeneratorConfig cfg;
  cfg.seed = 42;
  cfg.n_ad = 3;
  cfg.n_hc = 3;
  cfg.tasks = {1, 2, 3};
  cfg.strokes_per_task = {6, 10};
  cfg.samples_per_stroke = {20, 40};
  const synth::Cohort a = synth::generate_cohort(cfg);
  const synth::Cohort b = synth::generate_cohort(cfg);
  CHECK(csv::recordings_to_csv(a.recordings) == csv::recordings_to_csv(b.recordings));
  CHECK(csv::subjects_to_csv(a.subjects) == csv::subjects_to_csv(b.subjects));
}

TEST_CASE("null class effect leaves a negligible velocity effect size") {
  synth::GeneratorConfig cfg;
  cfg.seed = 19;  // fixed cohort for this statistical check
  cfg.n_ad = 30;
  cfg.n_hc = 30;
  cfg.tasks = {1, 2, 3, 4};
  cfg.strokes_per_task = {10, 14};
  cfg.samples_per_stroke = {25, 45};
  cfg.effect = synth::ClassEffect{1.0, 1.0, 1.0, 0.0};
  const synth::Cohort cohort = synth::generate_cohort(cfg);
  const auto ad = subject_mean_speeds(cohort, 1);
  const auto hc = subject_mean_speeds(cohort, 0);
  CHECK(std::abs(cohens_d(ad, hc)) < 0.2);
}

TEST_CASE("default effect makes classes separable by an average-velocity threshold") {
  synth::GeneratorConfig cfg;
  cfg.seed = 5;
  cfg.n_ad = 30;
  cfg.n_hc = 30;
  cfg.tasks = {1, 2, 3, 4};
  cfg.strokes_per_task = {10, 14};
  cfg.samples_per_stroke = {25, 45};
  const synth::Cohort cohort = synth::generate_cohort(cfg);
  const auto ad = subject_mean_speeds(cohort, 1);
  const auto hc = subject_mean_speeds(cohort, 0);
  CHECK(threshold_sweep_accuracy(ad, hc) >= 0.8);
}

TEST_CASE("inject_class_effect: HC passes through unchanged") {
  const Stroke s = testutil::line_stroke(0, 0, 10, 3, 0.3);
  const auto out = synth::inject_class_effect(s.samples, 0, synth::ClassEffect{});
  REQUIRE(out.size() == s.samples.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    CHECK(out[i].x == s.samples[i].x);
    CHECK(out[i].y == s.samples[i].y);
    CHECK(out[i].t == s.samples[i].t);
  }
}

TEST_CASE("inject_class_effect: velocity scale slows a constant-speed segment") {
  const double v = 20.0;
  const Stroke s = testutil::line_stroke(0, 0, v, 0, 0.5);  // on paper, constant speed
  synth::ClassEffect effect;
  effect.velocity_scale = 0.7;
  effect.jerk_scale = 1.0;
  const auto out = synth::inject_class_effect(s.samples, 1, effect);

  double path = 0.0;
  for (std::size_t i = 1; i < out.size(); ++i) {
    path += std::hypot(out[i].x - out[i - 1].x, out[i].y - out[i - 1].y);
  }
  const double duration = out.back().t - out.front().t;
  const double avg_speed = path / duration;
  CHECK(avg_speed > 0.7 * v * 0.95);
  CHECK(avg_speed < 0.7 * v * 1.05);

  // timestamps stay on the 200 Hz grid
  for (std::size_t i = 1; i < out.size(); ++i) {
    CHECK(out[i].t - out[i - 1].t == doctest::Approx(kSamplePeriod).epsilon(1e-9));
  }
}

TEST_CASE("inject_class_effect: pause scale stretches in-air durations") {
  const Stroke s = testutil::line_stroke(0, 0, 10, 0, 0.2, false);
  synth::ClassEffect effect;
  const auto out = synth::inject_class_effect(s.samples, 1, effect);
  const double in_dur = s.samples.back().t - s.samples.front().t;
  const double out_dur = out.back().t - out.front().t;
  CHECK(out_dur / in_dur == doctest::Approx(effect.pause_scale).epsilon(0.05));
}

TEST_CASE("jerk scale raises AD absolute-jerk RMS above HC") {
  synth::GeneratorConfig cfg;
  cfg.seed = 31;
  cfg.n_ad = 30;
  cfg.n_hc = 30;
  cfg.tasks = {1};
  cfg.strokes_per_task = {10, 12};
  cfg.samples_per_stroke = {30, 45};
  cfg.effect = synth::ClassEffect{1.0, 1.5, 1.0, 0.0};  // jerk only
  const synth::Cohort cohort = synth::generate_cohort(cfg);

  double ad_jerk = 0.0, hc_jerk = 0.0;
  std::size_t ad_n = 0, hc_n = 0;
  for (const auto& rec : cohort.recordings) {
    const bool is_ad = rec.subject_id.rfind("AD", 0) == 0;
    for (const auto& f : kin::extract_task_features(rec)) {
      if (is_ad) {
        ad_jerk += f[kFeatAbsoluteJerk];
        ++ad_n;
      } else {
        hc_jerk += f[kFeatAbsoluteJerk];
        ++hc_n;
      }
    }
  }
  CHECK(ad_jerk / static_cast<double>(ad_n) > hc_jerk / static_cast<double>(hc_n));
}

TEST_CASE("config validation") {
  synth::GeneratorConfig cfg;
  cfg.n_ad = 0;
  CHECK_THROWS_AS(synth::validate_config(cfg), ConfigError);
  cfg.n_ad = 1;
  cfg.tasks = {35};
  CHECK_THROWS_AS(synth::validate_config(cfg), ConfigError);
  cfg.tasks = {};
  cfg.effect.velocity_scale = 0.0;
  CHECK_THROWS_AS(synth::validate_config(cfg), ConfigError);
  cfg.effect.velocity_scale = 0.7;
  cfg.samples_per_stroke = {4, 10};
  CHECK_THROWS_AS(synth::validate_config(cfg), ConfigError);
}

TEST_CASE("drift mode ramps the effect across strokes") {
  synth::GeneratorConfig cfg;
  cfg.seed = 13;
  cfg.n_ad = 6;
  cfg.n_hc = 6;
  cfg.tasks = {1};
  cfg.strokes_per_task = {20, 20};
  cfg.samples_per_stroke = {30, 40};
  cfg.effect.drift = 1.0;
  const synth::Cohort cohort = synth::generate_cohort(cfg);

  // For AD, late strokes should be slower relative to early strokes compared
  // to HC (the multiplier ramps from 1 to velocity_scale).
  double ad_ratio = 0.0, hc_ratio = 0.0;
  int ad_n = 0, hc_n = 0;
  for (const auto& rec : cohort.recordings) {
    const auto rows = kin::extract_task_features(rec);
    double early = 0.0, late = 0.0;
    int h = static_cast<int>(rows.size()) / 2;
    for (int i = 0; i < h; ++i) early += rows[static_cast<std::size_t>(i)][kFeatAverageAbsoluteVelocity];
    for (std::size_t i = static_cast<std::size_t>(h); i < rows.size(); ++i) late += rows[i][kFeatAverageAbsoluteVelocity];
    early /= h;
    late /= static_cast<double>(rows.size() - static_cast<std::size_t>(h));
    if (rec.subject_id.rfind("AD", 0) == 0) {
      ad_ratio += late / early;
      ++ad_n;
    } else {
      hc_ratio += late / early;
      ++hc_n;
    }
  }
  CHECK(ad_ratio / ad_n < hc_ratio / hc_n);
}
