#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "common/test_util.hpp"
#include "hwad/csv.hpp"
#include "hwad/errors.hpp"
#include "hwad/synth.hpp"
#include "hwad/types.hpp"

using namespace hwad;

namespace {

TaskRecording two_stroke_recording() {
  TaskRecording rec;
  rec.subject_id = "AD001";
  rec.task_id = 3;
  Stroke a = testutil::line_stroke(0.0, 0.0, 10.0, 0.0, 0.1, true);
  a.index = 1;
  Stroke b = testutil::line_stroke(1.0, 0.0, 5.0, 5.0, 0.05, false);
  b.index = 2;
  for (auto& p : b.samples) p.t += a.samples.back().t + kSamplePeriod;
  rec.strokes = {a, b};
  return rec;
}

}  // namespace

TEST_CASE("validate_recording accepts well-formed input") {
  CHECK(validate_recording(two_stroke_recording()).empty());
}

TEST_CASE("validate_recording flags non-monotonic time") {
  TaskRecording rec = two_stroke_recording();
  rec.strokes[0].samples[2].t = rec.strokes[0].samples[1].t - 0.001;
  const auto violations = validate_recording(rec);
  REQUIRE(!violations.empty());
  bool found = false;
  for (const auto& v : violations) found = found || v.what == "non-monotonic time";
  CHECK(found);
}

TEST_CASE("validate_recording flags in-air pressure") {
  TaskRecording rec = two_stroke_recording();
  rec.strokes[1].samples[3].pressure = 0.4;
  const auto violations = validate_recording(rec);
  REQUIRE(violations.size() == 1);
  CHECK(violations[0].what == "in-air pressure");
}

TEST_CASE("validate_recording flags off-nominal sampling period") {
  TaskRecording rec = two_stroke_recording();
  rec.strokes[0].samples[5].t += 0.002;  // > 1% of 5 ms
  CHECK(!validate_recording(rec).empty());
}

TEST_CASE("validate_recording flags bad stroke indices and mixed pen state") {
  TaskRecording rec = two_stroke_recording();
  rec.strokes[1].index = 5;
  rec.strokes[0].samples[4].on_paper = false;
  rec.strokes[0].samples[4].pressure = 0.0;
  const auto violations = validate_recording(rec);
  CHECK(violations.size() >= 2);
}

TEST_CASE("encode_statics fixed order and encoding") {
  SubjectRecord s;
  s.sex = Sex::female;
  s.age = 71.5;
  s.work = Work::intellectual;
  s.education = 10.8;
  Statics v = encode_statics(s);
  CHECK(v == Statics{0.0, 71.5, 0.0, 10.8});

  s.sex = Sex::male;
  s.age = 68.9;
  s.work = Work::manual;
  s.education = 12.9;
  v = encode_statics(s);
  CHECK(v == Statics{1.0, 68.9, 1.0, 12.9});

  s.sex = Sex::female;
  s.age = 1.0;
  s.work = Work::intellectual;
  s.education = 0.0;
  CHECK(encode_statics(s) == Statics{0.0, 1.0, 0.0, 0.0});
}

TEST_CASE("recording CSV round-trip is bit-exact") {
  synth::GeneratorConfig cfg;
  cfg.seed = 11;
  cfg.n_ad = 2;
  cfg.n_hc = 2;
  cfg.tasks = {1, 2};
  cfg.strokes_per_task = {6, 9};
  cfg.samples_per_stroke = {20, 40};
  const synth::Cohort cohort = synth::generate_cohort(cfg);

  const std::string text = csv::recordings_to_csv(cohort.recordings);
  const auto parsed = csv::recordings_from_csv(text);
  REQUIRE(parsed.size() == cohort.recordings.size());
  for (std::size_t r = 0; r < parsed.size(); ++r) {
    const auto& a = cohort.recordings[r];
    const auto& b = parsed[r];
    CHECK(a.subject_id == b.subject_id);
    CHECK(a.task_id == b.task_id);
    REQUIRE(a.strokes.size() == b.strokes.size());
    for (std::size_t s = 0; s < a.strokes.size(); ++s) {
      CHECK(a.strokes[s].index == b.strokes[s].index);
      REQUIRE(a.strokes[s].samples.size() == b.strokes[s].samples.size());
      for (std::size_t i = 0; i < a.strokes[s].samples.size(); ++i) {
        const auto& pa = a.strokes[s].samples[i];
        const auto& pb = b.strokes[s].samples[i];
        CHECK(pa.t == pb.t);  // bit-exact via shortest round-trip formatting
        CHECK(pa.x == pb.x);
        CHECK(pa.y == pb.y);
        CHECK(pa.pressure == pb.pressure);
        CHECK(pa.on_paper == pb.on_paper);
      }
    }
  }

  const std::string subj_text = csv::subjects_to_csv(cohort.subjects);
  const auto subjects = csv::subjects_from_csv(subj_text);
  REQUIRE(subjects.size() == cohort.subjects.size());
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    CHECK(subjects[i].subject_id == cohort.subjects[i].subject_id);
    CHECK(subjects[i].label == cohort.subjects[i].label);
    CHECK(subjects[i].sex == cohort.subjects[i].sex);
    CHECK(subjects[i].age == cohort.subjects[i].age);
    CHECK(subjects[i].work == cohort.subjects[i].work);
    CHECK(subjects[i].education == cohort.subjects[i].education);
  }
}

TEST_CASE("generator output passes validation for several seeds") {
  for (std::uint64_t seed : {1ULL, 7ULL, 99ULL}) {
    synth::GeneratorConfig cfg;
    cfg.seed = seed;
    cfg.n_ad = 1;
    cfg.n_hc = 1;
    cfg.tasks = {1, 17};
    cfg.strokes_per_task = {8, 12};
    cfg.samples_per_stroke = {20, 50};
    const synth::Cohort cohort = synth::generate_cohort(cfg);
    for (const auto& rec : cohort.recordings) {
      CHECK(validate_recording(rec).empty());
    }
  }
}

TEST_CASE("malformed CSV rows raise DataError with line number") {
  CHECK_THROWS_AS(csv::subjects_from_csv("subject_id,label,sex,age,work,education\nX,2,female,70,manual,10\n"),
                  DataError);
  CHECK_THROWS_AS(csv::recordings_from_csv("h\nA,1,1,0.0,nope,0,0,1\n"), DataError);
  try {
    csv::recordings_from_csv("header\nA,1,1,0.0,nope,0,0,1\n");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}
