#include "hwad/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hwad/errors.hpp"

namespace hwad::kin {

namespace {

constexpr double kTwoPi = 2.0 * 3.141592653589793238462643383279502884;

// One derivative level: central differences inside, one-sided at the ends.
std::vector<double> derivative(const std::vector<double>& v, const std::vector<double>& t) {
  const std::size_t n = v.size();
  std::vector<double> d(n);
  d[0] = (v[1] - v[0]) / (t[1] - t[0]);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    d[i] = (v[i + 1] - v[i - 1]) / (t[i + 1] - t[i - 1]);
  }
  d[n - 1] = (v[n - 1] - v[n - 2]) / (t[n - 1] - t[n - 2]);
  return d;
}

double wrap_angle(double a) {
  while (a > 3.141592653589793238462643383279502884) a -= kTwoPi;
  while (a <= -3.141592653589793238462643383279502884) a += kTwoPi;
  return a;
}

double population_std(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(v.size()));
}

}  // namespace

KinematicSeries differentiate(const Stroke& stroke) {
  const std::size_t n = stroke.samples.size();
  if (n < 5) {
    throw StrokeTooShort("stroke " + std::to_string(stroke.index) + " has " +
                         std::to_string(n) + " samples; need >= 5");
  }
  std::vector<double> xs(n), ys(n), ts(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = stroke.samples[i].x;
    ys[i] = stroke.samples[i].y;
    ts[i] = stroke.samples[i].t;
  }
  KinematicSeries k;
  k.vx = derivative(xs, ts);
  k.vy = derivative(ys, ts);
  k.ax = derivative(k.vx, ts);
  k.ay = derivative(k.vy, ts);
  k.jx = derivative(k.ax, ts);
  k.jy = derivative(k.ay, ts);
  k.speed.resize(n);
  for (std::size_t i = 0; i < n; ++i) k.speed[i] = std::hypot(k.vx[i], k.vy[i]);
  return k;
}

// ---------------------------------------------------------------------------
// Segmentation
// ---------------------------------------------------------------------------

namespace {

// Splits one on-paper run at vertical-velocity sign changes. A crossing
// between samples i and i+1 is accepted only when the peak speed on each
// flank (previous boundary to crossing, crossing to next crossing or run end)
// exceeds the noise floor.
std::vector<std::size_t> velocity_split_points(const std::vector<PenSample>& run) {
  const std::size_t n = run.size();
  if (n < 5) return {};

  Stroke tmp;
  tmp.samples = run;
  const KinematicSeries k = differentiate(tmp);

  const double max_speed = *std::max_element(k.speed.begin(), k.speed.end());
  const double floor = 0.05 * max_speed;

  // Candidate boundary: the first sample whose vy sign differs from the last
  // nonzero sign (exact zeros at the inversion apex stay with the old stroke).
  std::vector<std::size_t> crossings;
  int last_sign = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (k.vy[i] == 0.0) continue;
    const int sign = k.vy[i] > 0.0 ? 1 : -1;
    if (last_sign != 0 && sign != last_sign && i > 0) crossings.push_back(i);
    last_sign = sign;
  }

  std::vector<std::size_t> accepted;
  std::size_t left = 0;  // start of the current flank
  for (std::size_t c = 0; c < crossings.size(); ++c) {
    const std::size_t split = crossings[c];
    const std::size_t right_end = (c + 1 < crossings.size()) ? crossings[c + 1] : n;
    double left_peak = 0.0;
    for (std::size_t i = left; i < split; ++i) left_peak = std::max(left_peak, k.speed[i]);
    double right_peak = 0.0;
    for (std::size_t i = split; i < right_end; ++i) right_peak = std::max(right_peak, k.speed[i]);
    if (left_peak > floor && right_peak > floor) {
      accepted.push_back(split);
      left = split;
    }
  }
  return accepted;
}

}  // namespace

std::vector<Stroke> segment_strokes(const std::vector<PenSample>& samples,
                                    SegmentationMode mode) {
  std::vector<Stroke> out;
  if (samples.empty()) return out;

  // Pen-state runs first.
  std::vector<std::vector<PenSample>> runs;
  std::vector<PenSample> cur{samples.front()};
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (samples[i].on_paper != cur.back().on_paper) {
      runs.push_back(std::move(cur));
      cur.clear();
    }
    cur.push_back(samples[i]);
  }
  runs.push_back(std::move(cur));

  int index = 1;
  for (auto& run : runs) {
    std::vector<std::size_t> splits;
    if (mode == SegmentationMode::pen_state_velocity && run.front().on_paper) {
      splits = velocity_split_points(run);
    }
    std::size_t start = 0;
    splits.push_back(run.size());
    for (std::size_t split : splits) {
      if (split == start) continue;
      Stroke s;
      s.index = index++;
      s.samples.assign(run.begin() + static_cast<std::ptrdiff_t>(start),
                       run.begin() + static_cast<std::ptrdiff_t>(split));
      out.push_back(std::move(s));
      start = split;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scalar stroke measures
// ---------------------------------------------------------------------------

namespace {

// Population std of the perpendicular distances to the total-least-squares
// line (principal direction of the 2x2 point covariance).
double tls_perpendicular_spread(const Stroke& stroke) {
  const auto& s = stroke.samples;
  double mx = 0.0, my = 0.0;
  for (const auto& p : s) {
    mx += p.x;
    my += p.y;
  }
  mx /= static_cast<double>(s.size());
  my /= static_cast<double>(s.size());

  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (const auto& p : s) {
    const double dx = p.x - mx;
    const double dy = p.y - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  // Largest eigenvector of [[sxx, sxy], [sxy, syy]].
  const double tr = sxx + syy;
  const double det = sxx * syy - sxy * sxy;
  const double lam = 0.5 * tr + std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
  double ux, uy;
  if (std::abs(sxy) > 1e-18) {
    ux = lam - syy;
    uy = sxy;
  } else if (sxx >= syy) {
    ux = 1.0;
    uy = 0.0;
  } else {
    ux = 0.0;
    uy = 1.0;
  }
  const double norm = std::hypot(ux, uy);
  ux /= norm;
  uy /= norm;

  std::vector<double> dist(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    // Perpendicular distance = component of (p - centroid) along the normal.
    dist[i] = -(s[i].x - mx) * uy + (s[i].y - my) * ux;
  }
  return population_std(dist);
}

}  // namespace

double straightness_error(const Stroke& stroke) {
  const auto& s = stroke.samples;
  if (s.size() < 2) throw StrokeTooShort("straightness needs >= 2 samples");
  const double chord = std::hypot(s.back().x - s.front().x, s.back().y - s.front().y);
  if (chord < 1e-9) throw DegenerateStroke("coincident stroke endpoints");
  return tls_perpendicular_spread(stroke) / chord;
}

double normalized_jerk(const KinematicSeries& series, double duration,
                       double road_length, JerkAxis axis) {
  if (duration <= 0.0) throw DegenerateStroke("non-positive duration");
  if (road_length <= 0.0) throw DegenerateStroke("zero road length");
  const std::size_t n = series.size();
  std::vector<double> j2(n);
  for (std::size_t i = 0; i < n; ++i) {
    j2[i] = (axis == JerkAxis::y) ? series.jy[i] * series.jy[i]
                                  : series.jx[i] * series.jx[i] + series.jy[i] * series.jy[i];
  }
  const double h = duration / static_cast<double>(n - 1);
  double integral = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) integral += 0.5 * (j2[i] + j2[i + 1]) * h;
  return std::sqrt(0.5 * integral * std::pow(duration, 5) / (road_length * road_length));
}

double arc_length(const Stroke& stroke) {
  double len = 0.0;
  for (std::size_t i = 1; i < stroke.samples.size(); ++i) {
    len += std::hypot(stroke.samples[i].x - stroke.samples[i - 1].x,
                      stroke.samples[i].y - stroke.samples[i - 1].y);
  }
  return len;
}

// ---------------------------------------------------------------------------
// Feature extraction
// ---------------------------------------------------------------------------

namespace {

// Shoelace area of the closed polygon formed by prev's points followed by
// cur's points.
double loop_surface(const Stroke* prev, const Stroke& cur) {
  if (prev == nullptr) return 0.0;
  std::vector<const PenSample*> poly;
  poly.reserve(prev->samples.size() + cur.samples.size());
  for (const auto& p : prev->samples) poly.push_back(&p);
  for (const auto& p : cur.samples) poly.push_back(&p);
  double acc = 0.0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto* a = poly[i];
    const auto* b = poly[(i + 1) % n];
    acc += a->x * b->y - b->x * a->y;
  }
  return 0.5 * std::abs(acc);
}

// Count of local extrema of the acceleration magnitude whose prominence is at
// least 5% of the series' standard deviation. Prominence follows the usual
// topographic definition; minima are handled on the negated series.
int acceleration_peak_count(const KinematicSeries& k) {
  const std::size_t n = k.size();
  std::vector<double> mag(n);
  for (std::size_t i = 0; i < n; ++i) mag[i] = std::hypot(k.ax[i], k.ay[i]);
  const double threshold = 0.05 * population_std(mag);

  auto prominence = [](const std::vector<double>& v, std::size_t peak) {
    // Walk outward until a higher value; the base on each side is the minimum
    // over the walked interval.
    double left_min = v[peak];
    for (std::size_t i = peak; i-- > 0;) {
      if (v[i] > v[peak]) break;
      left_min = std::min(left_min, v[i]);
    }
    double right_min = v[peak];
    for (std::size_t i = peak + 1; i < v.size(); ++i) {
      if (v[i] > v[peak]) break;
      right_min = std::min(right_min, v[i]);
    }
    return v[peak] - std::max(left_min, right_min);
  };

  std::vector<double> neg(n);
  for (std::size_t i = 0; i < n; ++i) neg[i] = -mag[i];

  int count = 0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (mag[i] > mag[i - 1] && mag[i] > mag[i + 1]) {
      if (prominence(mag, i) >= threshold) ++count;
    } else if (mag[i] < mag[i - 1] && mag[i] < mag[i + 1]) {
      if (prominence(neg, i) >= threshold) ++count;
    }
  }
  return count;
}

}  // namespace

StrokeFeatureVector extract_stroke_features(const Stroke& stroke,
                                            const Stroke* prev,
                                            int task_total_strokes) {
  const auto& s = stroke.samples;
  const KinematicSeries k = differentiate(stroke);
  const std::size_t n = s.size();

  const double duration = stroke.duration();
  if (duration <= 0.0) throw DegenerateStroke("stroke with zero duration");

  double min_x = s[0].x, max_x = s[0].x, min_y = s[0].y, max_y = s[0].y;
  for (const auto& p : s) {
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  }
  const double v_size = max_y - min_y;
  const double h_size = max_x - min_x;

  const double dx = s.back().x - s.front().x;
  const double dy = s.back().y - s.front().y;
  const double chord = std::hypot(dx, dy);
  const double slant = std::atan2(dy, dx);

  // Direction over the first 80 ms (16 samples at 200 Hz), all samples when
  // the stroke is shorter.
  const std::size_t head = std::min<std::size_t>(16, n);
  const double head_dx = s[head - 1].x - s[0].x;
  const double head_dy = s[head - 1].y - s[0].y;
  const double initial_slant = std::atan2(head_dy, head_dx);

  std::size_t peak_speed_at = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (k.speed[i] > k.speed[peak_speed_at]) peak_speed_at = i;
  }

  double air_time = 0.0;
  for (const auto& p : s) {
    if (!p.on_paper) air_time += 1.0;
  }
  const double pen_up_ratio = air_time / static_cast<double>(n);

  // Closed strokes (chord below 1e-9) normalize by the bounding-box diagonal
  // instead; applies to the road-length ratio and the straightness error.
  const double road = arc_length(stroke);
  const double diag = std::hypot(h_size, v_size);
  double denom = chord;
  if (chord < 1e-9) {
    if (diag < 1e-12) throw DegenerateStroke("stroke with no spatial extent");
    denom = diag;
  }
  const double road_ratio = road / denom;
  if (road <= 0.0) throw DegenerateStroke("stroke with zero path length");

  double mean_speed = 0.0, rms_jy = 0.0, rms_j = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mean_speed += k.speed[i];
    rms_jy += k.jy[i] * k.jy[i];
    rms_j += k.jx[i] * k.jx[i] + k.jy[i] * k.jy[i];
  }
  mean_speed /= static_cast<double>(n);
  rms_jy = std::sqrt(rms_jy / static_cast<double>(n));
  rms_j = std::sqrt(rms_j / static_cast<double>(n));

  double pressure_sum = 0.0;
  std::size_t on_paper_n = 0;
  for (const auto& p : s) {
    if (p.on_paper) {
      pressure_sum += p.pressure;
      ++on_paper_n;
    }
  }
  const double mean_pressure = on_paper_n > 0 ? pressure_sum / static_cast<double>(on_paper_n) : 0.0;

  const double nj_y = normalized_jerk(k, duration, road, JerkAxis::y);
  const double nj = normalized_jerk(k, duration, road, JerkAxis::both);

  StrokeFeatureVector f{};
  f[kFeatSegmentIndex] = static_cast<double>(stroke.index);
  f[kFeatStartTime] = s.front().t;
  f[kFeatDuration] = duration;
  f[kFeatStartVerticalPos] = s.front().y;
  f[kFeatVerticalSize] = v_size;
  f[kFeatPeakVerticalVelocity] = *std::max_element(k.vy.begin(), k.vy.end());
  f[kFeatPeakVerticalAcceleration] = *std::max_element(k.ay.begin(), k.ay.end());
  f[kFeatStartHorizontalPos] = s.front().x;
  f[kFeatHorizontalSize] = h_size;
  f[kFeatStraightnessError] = tls_perpendicular_spread(stroke) / denom;
  f[kFeatSlant] = slant;
  f[kFeatLoopSurface] = loop_surface(prev, stroke);
  f[kFeatRelativeInitialSlant] = wrap_angle(initial_slant - slant);
  f[kFeatRelativeTimeToPeakVelocity] = (s[peak_speed_at].t - s.front().t) / duration;
  f[kFeatPenUpRatio] = pen_up_ratio;
  f[kFeatAbsoluteSize] = std::hypot(v_size, h_size);
  f[kFeatAverageAbsoluteVelocity] = mean_speed;
  f[kFeatRoadLengthRatio] = road_ratio;
  f[kFeatAbsoluteYJerk] = rms_jy;
  f[kFeatNormalizedYJerk] = nj_y;
  f[kFeatAverageNormalizedYJerk] = nj_y;  // task mean filled by extract_task_features
  f[kFeatAbsoluteJerk] = rms_j;
  f[kFeatNormalizedJerk] = nj;
  f[kFeatAverageNormalizedJerk] = nj;  // task mean filled by extract_task_features
  f[kFeatAccelerationPeakCount] = static_cast<double>(acceleration_peak_count(k));
  f[kFeatAveragePenPressure] = mean_pressure;
  f[kFeatTaskStrokeCount] = static_cast<double>(task_total_strokes);
  return f;
}

std::vector<StrokeFeatureVector> extract_task_features(const TaskRecording& rec) {
  const int total = static_cast<int>(rec.strokes.size());
  std::vector<StrokeFeatureVector> rows;
  rows.reserve(rec.strokes.size());
  for (std::size_t i = 0; i < rec.strokes.size(); ++i) {
    const Stroke* prev = (i == 0) ? nullptr : &rec.strokes[i - 1];
    rows.push_back(extract_stroke_features(rec.strokes[i], prev, total));
  }
  if (!rows.empty()) {
    double mean_y = 0.0, mean_both = 0.0;
    for (const auto& r : rows) {
      mean_y += r[kFeatNormalizedYJerk];
      mean_both += r[kFeatNormalizedJerk];
    }
    mean_y /= static_cast<double>(rows.size());
    mean_both /= static_cast<double>(rows.size());
    for (auto& r : rows) {
      r[kFeatAverageNormalizedYJerk] = mean_y;
      r[kFeatAverageNormalizedJerk] = mean_both;
    }
  }
  return rows;
}

}  // namespace hwad::kin
