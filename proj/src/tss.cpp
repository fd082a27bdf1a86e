#include "hwad/tss.hpp"

#include <algorithm>
#include <cmath>

#include "hwad/csv.hpp"
#include "hwad/errors.hpp"
#include "hwad/preprocessing.hpp"

namespace hwad::tss {

namespace {

constexpr int kBins = 16;

std::vector<const FeatureSequence*> canonical_order(const std::vector<FeatureSequence>& seqs) {
  std::vector<const FeatureSequence*> ptrs;
  ptrs.reserve(seqs.size());
  for (const auto& s : seqs) ptrs.push_back(&s);
  std::sort(ptrs.begin(), ptrs.end(), [](const FeatureSequence* a, const FeatureSequence* b) {
    if (a->subject_id != b->subject_id) return a->subject_id < b->subject_id;
    return a->task_id < b->task_id;
  });
  return ptrs;
}

// Flattened values of each sliding window (no padding branch needed for the
// redundancy/entropy estimators beyond what make_windows provides).
std::vector<std::vector<double>> flat_windows(const FeatureSequence& seq, int w, int s) {
  std::vector<std::vector<double>> out;
  const auto windows = prep::make_windows(seq.rows, w, s, seq.task_id, Statics{}, seq.subject_id, 0);
  out.reserve(windows.size());
  for (const auto& win : windows) out.push_back(win.values);
  return out;
}

int bin_of(double v, double lo, double width) {
  int b = static_cast<int>((v - lo) / width);
  return std::clamp(b, 0, kBins - 1);
}

}  // namespace

double stroke_count_stability(const std::vector<FeatureSequence>& sequences, int w) {
  if (sequences.empty()) throw DataError("stroke_count_stability on empty dataset");
  std::vector<double> counts;
  counts.reserve(sequences.size());
  for (const auto* seq : canonical_order(sequences)) {
    counts.push_back(static_cast<double>(prep::window_count(seq->rows.size(), w, 1)));
  }
  double mean = 0.0;
  for (double c : counts) mean += c;
  mean /= static_cast<double>(counts.size());
  double var = 0.0;
  for (double c : counts) var += (c - mean) * (c - mean);
  const double sd = std::sqrt(var / static_cast<double>(counts.size()));
  const double cv = sd / mean;  // counts are >= 1, so mean > 0
  return 1.0 / (1.0 + cv);
}

std::vector<double> biased_acf(const std::vector<double>& signal, int max_lag) {
  const auto n = static_cast<std::ptrdiff_t>(signal.size());
  double mean = 0.0;
  for (double v : signal) mean += v;
  mean /= static_cast<double>(n);
  double c0 = 0.0;
  for (double v : signal) c0 += (v - mean) * (v - mean);
  c0 /= static_cast<double>(n);

  std::vector<double> acf(static_cast<std::size_t>(max_lag) + 1, 0.0);
  if (c0 <= 0.0) return acf;  // caller decides how to flag constants
  acf[0] = 1.0;
  for (int k = 1; k <= max_lag; ++k) {
    double ck = 0.0;
    for (std::ptrdiff_t t = 0; t + k < n; ++t) {
      ck += (signal[static_cast<std::size_t>(t)] - mean) *
            (signal[static_cast<std::size_t>(t + k)] - mean);
    }
    ck /= static_cast<double>(n);
    acf[static_cast<std::size_t>(k)] = ck / c0;
  }
  return acf;
}

namespace {

AcfResult lag_from_acf(const std::vector<double>& acf, bool defined, double threshold,
                       int max_lag, int w) {
  AcfResult res;
  if (!defined) {
    res.lag = 0;
    res.a = 0.0;
    res.warning = true;
    return res;
  }
  res.lag = max_lag;
  for (int k = 1; k <= max_lag; ++k) {
    if (acf[static_cast<std::size_t>(k)] < threshold) {
      res.lag = k;
      break;
    }
  }
  res.a = static_cast<double>(std::min(res.lag, w)) / static_cast<double>(w);
  return res;
}

bool is_constant(const std::vector<double>& signal) {
  for (double v : signal) {
    if (v != signal.front()) return false;
  }
  return true;
}

}  // namespace

AcfResult autocorr_persistence(const std::vector<double>& signal, double threshold,
                               int max_lag, int w) {
  if (static_cast<int>(signal.size()) <= max_lag) {
    throw DataError("autocorr_persistence: signal shorter than max_lag");
  }
  if (is_constant(signal)) return lag_from_acf({}, false, threshold, max_lag, w);
  return lag_from_acf(biased_acf(signal, max_lag), true, threshold, max_lag, w);
}

AcfResult dataset_autocorr_persistence(const std::vector<FeatureSequence>& sequences,
                                       int mean_speed_column, double threshold, int w) {
  // max usable lag: capped by the longest recording.
  int max_lag = 0;
  for (const auto& seq : sequences) {
    max_lag = std::max(max_lag, static_cast<int>(seq.rows.size()) - 1);
  }
  max_lag = std::min(max_lag, w);
  if (max_lag < 1) return AcfResult{0, 0.0, true};

  std::vector<double> acc(static_cast<std::size_t>(max_lag) + 1, 0.0);
  std::vector<int> n_contrib(static_cast<std::size_t>(max_lag) + 1, 0);
  bool any = false;
  for (const auto* seq : canonical_order(sequences)) {
    std::vector<double> signal;
    signal.reserve(seq->rows.size());
    for (const auto& row : seq->rows) {
      signal.push_back(row[static_cast<std::size_t>(mean_speed_column)]);
    }
    if (signal.size() < 2 || is_constant(signal)) continue;
    const int lag_cap = std::min(max_lag, static_cast<int>(signal.size()) - 1);
    const auto acf = biased_acf(signal, lag_cap);
    for (int k = 0; k <= lag_cap; ++k) {
      acc[static_cast<std::size_t>(k)] += acf[static_cast<std::size_t>(k)];
      ++n_contrib[static_cast<std::size_t>(k)];
    }
    any = true;
  }
  if (!any) return AcfResult{0, 0.0, true};
  std::vector<double> avg(acc.size(), 0.0);
  for (std::size_t k = 0; k < acc.size(); ++k) {
    avg[k] = n_contrib[k] > 0 ? acc[k] / n_contrib[k] : 0.0;
  }
  return lag_from_acf(avg, true, threshold, max_lag, w);
}

double normalized_mutual_information(const std::vector<double>& a,
                                     const std::vector<double>& b) {
  const std::size_t n = std::min(a.size(), b.size());
  if (n == 0) return 0.0;
  const auto [a_lo_it, a_hi_it] = std::minmax_element(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(n));
  const auto [b_lo_it, b_hi_it] = std::minmax_element(b.begin(), b.begin() + static_cast<std::ptrdiff_t>(n));
  const double a_lo = *a_lo_it, a_w = (*a_hi_it - a_lo) / kBins;
  const double b_lo = *b_lo_it, b_w = (*b_hi_it - b_lo) / kBins;

  double joint[kBins][kBins] = {};
  double pa[kBins] = {};
  double pb[kBins] = {};
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int ia = a_w > 0.0 ? bin_of(a[i], a_lo, a_w) : 0;
    const int ib = b_w > 0.0 ? bin_of(b[i], b_lo, b_w) : 0;
    joint[ia][ib] += inv_n;
    pa[ia] += inv_n;
    pb[ib] += inv_n;
  }

  double ha = 0.0, hb = 0.0, mi = 0.0;
  for (int i = 0; i < kBins; ++i) {
    if (pa[i] > 0.0) ha -= pa[i] * std::log(pa[i]);
    if (pb[i] > 0.0) hb -= pb[i] * std::log(pb[i]);
  }
  for (int i = 0; i < kBins; ++i) {
    for (int j = 0; j < kBins; ++j) {
      if (joint[i][j] > 0.0) {
        mi += joint[i][j] * std::log(joint[i][j] / (pa[i] * pb[j]));
      }
    }
  }
  const double denom = 0.5 * (ha + hb);
  if (denom <= 0.0) return 0.0;
  return mi / denom;  // MI <= min(Ha, Hb) keeps this in [0, 1]
}

double stride_redundancy(const std::vector<FeatureSequence>& sequences, int w, int s) {
  double acc = 0.0;
  std::size_t pairs = 0;
  for (const auto* seq : canonical_order(sequences)) {
    if (seq->rows.empty()) continue;
    const int dim = static_cast<int>(seq->rows.front().size());
    const auto windows = flat_windows(*seq, w, s);
    // The later window is circularly rotated so rows shared between the two
    // windows pair up; redundancy then tracks the actual overlap instead of
    // the lag-s dependence of the signal.
    const int shift = s % w;
    std::vector<double> aligned(static_cast<std::size_t>(w) * dim);
    for (std::size_t i = 0; i + 1 < windows.size(); ++i) {
      const auto& next = windows[i + 1];
      for (int row = 0; row < w; ++row) {
        const int src = ((row - shift) % w + w) % w;
        std::copy(next.begin() + static_cast<std::ptrdiff_t>(src) * dim,
                  next.begin() + static_cast<std::ptrdiff_t>(src + 1) * dim,
                  aligned.begin() + static_cast<std::ptrdiff_t>(row) * dim);
      }
      acc += normalized_mutual_information(windows[i], aligned);
      ++pairs;
    }
  }
  return pairs == 0 ? 0.0 : acc / static_cast<double>(pairs);
}

double window_entropy(const std::vector<FeatureSequence>& sequences, int w) {
  double acc = 0.0;
  std::size_t n_windows = 0;
  for (const auto* seq : canonical_order(sequences)) {
    for (auto& values : flat_windows(*seq, w, 1)) {
      ++n_windows;
      double mean = 0.0;
      for (double v : values) mean += v;
      mean /= static_cast<double>(values.size());
      double var = 0.0;
      for (double v : values) var += (v - mean) * (v - mean);
      const double sd = std::sqrt(var / static_cast<double>(values.size()));
      if (sd < 1e-12) continue;  // constant window contributes 0
      for (double& v : values) v = (v - mean) / sd;
      const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
      const double lo = *lo_it;
      const double width = (*hi_it - lo) / kBins;
      if (width <= 0.0) continue;
      double hist[kBins] = {};
      const double inv = 1.0 / static_cast<double>(values.size());
      for (double v : values) hist[bin_of(v, lo, width)] += inv;
      double h = 0.0;
      for (double p : hist) {
        if (p > 0.0) h -= p * std::log(p);
      }
      acc += h / std::log(static_cast<double>(kBins));
    }
  }
  return n_windows == 0 ? 0.0 : acc / static_cast<double>(n_windows);
}

GridScan tss_grid_scan(const std::vector<FeatureSequence>& sequences,
                       const std::vector<int>& w_grid, const std::vector<int>& s_grid) {
  if (w_grid.empty() || s_grid.empty()) throw ConfigError("tss grid must be non-empty");

  GridScan scan;
  for (int w : w_grid) {
    // The three stride-independent components are shared across the row.
    const double d_s = stroke_count_stability(sequences, w);
    const AcfResult acf =
        dataset_autocorr_persistence(sequences, kFeatAverageAbsoluteVelocity, 0.2, w);
    const double e = window_entropy(sequences, w);
    for (int s : s_grid) {
      GridCell cell;
      cell.stride = s;
      cell.window = w;
      cell.components.d_s = d_s;
      cell.components.a = acf.a;
      cell.components.acf_warning = acf.warning;
      cell.components.e = e;
      cell.components.r = stride_redundancy(sequences, w, s);
      scan.cells.push_back(cell);
    }
  }
  // Reorder stride-major for the canonical surface layout.
  std::sort(scan.cells.begin(), scan.cells.end(), [&](const GridCell& a, const GridCell& b) {
    const auto sa = std::find(s_grid.begin(), s_grid.end(), a.stride) - s_grid.begin();
    const auto sb = std::find(s_grid.begin(), s_grid.end(), b.stride) - s_grid.begin();
    if (sa != sb) return sa < sb;
    const auto wa = std::find(w_grid.begin(), w_grid.end(), a.window) - w_grid.begin();
    const auto wb = std::find(w_grid.begin(), w_grid.end(), b.window) - w_grid.begin();
    return wa < wb;
  });
  scan.argmax = 0;
  for (std::size_t i = 1; i < scan.cells.size(); ++i) {
    if (scan.cells[i].components.tss() > scan.cells[scan.argmax].components.tss()) {
      scan.argmax = i;
    }
  }
  return scan;
}

std::string surface_to_csv(const GridScan& scan) {
  std::string out = "stride,window,d_s,a,r,e,tss\n";
  for (const auto& cell : scan.cells) {
    out += std::to_string(cell.stride);
    out += ',';
    out += std::to_string(cell.window);
    out += ',';
    out += csv::format_double(cell.components.d_s);
    out += ',';
    out += csv::format_double(cell.components.a);
    out += ',';
    out += csv::format_double(cell.components.r);
    out += ',';
    out += csv::format_double(cell.components.e);
    out += ',';
    out += csv::format_double(cell.components.tss());
    out += '\n';
  }
  return out;
}

}  // namespace hwad::tss
