#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "hwad/dataset.hpp"

namespace hwad::tss {

// Score components for one (stride, window) cell. All components lie in
// [0, 1]; the combined score is d_s + a - r + e in [-1, 3].
struct TssComponents {
  double d_s = 0.0;  // stroke-count stability
  double a = 0.0;    // autocorrelation persistence
  double r = 0.0;    // stride redundancy
  double e = 0.0;    // variance-normalized entropy
  bool acf_warning = false;

  double tss() const { return d_s + a - r + e; }
};

// 1 / (1 + CV) of the per-recording window counts at window size w (stride
// fixed at 1). CV uses the population standard deviation.
double stroke_count_stability(const std::vector<FeatureSequence>& sequences, int w);

// Biased autocorrelation estimator, lags 0..max_lag.
std::vector<double> biased_acf(const std::vector<double>& signal, int max_lag);

struct AcfResult {
  int lag = 0;
  double a = 0.0;
  bool warning = false;  // constant signal, ACF undefined
};

// Smallest lag with ACF below `threshold`; clamps to max_lag when no lag
// decays below it. a = min(lag, w) / w.
AcfResult autocorr_persistence(const std::vector<double>& signal, double threshold,
                               int max_lag, int w);

// Dataset-level variant: per-recording ACFs of the per-stroke mean-speed
// sequence (one column of the feature rows), averaged across recordings.
AcfResult dataset_autocorr_persistence(const std::vector<FeatureSequence>& sequences,
                                       int mean_speed_column, double threshold, int w);

// Normalized mutual information (arithmetic-mean normalization, 16-bin
// equal-width histograms) between two equally long value sequences.
double normalized_mutual_information(const std::vector<double>& a,
                                     const std::vector<double>& b);

// Mean NMI between consecutive windows' flattened values over all recordings;
// the later window is circularly aligned on the rows the pair shares, so the
// score is non-increasing in stride. 0 when no recording yields two windows.
double stride_redundancy(const std::vector<FeatureSequence>& sequences, int w, int s);

// Mean over stride-1 windows of the Shannon entropy of the 16-bin histogram
// of z-scored window values, divided by log 16. Constant windows contribute 0.
double window_entropy(const std::vector<FeatureSequence>& sequences, int w);

struct GridCell {
  int stride = 1;
  int window = 1;
  TssComponents components;
};

struct GridScan {
  std::vector<GridCell> cells;  // stride-major, window-minor order
  std::size_t argmax = 0;

  const GridCell& best() const { return cells[argmax]; }
};

GridScan tss_grid_scan(const std::vector<FeatureSequence>& sequences,
                       const std::vector<int>& w_grid, const std::vector<int>& s_grid);

// CSV export: stride,window,d_s,a,r,e,tss
std::string surface_to_csv(const GridScan& scan);

}  // namespace hwad::tss
