#pragma once

// Independent recomputation of the temporal-stability components, used to
// cross-check the grid scan. Shares only the data types with the library.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "hwad/dataset.hpp"
#include "hwad/types.hpp"

namespace hwad::tss_oracle {

inline std::vector<const FeatureSequence*> sorted_refs(const std::vector<FeatureSequence>& seqs) {
  std::vector<const FeatureSequence*> out;
  for (const auto& s : seqs) out.push_back(&s);
  std::sort(out.begin(), out.end(), [](const FeatureSequence* a, const FeatureSequence* b) {
    return std::make_pair(a->subject_id, a->task_id) < std::make_pair(b->subject_id, b->task_id);
  });
  return out;
}

inline std::size_t n_windows(std::size_t len, int w, int s) {
  if (len < static_cast<std::size_t>(w)) return 1;
  return (len - static_cast<std::size_t>(w)) / static_cast<std::size_t>(s) + 1;
}

inline double d_component(const std::vector<FeatureSequence>& seqs, int w) {
  std::vector<double> counts;
  for (const auto* s : sorted_refs(seqs)) {
    counts.push_back(static_cast<double>(n_windows(s->rows.size(), w, 1)));
  }
  double mean = 0.0;
  for (double c : counts) mean += c;
  mean /= static_cast<double>(counts.size());
  double var = 0.0;
  for (double c : counts) var += (c - mean) * (c - mean);
  const double cv = std::sqrt(var / static_cast<double>(counts.size())) / mean;
  return 1.0 / (1.0 + cv);
}

inline std::vector<double> acf_of(const std::vector<double>& x, int max_lag) {
  const std::size_t n = x.size();
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  double c0 = 0.0;
  for (double v : x) c0 += (v - mean) * (v - mean);
  c0 /= static_cast<double>(n);
  std::vector<double> acf(static_cast<std::size_t>(max_lag) + 1, 0.0);
  if (c0 <= 0.0) return acf;
  for (int k = 0; k <= max_lag; ++k) {
    double ck = 0.0;
    for (std::size_t i = 0; i + static_cast<std::size_t>(k) < n; ++i) {
      ck += (x[i] - mean) * (x[i + static_cast<std::size_t>(k)] - mean);
    }
    acf[static_cast<std::size_t>(k)] = ck / static_cast<double>(n) / c0;
  }
  return acf;
}

inline double a_component(const std::vector<FeatureSequence>& seqs, int speed_col, int w) {
  int max_lag = 0;
  for (const auto& s : seqs) max_lag = std::max(max_lag, static_cast<int>(s.rows.size()) - 1);
  max_lag = std::min(max_lag, w);
  if (max_lag < 1) return 0.0;
  std::vector<double> sum(static_cast<std::size_t>(max_lag) + 1, 0.0);
  std::vector<int> cnt(static_cast<std::size_t>(max_lag) + 1, 0);
  for (const auto* s : sorted_refs(seqs)) {
    std::vector<double> signal;
    for (const auto& row : s->rows) signal.push_back(row[static_cast<std::size_t>(speed_col)]);
    if (signal.size() < 2) continue;
    bool constant = true;
    for (double v : signal) constant = constant && v == signal.front();
    if (constant) continue;
    const int cap = std::min(max_lag, static_cast<int>(signal.size()) - 1);
    const auto acf = acf_of(signal, cap);
    for (int k = 0; k <= cap; ++k) {
      sum[static_cast<std::size_t>(k)] += acf[static_cast<std::size_t>(k)];
      cnt[static_cast<std::size_t>(k)] += 1;
    }
  }
  int lag = max_lag;
  for (int k = 1; k <= max_lag; ++k) {
    const double avg = cnt[static_cast<std::size_t>(k)] > 0
                           ? sum[static_cast<std::size_t>(k)] / cnt[static_cast<std::size_t>(k)]
                           : 0.0;
    if (avg < 0.2) {
      lag = k;
      break;
    }
  }
  return static_cast<double>(std::min(lag, w)) / static_cast<double>(w);
}

// Flattened windows with the front-padding rule.
inline std::vector<std::vector<double>> windows_of(const FeatureSequence& seq, int w, int s) {
  std::vector<std::vector<double>> out;
  const std::size_t len = seq.rows.size();
  const std::size_t dim = seq.rows.front().size();
  if (len < static_cast<std::size_t>(w)) {
    std::vector<double> win;
    for (std::size_t i = 0; i < static_cast<std::size_t>(w) - len; ++i) {
      win.insert(win.end(), seq.rows.front().begin(), seq.rows.front().end());
    }
    for (const auto& row : seq.rows) win.insert(win.end(), row.begin(), row.end());
    out.push_back(std::move(win));
    return out;
  }
  for (std::size_t off = 0; off + static_cast<std::size_t>(w) <= len;
       off += static_cast<std::size_t>(s)) {
    std::vector<double> win;
    win.reserve(static_cast<std::size_t>(w) * dim);
    for (std::size_t i = 0; i < static_cast<std::size_t>(w); ++i) {
      win.insert(win.end(), seq.rows[off + i].begin(), seq.rows[off + i].end());
    }
    out.push_back(std::move(win));
  }
  return out;
}

inline double nmi_of(const std::vector<double>& a, const std::vector<double>& b) {
  constexpr int kBins = 16;
  const std::size_t n = a.size();
  const double a_lo = *std::min_element(a.begin(), a.end());
  const double a_hi = *std::max_element(a.begin(), a.end());
  const double b_lo = *std::min_element(b.begin(), b.end());
  const double b_hi = *std::max_element(b.begin(), b.end());
  auto bin = [](double v, double lo, double hi) {
    if (hi <= lo) return 0;
    int idx = static_cast<int>((v - lo) / (hi - lo) * kBins);
    return std::min(std::max(idx, 0), kBins - 1);
  };
  std::vector<std::vector<double>> joint(kBins, std::vector<double>(kBins, 0.0));
  std::vector<double> pa(kBins, 0.0), pb(kBins, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const int ia = bin(a[i], a_lo, a_hi);
    const int ib = bin(b[i], b_lo, b_hi);
    joint[static_cast<std::size_t>(ia)][static_cast<std::size_t>(ib)] += 1.0;
    pa[static_cast<std::size_t>(ia)] += 1.0;
    pb[static_cast<std::size_t>(ib)] += 1.0;
  }
  const double inv = 1.0 / static_cast<double>(n);
  double ha = 0.0, hb = 0.0, mi = 0.0;
  for (int i = 0; i < kBins; ++i) {
    if (pa[static_cast<std::size_t>(i)] > 0) {
      const double p = pa[static_cast<std::size_t>(i)] * inv;
      ha -= p * std::log(p);
    }
    if (pb[static_cast<std::size_t>(i)] > 0) {
      const double p = pb[static_cast<std::size_t>(i)] * inv;
      hb -= p * std::log(p);
    }
  }
  for (int i = 0; i < kBins; ++i) {
    for (int j = 0; j < kBins; ++j) {
      const double pij = joint[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] * inv;
      if (pij > 0) {
        mi += pij * std::log(pij / (pa[static_cast<std::size_t>(i)] * inv *
                                     pb[static_cast<std::size_t>(j)] * inv));
      }
    }
  }
  if (ha + hb <= 0.0) return 0.0;
  return mi / (0.5 * (ha + hb));
}

inline double r_component(const std::vector<FeatureSequence>& seqs, int w, int s) {
  double sum = 0.0;
  std::size_t pairs = 0;
  for (const auto* seq : sorted_refs(seqs)) {
    if (seq->rows.empty()) continue;
    const int dim = static_cast<int>(seq->rows.front().size());
    const auto wins = windows_of(*seq, w, s);
    for (std::size_t i = 0; i + 1 < wins.size(); ++i) {
      // rotate the later window so shared rows line up
      std::vector<double> rotated;
      rotated.reserve(wins[i + 1].size());
      for (int row = 0; row < w; ++row) {
        int src = (row - s) % w;
        if (src < 0) src += w;
        for (int c = 0; c < dim; ++c) {
          rotated.push_back(wins[i + 1][static_cast<std::size_t>(src * dim + c)]);
        }
      }
      sum += nmi_of(wins[i], rotated);
      ++pairs;
    }
  }
  return pairs == 0 ? 0.0 : sum / static_cast<double>(pairs);
}

inline double e_component(const std::vector<FeatureSequence>& seqs, int w) {
  constexpr int kBins = 16;
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto* seq : sorted_refs(seqs)) {
    for (auto win : windows_of(*seq, w, 1)) {
      ++count;
      double mean = 0.0;
      for (double v : win) mean += v;
      mean /= static_cast<double>(win.size());
      double var = 0.0;
      for (double v : win) var += (v - mean) * (v - mean);
      const double sd = std::sqrt(var / static_cast<double>(win.size()));
      if (sd < 1e-12) continue;
      for (double& v : win) v = (v - mean) / sd;
      const double lo = *std::min_element(win.begin(), win.end());
      const double hi = *std::max_element(win.begin(), win.end());
      if (hi <= lo) continue;
      std::vector<double> hist(kBins, 0.0);
      for (double v : win) {
        int idx = static_cast<int>((v - lo) / (hi - lo) * kBins);
        hist[static_cast<std::size_t>(std::min(std::max(idx, 0), kBins - 1))] += 1.0;
      }
      double h = 0.0;
      for (double c : hist) {
        if (c > 0) {
          const double p = c / static_cast<double>(win.size());
          h -= p * std::log(p);
        }
      }
      sum += h / std::log(static_cast<double>(kBins));
    }
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

}  // namespace hwad::tss_oracle
