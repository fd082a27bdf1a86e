#include "hwad/preprocessing.hpp"

#include <algorithm>
#include <cmath>

#include "hwad/errors.hpp"

namespace hwad::prep {

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw EmptyFit("quantile of empty sample");
  std::sort(values.begin(), values.end());
  const double h = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(h);
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = h - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

RobustScaleParams robust_fit(const std::vector<std::vector<double>>& train_rows) {
  if (train_rows.size() < 2) throw EmptyFit("robust_fit needs at least 2 rows");
  const std::size_t dim = train_rows.front().size();
  RobustScaleParams p;
  p.median.resize(dim);
  p.iqr.resize(dim);
  std::vector<double> col(train_rows.size());
  for (std::size_t c = 0; c < dim; ++c) {
    for (std::size_t r = 0; r < train_rows.size(); ++r) col[r] = train_rows[r][c];
    p.median[c] = quantile(col, 0.5);
    const double iqr = quantile(col, 0.75) - quantile(col, 0.25);
    p.iqr[c] = iqr < 1e-12 ? 1.0 : iqr;
  }
  return p;
}

void robust_transform_inplace(std::vector<std::vector<double>>& rows,
                              const RobustScaleParams& params) {
  for (auto& row : rows) {
    if (row.size() != params.dim()) {
      throw DataError("robust_transform: dimension mismatch");
    }
    for (std::size_t c = 0; c < row.size(); ++c) {
      row[c] = (row[c] - params.median[c]) / params.iqr[c];
    }
  }
}

std::vector<std::vector<double>> robust_transform(const std::vector<std::vector<double>>& rows,
                                                  const RobustScaleParams& params) {
  auto out = rows;
  robust_transform_inplace(out, params);
  return out;
}

std::size_t window_count(std::size_t length, int ws, int stride) {
  if (length < static_cast<std::size_t>(ws)) return 1;
  return (length - static_cast<std::size_t>(ws)) / static_cast<std::size_t>(stride) + 1;
}

std::vector<WindowBatch> make_windows(const std::vector<std::vector<double>>& rows,
                                      int ws, int stride, int task_id,
                                      const Statics& statics,
                                      const std::string& subject_id, int label) {
  std::vector<WindowBatch> out;
  if (rows.empty() || ws < 1 || stride < 1) return out;
  const int dim = static_cast<int>(rows.front().size());

  auto new_window = [&]() {
    WindowBatch w;
    w.ws = ws;
    w.feature_dim = dim;
    w.task_id = task_id;
    w.statics = statics;
    w.subject_id = subject_id;
    w.label = label;
    w.values.reserve(static_cast<std::size_t>(ws) * dim);
    return w;
  };

  const std::size_t length = rows.size();
  if (length < static_cast<std::size_t>(ws)) {
    WindowBatch w = new_window();
    const std::size_t pad = static_cast<std::size_t>(ws) - length;
    for (std::size_t i = 0; i < pad; ++i) {
      w.values.insert(w.values.end(), rows.front().begin(), rows.front().end());
    }
    for (const auto& row : rows) {
      w.values.insert(w.values.end(), row.begin(), row.end());
    }
    out.push_back(std::move(w));
    return out;
  }

  for (std::size_t offset = 0; offset + ws <= length; offset += static_cast<std::size_t>(stride)) {
    WindowBatch w = new_window();
    for (std::size_t i = 0; i < static_cast<std::size_t>(ws); ++i) {
      const auto& row = rows[offset + i];
      w.values.insert(w.values.end(), row.begin(), row.end());
    }
    out.push_back(std::move(w));
  }
  return out;
}

void window_standardize(WindowBatch& window) {
  const int rows = window.ws;
  const int cols = window.feature_dim;
  if (rows == 0 || cols == 0) return;
  for (int c = 0; c < cols; ++c) {
    double mean = 0.0;
    for (int r = 0; r < rows; ++r) mean += window.at(r, c);
    mean /= rows;
    double var = 0.0;
    for (int r = 0; r < rows; ++r) {
      const double d = window.at(r, c) - mean;
      var += d * d;
    }
    const double sd = std::sqrt(var / rows);
    if (sd < 1e-12) {
      for (int r = 0; r < rows; ++r) window.at(r, c) = 0.0;
    } else {
      for (int r = 0; r < rows; ++r) window.at(r, c) = (window.at(r, c) - mean) / sd;
    }
  }
}

}  // namespace hwad::prep
