#pragma once

#include <vector>

#include "hwad/types.hpp"

namespace hwad::prep {

// Per-column median and interquartile range fitted on training rows only.
// An IQR below 1e-12 is replaced by 1 (constant-feature guard).
struct RobustScaleParams {
  std::vector<double> median;
  std::vector<double> iqr;

  std::size_t dim() const { return median.size(); }
};

// Linear-interpolation quantile of an unsorted sample (q in [0, 1]).
double quantile(std::vector<double> values, double q);

RobustScaleParams robust_fit(const std::vector<std::vector<double>>& train_rows);

// (x - median) / IQR per column, in place on a copy.
std::vector<std::vector<double>> robust_transform(const std::vector<std::vector<double>>& rows,
                                                  const RobustScaleParams& params);

void robust_transform_inplace(std::vector<std::vector<double>>& rows,
                              const RobustScaleParams& params);

// Sliding windows over one task's stroke-feature rows. Sequences shorter than
// ws yield a single window front-padded by repeating the first row. Window
// count is max(1, floor((L - ws) / stride) + 1).
std::vector<WindowBatch> make_windows(const std::vector<std::vector<double>>& rows,
                                      int ws, int stride, int task_id,
                                      const Statics& statics,
                                      const std::string& subject_id, int label);

std::size_t window_count(std::size_t length, int ws, int stride);

// Per-column standardization within the window: subtract mean, divide by the
// population std; columns with std < 1e-12 are zeroed. Idempotent.
void window_standardize(WindowBatch& window);

}  // namespace hwad::prep
