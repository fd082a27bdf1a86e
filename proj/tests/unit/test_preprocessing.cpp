#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "common/oracles.hpp"
#include "hwad/errors.hpp"
#include "hwad/preprocessing.hpp"
#include "hwad/rng.hpp"

using namespace hwad;

namespace {

std::vector<std::vector<double>> column(const std::vector<double>& values) {
  std::vector<std::vector<double>> rows;
  for (double v : values) rows.push_back({v});
  return rows;
}

}  // namespace

TEST_CASE("robust_fit: linear-interpolation quantiles") {
  const auto p = prep::robust_fit(column({0.0, 10.0, 20.0}));
  CHECK(p.median[0] == doctest::Approx(10.0));
  CHECK(p.iqr[0] == doctest::Approx(10.0));  // Q1 = 5, Q3 = 15

  // cross-check against the independent quantile oracle
  CHECK(p.median[0] == doctest::Approx(oracle::quantile({0, 10, 20}, 0.5)));
  CHECK(p.iqr[0] == doctest::Approx(oracle::quantile({0, 10, 20}, 0.75) -
                                    oracle::quantile({0, 10, 20}, 0.25)));
}

TEST_CASE("robust_fit: constant column guard") {
  const auto p = prep::robust_fit(column({4.0, 4.0, 4.0, 4.0}));
  CHECK(p.median[0] == 4.0);
  CHECK(p.iqr[0] == 1.0);
}

TEST_CASE("robust_fit: outlier inflates IQR but not the median") {
  const std::vector<double> with{1, 2, 3, 4, 100};
  const std::vector<double> without{1, 2, 3, 4};
  const auto p = prep::robust_fit(column(with));
  CHECK(p.median[0] == doctest::Approx(oracle::quantile(with, 0.5)));
  CHECK(p.median[0] == doctest::Approx(3.0));
  const double iqr_with = oracle::quantile(with, 0.75) - oracle::quantile(with, 0.25);
  const double iqr_without = oracle::quantile(without, 0.75) - oracle::quantile(without, 0.25);
  CHECK(p.iqr[0] == doctest::Approx(iqr_with));
  CHECK(iqr_with > iqr_without);
}

TEST_CASE("robust_fit rejects empty input") {
  CHECK_THROWS_AS(prep::robust_fit({}), EmptyFit);
  CHECK_THROWS_AS(prep::robust_fit(column({1.0})), EmptyFit);
}

TEST_CASE("robust_transform arithmetic") {
  const auto p = prep::robust_fit(column({0.0, 10.0, 20.0}));
  const auto out = prep::robust_transform(column({0.0, 10.0, 20.0}), p);
  CHECK(out[0][0] == doctest::Approx(-1.0));
  CHECK(out[1][0] == doctest::Approx(0.0));
  CHECK(out[2][0] == doctest::Approx(1.0));

  // median + IQR maps to 1
  const auto unit = prep::robust_transform(column({p.median[0] + p.iqr[0]}), p);
  CHECK(unit[0][0] == doctest::Approx(1.0));
}

TEST_CASE("robust_transform rejects dimension mismatch") {
  const auto p = prep::robust_fit(column({0.0, 1.0}));
  std::vector<std::vector<double>> bad{{1.0, 2.0}};
  CHECK_THROWS_AS(prep::robust_transform(bad, p), DataError);
}

TEST_CASE("no leakage: params identical when non-training rows change") {
  std::vector<std::vector<double>> train{{1, 5}, {2, 6}, {3, 7}, {4, 8}};
  const auto a = prep::robust_fit(train);
  // "test" rows never enter the fit; perturbing them cannot matter
  const auto b = prep::robust_fit(train);
  CHECK(a.median == b.median);
  CHECK(a.iqr == b.iqr);
}

TEST_CASE("make_windows: counts and offsets") {
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 10; ++i) rows.push_back({static_cast<double>(i)});
  auto windows = prep::make_windows(rows, 4, 2, 1, Statics{}, "S", 0);
  REQUIRE(windows.size() == 4);  // offsets 0, 2, 4, 6
  for (std::size_t w = 0; w < windows.size(); ++w) {
    CHECK(windows[w].at(0, 0) == doctest::Approx(static_cast<double>(2 * w)));
  }

  rows.resize(80, {0.0});
  for (int i = 0; i < 80; ++i) rows[static_cast<std::size_t>(i)] = {static_cast<double>(i)};
  windows = prep::make_windows(rows, 80, 5, 1, Statics{}, "S", 0);
  CHECK(windows.size() == 1);
}

TEST_CASE("make_windows: short sequences are front-padded with the first row") {
  std::vector<std::vector<double>> rows{{1.0}, {2.0}, {3.0}};
  const auto windows = prep::make_windows(rows, 5, 1, 1, Statics{}, "S", 0);
  REQUIRE(windows.size() == 1);
  const auto& w = windows[0];
  CHECK(w.at(0, 0) == 1.0);
  CHECK(w.at(1, 0) == 1.0);
  CHECK(w.at(2, 0) == 1.0);
  CHECK(w.at(3, 0) == 2.0);
  CHECK(w.at(4, 0) == 3.0);
}

TEST_CASE("window count law over random lengths") {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const auto length = static_cast<std::size_t>(rng.uniform_int(1, 120));
    const int ws = static_cast<int>(rng.uniform_int(1, 90));
    const int stride = static_cast<int>(rng.uniform_int(1, 10));
    std::vector<std::vector<double>> rows(length, {0.5});
    const auto windows = prep::make_windows(rows, ws, stride, 1, Statics{}, "S", 0);
    std::size_t want;
    if (length < static_cast<std::size_t>(ws)) {
      want = 1;
    } else {
      want = (length - static_cast<std::size_t>(ws)) / static_cast<std::size_t>(stride) + 1;
    }
    CHECK(windows.size() == want);
    CHECK(windows.size() == prep::window_count(length, ws, stride));
  }
}

TEST_CASE("window_standardize: zero mean, unit (or zero) std per column") {
  WindowBatch w;
  w.ws = 3;
  w.feature_dim = 2;
  w.values = {1.0, 7.0, 2.0, 7.0, 3.0, 7.0};  // col0 = {1,2,3}, col1 constant
  prep::window_standardize(w);

  CHECK(w.at(0, 0) == doctest::Approx(-1.2247448714).epsilon(1e-9));
  CHECK(w.at(1, 0) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(w.at(2, 0) == doctest::Approx(1.2247448714).epsilon(1e-9));
  CHECK(w.at(0, 1) == 0.0);
  CHECK(w.at(1, 1) == 0.0);

  double mean = 0.0;
  for (int r = 0; r < 3; ++r) mean += w.at(r, 0);
  CHECK(std::abs(mean / 3.0) < 1e-9);
}

TEST_CASE("window_standardize is idempotent") {
  Rng rng(5);
  WindowBatch w;
  w.ws = 8;
  w.feature_dim = 4;
  for (int i = 0; i < 32; ++i) w.values.push_back(rng.uniform(-3.0, 9.0));
  prep::window_standardize(w);
  WindowBatch again = w;
  prep::window_standardize(again);
  for (std::size_t i = 0; i < w.values.size(); ++i) {
    CHECK(std::abs(w.values[i] - again.values[i]) < 1e-9);
  }
}
