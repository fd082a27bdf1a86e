#include <algorithm>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "hwad/errors.hpp"
#include "hwad/experiment.hpp"

namespace hwad::cli {

namespace {

constexpr int kSchemaVersion = 1;

using nlohmann::json;

json summary_to_json(const cv::MetricSummary& m) {
  return json{{"per_fold", m.per_fold}, {"mean", m.mean}, {"std", m.std_dev}};
}

cv::MetricSummary summary_from_json(const json& j) {
  cv::MetricSummary m;
  m.per_fold = j.at("per_fold").get<std::vector<double>>();
  m.mean = j.at("mean").get<double>();
  m.std_dev = j.at("std").get<double>();
  return m;
}

json report_to_json(const cv::FoldReport& r) {
  return json{{"accuracy", summary_to_json(r.accuracy)},
              {"sensitivity", summary_to_json(r.sensitivity)},
              {"specificity", summary_to_json(r.specificity)},
              {"f1", summary_to_json(r.f1)}};
}

cv::FoldReport report_from_json(const json& j) {
  cv::FoldReport r;
  r.accuracy = summary_from_json(j.at("accuracy"));
  r.sensitivity = summary_from_json(j.at("sensitivity"));
  r.specificity = summary_from_json(j.at("specificity"));
  r.f1 = summary_from_json(j.at("f1"));
  return r;
}

}  // namespace

std::string result_to_json(const CellResult& result) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["model"] = result.model;
  j["ws"] = result.ws;
  j["stride"] = result.stride;
  j["metrics"] = report_to_json(result.subject_report);
  j["window_metrics"] = report_to_json(result.secondary_report);
  return j.dump(2) + "\n";
}

CellResult result_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("bad results JSON: ") + e.what());
  }
  if (!j.contains("schema_version") || j.at("schema_version").get<int>() != kSchemaVersion) {
    throw DataError("results JSON schema version mismatch");
  }
  CellResult r;
  r.model = j.at("model").get<std::string>();
  r.ws = j.at("ws").get<int>();
  r.stride = j.at("stride").get<int>();
  r.subject_report = report_from_json(j.at("metrics"));
  r.secondary_report = report_from_json(j.at("window_metrics"));
  return r;
}

std::string comparison_table(std::vector<CellResult> results) {
  if (results.size() < 2) throw DataError("compare needs at least 2 results");
  std::stable_sort(results.begin(), results.end(), [](const CellResult& a, const CellResult& b) {
    if (a.subject_report.accuracy.mean != b.subject_report.accuracy.mean) {
      return a.subject_report.accuracy.mean > b.subject_report.accuracy.mean;
    }
    if (a.model != b.model) return a.model < b.model;
    if (a.ws != b.ws) return a.ws < b.ws;
    return a.stride < b.stride;
  });

  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof(line), "%-10s %4s %7s %16s %16s %16s\n", "model", "ws", "stride",
                "accuracy", "sensitivity", "specificity");
  os << line;
  for (const auto& r : results) {
    std::snprintf(line, sizeof(line), "%-10s %4d %7d %16s %16s %16s\n", r.model.c_str(), r.ws,
                  r.stride, cv::format_mean_std(r.subject_report.accuracy).c_str(),
                  cv::format_mean_std(r.subject_report.sensitivity).c_str(),
                  cv::format_mean_std(r.subject_report.specificity).c_str());
    os << line;
  }
  return os.str();
}

std::string render_report(const CellResult& result) {
  std::ostringstream os;
  os << "model " << result.model << "  ws " << result.ws << "  stride " << result.stride << "\n";
  char line[256];
  std::snprintf(line, sizeof(line), "%-6s %12s %12s %12s %12s\n", "fold", "accuracy",
                "sensitivity", "specificity", "f1");
  os << line;
  const auto& rep = result.subject_report;
  const std::size_t n_folds = rep.accuracy.per_fold.size();
  for (std::size_t f = 0; f < n_folds; ++f) {
    auto at = [f](const cv::MetricSummary& m) {
      return f < m.per_fold.size() ? m.per_fold[f] : 0.0;
    };
    std::snprintf(line, sizeof(line), "%-6zu %12.2f %12.2f %12.2f %12.2f\n", f,
                  at(rep.accuracy), at(rep.sensitivity), at(rep.specificity), at(rep.f1));
    os << line;
  }
  std::snprintf(line, sizeof(line), "%-6s %12s %12s %12s %12s\n", "mean",
                cv::format_mean_std(rep.accuracy).c_str(),
                cv::format_mean_std(rep.sensitivity).c_str(),
                cv::format_mean_std(rep.specificity).c_str(),
                cv::format_mean_std(rep.f1).c_str());
  os << line;
  return os.str();
}

}  // namespace hwad::cli
