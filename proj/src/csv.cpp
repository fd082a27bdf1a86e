#include "hwad/csv.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string_view>

#include "hwad/errors.hpp"

namespace hwad::csv {

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw DataError("short write to " + tmp.string());
  }
  fs::rename(tmp, target);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

namespace {

// Splits one CSV line; no quoting (none of the emitted fields need it).
std::vector<std::string_view> split_line(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

double parse_double(std::string_view s, std::size_t line_no) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw DataError("line " + std::to_string(line_no) + ": bad number '" + std::string(s) + "'");
  }
  return v;
}

int parse_int(std::string_view s, std::size_t line_no) {
  int v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw DataError("line " + std::to_string(line_no) + ": bad integer '" + std::string(s) + "'");
  }
  return v;
}

// Iterates non-empty lines, invoking fn(line, line_no). line_no is 1-based.
template <typename Fn>
void for_each_line(const std::string& text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    ++line_no;
    std::string_view line(text.data() + start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) fn(line, line_no);
    start = end + 1;
  }
}

}  // namespace

// ---------------------------------------------------------------------------

std::string subjects_to_csv(const std::vector<SubjectRecord>& subjects) {
  std::string out = "subject_id,label,sex,age,work,education\n";
  for (const auto& s : subjects) {
    out += s.subject_id;
    out += ',';
    out += std::to_string(s.label);
    out += ',';
    out += (s.sex == Sex::male ? "male" : "female");
    out += ',';
    out += format_double(s.age);
    out += ',';
    out += (s.work == Work::manual ? "manual" : "intellectual");
    out += ',';
    out += format_double(s.education);
    out += '\n';
  }
  return out;
}

std::vector<SubjectRecord> subjects_from_csv(const std::string& text) {
  std::vector<SubjectRecord> subjects;
  for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    if (line_no == 1) return;  // header
    const auto cols = split_line(line);
    if (cols.size() != 6) {
      throw DataError("line " + std::to_string(line_no) + ": expected 6 columns");
    }
    SubjectRecord s;
    s.subject_id = std::string(cols[0]);
    s.label = parse_int(cols[1], line_no);
    if (cols[2] == "female") {
      s.sex = Sex::female;
    } else if (cols[2] == "male") {
      s.sex = Sex::male;
    } else {
      throw DataError("line " + std::to_string(line_no) + ": bad sex '" + std::string(cols[2]) + "'");
    }
    s.age = parse_double(cols[3], line_no);
    if (cols[4] == "intellectual") {
      s.work = Work::intellectual;
    } else if (cols[4] == "manual") {
      s.work = Work::manual;
    } else {
      throw DataError("line " + std::to_string(line_no) + ": bad work '" + std::string(cols[4]) + "'");
    }
    s.education = parse_double(cols[5], line_no);
    if (s.label != 0 && s.label != 1) {
      throw DataError("line " + std::to_string(line_no) + ": label must be 0 or 1");
    }
    if (s.age <= 0.0 || s.education < 0.0) {
      throw DataError("line " + std::to_string(line_no) + ": bad demographics");
    }
    subjects.push_back(std::move(s));
  });
  return subjects;
}

// ---------------------------------------------------------------------------

std::string recordings_to_csv(const std::vector<TaskRecording>& recs) {
  std::string out = "subject_id,task_id,stroke_index,t,x,y,pressure,on_paper\n";
  for (const auto& rec : recs) {
    for (const auto& stroke : rec.strokes) {
      for (const auto& p : stroke.samples) {
        out += rec.subject_id;
        out += ',';
        out += std::to_string(rec.task_id);
        out += ',';
        out += std::to_string(stroke.index);
        out += ',';
        out += format_double(p.t);
        out += ',';
        out += format_double(p.x);
        out += ',';
        out += format_double(p.y);
        out += ',';
        out += format_double(p.pressure);
        out += ',';
        out += (p.on_paper ? '1' : '0');
        out += '\n';
      }
    }
  }
  return out;
}

std::vector<TaskRecording> recordings_from_csv(const std::string& text) {
  std::vector<TaskRecording> recs;
  TaskRecording* cur_rec = nullptr;
  Stroke* cur_stroke = nullptr;

  for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    if (line_no == 1) return;
    const auto cols = split_line(line);
    if (cols.size() != 8) {
      throw DataError("line " + std::to_string(line_no) + ": expected 8 columns");
    }
    const std::string subject(cols[0]);
    const int task_id = parse_int(cols[1], line_no);
    const int stroke_index = parse_int(cols[2], line_no);

    PenSample p;
    p.t = parse_double(cols[3], line_no);
    p.x = parse_double(cols[4], line_no);
    p.y = parse_double(cols[5], line_no);
    p.pressure = parse_double(cols[6], line_no);
    if (cols[7] == "1") {
      p.on_paper = true;
    } else if (cols[7] == "0") {
      p.on_paper = false;
    } else {
      throw DataError("line " + std::to_string(line_no) + ": bad on_paper flag");
    }

    if (cur_rec == nullptr || cur_rec->subject_id != subject || cur_rec->task_id != task_id) {
      recs.push_back(TaskRecording{subject, task_id, {}});
      cur_rec = &recs.back();
      cur_stroke = nullptr;
    }
    if (cur_stroke == nullptr || cur_stroke->index != stroke_index) {
      cur_rec->strokes.push_back(Stroke{{}, stroke_index});
      cur_stroke = &cur_rec->strokes.back();
    }
    cur_stroke->samples.push_back(p);
  });
  return recs;
}

// ---------------------------------------------------------------------------

std::string features_to_csv(const std::vector<FeatureRow>& rows) {
  std::string out = "subject_id,task_id,stroke_index";
  for (const char* name : kStrokeFeatureNames) {
    out += ',';
    out += name;
  }
  out += '\n';
  for (const auto& r : rows) {
    out += r.subject_id;
    out += ',';
    out += std::to_string(r.task_id);
    out += ',';
    out += std::to_string(r.stroke_index);
    for (double v : r.f) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

std::vector<FeatureRow> features_from_csv(const std::string& text) {
  std::vector<FeatureRow> rows;
  for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    if (line_no == 1) return;
    const auto cols = split_line(line);
    if (cols.size() != 3 + kStrokeFeatureCount) {
      throw DataError("line " + std::to_string(line_no) + ": expected " +
                      std::to_string(3 + kStrokeFeatureCount) + " columns");
    }
    FeatureRow r;
    r.subject_id = std::string(cols[0]);
    r.task_id = parse_int(cols[1], line_no);
    r.stroke_index = parse_int(cols[2], line_no);
    for (int i = 0; i < kStrokeFeatureCount; ++i) {
      r.f[i] = parse_double(cols[3 + i], line_no);
    }
    rows.push_back(std::move(r));
  });
  return rows;
}

}  // namespace hwad::csv
