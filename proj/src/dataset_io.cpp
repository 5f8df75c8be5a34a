#include "aris/dataset_io.hpp"

#include <algorithm>
#include <cstdarg>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace aris {

namespace {

std::string fmt(const char* format, ...) {
  va_list args;
  va_start(args, format);
  char buf[256];
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

double parse_double(const std::string& tok, const std::string& context) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &pos);
  } catch (const std::exception&) {
    throw ParseError(context + ": not a number: '" + tok + "'");
  }
  if (pos != tok.size()) {
    throw ParseError(context + ": trailing garbage in number: '" + tok + "'");
  }
  return v;
}

ClassId parse_class(const std::string& tok, const std::string& context) {
  if (tok.size() == 1 && tok[0] >= '0' && tok[0] < '0' + kClassCount) {
    return static_cast<ClassId>(tok[0] - '0');
  }
  if (auto c = class_from_name(tok)) return *c;
  throw ParseError(context + ": unknown class '" + tok + "'");
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

BBox parse_annotation_line(const std::string& line, const std::string& context) {
  std::istringstream in(line);
  std::string cls, xs, ys, ws, hs, extra;
  if (!(in >> cls >> xs >> ys >> ws >> hs)) {
    throw ParseError(context + ": expected 'class x_c y_c w h'");
  }
  if (in >> extra) {
    throw ParseError(context + ": trailing fields");
  }
  BBox b;
  b.space = Space::kNormalized;
  b.class_id = parse_class(cls, context);
  b.x_c = parse_double(xs, context);
  b.y_c = parse_double(ys, context);
  b.w = parse_double(ws, context);
  b.h = parse_double(hs, context);
  if (b.x_c < 0.0 || b.x_c > 1.0 || b.y_c < 0.0 || b.y_c > 1.0 || b.w < 0.0 ||
      b.w > 1.0 || b.h < 0.0 || b.h > 1.0) {
    throw ParseError(context + ": coordinates outside [0,1]");
  }
  if (b.area() <= 0.0) {
    throw ParseError(context + ": zero-area box");
  }
  b.confidence = 1.0;
  return b;
}

std::map<std::string, std::vector<BBox>> load_annotation_dir(
    const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw ParseError("annotation directory not found: " + dir.string());
  }
  std::map<std::string, std::vector<BBox>> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
    const std::string stem = entry.path().stem().string();
    std::ifstream in(entry.path());
    if (!in) throw ParseError("cannot open " + entry.path().string());
    std::string line;
    int lineno = 0;
    auto& boxes = out[stem];  // empty file = frame with no objects
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      boxes.push_back(parse_annotation_line(
          line, entry.path().string() + ":" + std::to_string(lineno)));
    }
  }
  return out;
}

std::map<std::string, std::vector<Detection>> load_detections_csv(
    const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ParseError("cannot open detections file: " + file.string());
  std::map<std::string, std::vector<Detection>> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("frame_id,", 0) == 0) continue;  // header
    const std::string context = file.string() + ":" + std::to_string(lineno);
    const auto cols = split(line, ',');
    if (cols.size() != 7) {
      throw ParseError(context + ": expected 7 columns");
    }
    Detection d;
    d.box.space = Space::kNormalized;
    d.box.class_id = parse_class(cols[1], context);
    d.box.x_c = parse_double(cols[2], context);
    d.box.y_c = parse_double(cols[3], context);
    d.box.w = parse_double(cols[4], context);
    d.box.h = parse_double(cols[5], context);
    d.box.confidence = parse_double(cols[6], context);
    if (d.box.confidence < 0.0 || d.box.confidence > 1.0) {
      throw ParseError(context + ": confidence outside [0,1]");
    }
    out[cols[0]].push_back(d);
  }
  return out;
}

std::vector<EvalSample> pair_samples(
    const std::map<std::string, std::vector<BBox>>& annotations,
    const std::map<std::string, std::vector<Detection>>& detections) {
  std::vector<EvalSample> samples;
  for (const auto& [key, gts] : annotations) {
    EvalSample s;
    s.gts = gts;
    if (auto it = detections.find(key); it != detections.end()) {
      s.dets = it->second;
    }
    samples.push_back(std::move(s));
  }
  for (const auto& [key, dets] : detections) {
    if (annotations.count(key)) continue;
    EvalSample s;
    s.dets = dets;
    samples.push_back(std::move(s));
  }
  return samples;
}

void write_detections_csv(
    const std::filesystem::path& file,
    const std::map<std::string, std::vector<Detection>>& by_frame) {
  std::ostringstream out;
  out << "frame_id,class,x_c,y_c,w,h,confidence\n";
  for (const auto& [key, dets] : by_frame) {
    for (const auto& d : dets) {
      out << key << ',' << static_cast<int>(d.box.class_id) << ','
          << fmt("%.9f,%.9f,%.9f,%.9f,%.6f", d.box.x_c, d.box.y_c, d.box.w,
                 d.box.h, d.box.confidence)
          << '\n';
    }
  }
  write_text_file(file, out.str());
}

void write_annotation_dir(const std::filesystem::path& dir,
                          const std::map<std::string, std::vector<BBox>>& by_frame) {
  std::filesystem::create_directories(dir);
  for (const auto& [key, boxes] : by_frame) {
    std::ostringstream out;
    for (const auto& b : boxes) {
      out << static_cast<int>(b.class_id) << ' '
          << fmt("%.9f %.9f %.9f %.9f", b.x_c, b.y_c, b.w, b.h) << '\n';
    }
    write_text_file(dir / (key + ".txt"), out.str());
  }
}

std::string metrics_report_csv(const MetricsReport& rep) {
  std::ostringstream out;
  out << "section,key,value\n";
  for (int c = 0; c < kClassCount; ++c) {
    const auto& cm = rep.per_class[c];
    const char* name = class_name(static_cast<ClassId>(c));
    out << "class," << name << "_gt," << cm.gt_count << '\n';
    out << "class," << name << "_tp," << cm.tp << '\n';
    out << "class," << name << "_fp," << cm.fp << '\n';
    out << "class," << name << "_precision," << fmt("%.6f", cm.precision) << '\n';
    out << "class," << name << "_recall," << fmt("%.6f", cm.recall) << '\n';
    out << "class," << name << "_ap," << fmt("%.6f", cm.ap) << '\n';
  }
  out << "overall,map50," << fmt("%.6f", rep.map50) << '\n';
  out << "overall,map50_95," << fmt("%.6f", rep.map50_95) << '\n';
  for (int i = 0; i < kClassCount; ++i) {
    const char* name = class_name(static_cast<ClassId>(i));
    out << "baseline," << name << ',' << fmt("%.6f", rep.baselines[i]) << '\n';
    for (int j = 0; j <= kClassCount; ++j) {
      const char* pred = j < kClassCount
                             ? class_name(static_cast<ClassId>(j))
                             : "miss";
      out << "confusion," << name << "_as_" << pred << ','
          << fmt("%.6f", rep.confusion.rows[i][j]) << '\n';
      out << "confusion_count," << name << "_as_" << pred << ','
          << rep.confusion.counts[i][j] << '\n';
    }
  }
  return out.str();
}

std::string metrics_report_table(const MetricsReport& rep) {
  std::ostringstream out;
  out << fmt("%-15s %12s %12s %12s\n", "Class", "Precision(%)", "Recall(%)",
             "AP(%)");
  for (int c = 0; c < kClassCount; ++c) {
    const auto& cm = rep.per_class[c];
    out << fmt("%-15s %12.1f %12.1f %12.1f\n",
               class_name(static_cast<ClassId>(c)), 100.0 * cm.precision,
               100.0 * cm.recall, 100.0 * cm.ap);
  }
  out << fmt("%-15s %38.1f\n", "mAP@0.50", 100.0 * rep.map50);
  out << fmt("%-15s %38.1f\n", "mAP@0.50:0.95", 100.0 * rep.map50_95);
  out << "\nConfusion (rows: true class; columns: predicted + miss)\n";
  out << fmt("%-15s %12s %12s %12s %12s\n", "", "metal", "circuit_board",
             "plastic", "miss");
  for (int i = 0; i < kClassCount; ++i) {
    out << fmt("%-15s %12.3f %12.3f %12.3f %12.3f\n",
               class_name(static_cast<ClassId>(i)), rep.confusion.rows[i][0],
               rep.confusion.rows[i][1], rep.confusion.rows[i][2],
               rep.confusion.rows[i][3]);
  }
  out << "\nRandom baselines (class prior)\n";
  for (int i = 0; i < kClassCount; ++i) {
    out << fmt("%-15s %12.1f\n", class_name(static_cast<ClassId>(i)),
               100.0 * rep.baselines[i]);
  }
  return out.str();
}

void write_text_file(const std::filesystem::path& file, const std::string& body) {
  if (file.has_parent_path()) {
    std::filesystem::create_directories(file.parent_path());
  }
  std::ofstream out(file, std::ios::binary);
  if (!out) throw ParseError("cannot write " + file.string());
  out << body;
}

}  // namespace aris
