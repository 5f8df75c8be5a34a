#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "aris/metrics.hpp"

namespace aris {

/// Annotation text files: one file per frame, one `class x_c y_c w h`
/// line per box, coordinates normalized to the frame. Detection dumps:
/// CSV `frame_id,class,x_c,y_c,w,h,confidence` in the same normalized
/// coordinates. IoU is invariant under the shared axis scaling, so
/// normalized evaluation matches pixel-space evaluation exactly.

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Parse one annotation line. Throws ParseError (message carries
/// `context`) on malformed input.
BBox parse_annotation_line(const std::string& line, const std::string& context);

/// Load every `<stem>.txt` in `dir`, keyed by stem.
std::map<std::string, std::vector<BBox>> load_annotation_dir(
    const std::filesystem::path& dir);

/// Load a detection dump, keyed by frame id. A header row is permitted.
std::map<std::string, std::vector<Detection>> load_detections_csv(
    const std::filesystem::path& file);

/// Pair detections with annotations by key. Frames present in only one
/// of the two inputs still count (missed frames hurt recall, spurious
/// frames hurt precision).
std::vector<EvalSample> pair_samples(
    const std::map<std::string, std::vector<BBox>>& annotations,
    const std::map<std::string, std::vector<Detection>>& detections);

void write_detections_csv(const std::filesystem::path& file,
                          const std::map<std::string, std::vector<Detection>>& by_frame);

void write_annotation_dir(const std::filesystem::path& dir,
                          const std::map<std::string, std::vector<BBox>>& by_frame);

/// Machine-readable report: one `section,key,value` style CSV.
std::string metrics_report_csv(const MetricsReport& rep);

/// Human-readable table mirroring the per-class precision/recall/AP
/// layout plus the mAP rows.
std::string metrics_report_table(const MetricsReport& rep);

void write_text_file(const std::filesystem::path& file, const std::string& body);

}  // namespace aris
