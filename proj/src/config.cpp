#include "aris/config.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace aris {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

// Strip a trailing comment, respecting quoted strings.
std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_string = !in_string;
    if (line[i] == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

double parse_number(const std::string& tok, const std::string& where) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &pos);
  } catch (const std::exception&) {
    throw ConfigError(where + ": not a number: '" + tok + "'");
  }
  if (pos != tok.size()) {
    throw ConfigError(where + ": trailing characters in number: '" + tok + "'");
  }
  return v;
}

}  // namespace

KvTree KvTree::parse(const std::string& text, const std::string& origin) {
  KvTree tree;
  tree.origin_ = origin;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string where = origin + ":" + std::to_string(lineno);
    std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw ConfigError(where + ": malformed section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ConfigError(where + ": empty section name");
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(where + ": expected 'key = value'");
    }
    const std::string key_part = trim(line.substr(0, eq));
    const std::string val_part = trim(line.substr(eq + 1));
    if (key_part.empty()) throw ConfigError(where + ": empty key");
    if (val_part.empty()) throw ConfigError(where + ": empty value");
    const std::string key = section.empty() ? key_part : section + "." + key_part;

    Value value;
    if (val_part.front() == '"') {
      if (val_part.size() < 2 || val_part.back() != '"') {
        throw ConfigError(where + ": unterminated string");
      }
      value = val_part.substr(1, val_part.size() - 2);
    } else if (val_part == "true" || val_part == "false") {
      value = (val_part == "true");
    } else if (val_part.front() == '[') {
      if (val_part.back() != ']') {
        throw ConfigError(where + ": unterminated array");
      }
      std::vector<double> items;
      std::string body = val_part.substr(1, val_part.size() - 2);
      std::string tok;
      std::istringstream elems(body);
      while (std::getline(elems, tok, ',')) {
        tok = trim(tok);
        if (tok.empty()) throw ConfigError(where + ": empty array element");
        items.push_back(parse_number(tok, where));
      }
      value = std::move(items);
    } else {
      value = parse_number(val_part, where);
    }
    tree.values_[key] = std::move(value);
  }
  return tree;
}

KvTree KvTree::parse_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config file: " + file.string());
  std::ostringstream body;
  body << in.rdbuf();
  return parse(body.str(), file.string());
}

double KvTree::number(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (const double* v = std::get_if<double>(&it->second)) return *v;
  throw ConfigError(key + ": expected a number");
}

std::int64_t KvTree::integer(const std::string& key, std::int64_t fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (const double* v = std::get_if<double>(&it->second)) {
    if (*v != std::floor(*v)) throw ConfigError(key + ": expected an integer");
    return static_cast<std::int64_t>(*v);
  }
  throw ConfigError(key + ": expected an integer");
}

std::string KvTree::text(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (const std::string* v = std::get_if<std::string>(&it->second)) return *v;
  throw ConfigError(key + ": expected a string");
}

bool KvTree::boolean(const std::string& key, bool fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (const bool* v = std::get_if<bool>(&it->second)) return *v;
  throw ConfigError(key + ": expected true or false");
}

std::vector<double> KvTree::array(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return {};
  if (const auto* v = std::get_if<std::vector<double>>(&it->second)) return *v;
  throw ConfigError(key + ": expected an array");
}

namespace {

ConfusionModel model_for_preset(const std::string& preset) {
  if (preset == "reference") return ConfusionModel::reference();
  if (preset == "reference_counts") return ConfusionModel::reference_from_counts();
  if (preset == "identity") return ConfusionModel::identity();
  if (preset == "oracle") return ConfusionModel::identity();  // unused rows
  throw ConfigError("detector.preset: unknown preset '" + preset + "'");
}

void load_row(const KvTree& t, const std::string& key, ConfusionModel& m, int row) {
  if (!t.has(key)) return;
  const auto v = t.array(key);
  if (v.size() != kClassCount + 1) {
    throw ConfigError(key + ": expected [metal, circuit_board, plastic, miss]");
  }
  for (int j = 0; j < kClassCount; ++j) m.outcome[row][j] = v[j];
  m.miss[row] = v[kClassCount];
}

}  // namespace

RunConfig RunConfig::from_tree(const KvTree& tree) {
  RunConfig rc;
  SimConfig& s = rc.sim;

  s.seed = static_cast<std::uint64_t>(tree.integer("sim.seed", 1));
  s.particle_count = tree.integer("sim.particles", s.particle_count);
  s.duration_s = tree.number("sim.duration_s", s.duration_s);
  if (tree.has("sim.class_mix")) {
    const auto mix = tree.array("sim.class_mix");
    if (mix.size() != kClassCount) {
      throw ConfigError("sim.class_mix: expected [metal, circuit_board, plastic]");
    }
    for (int i = 0; i < kClassCount; ++i) s.class_mix[i] = mix[i];
  }
  s.arrival_rate_hz = tree.number("sim.arrival_rate_hz", s.arrival_rate_hz);
  if (tree.has("sim.target")) {
    const std::string name = tree.text("sim.target", "");
    const auto cls = class_from_name(name);
    if (!cls) throw ConfigError("sim.target: unknown class '" + name + "'");
    s.target = *cls;
  }
  s.actuation_noise_std_ms =
      tree.number("sim.actuation_noise_std_ms", s.actuation_noise_std_ms);
  s.t_offset_ms = tree.number("sim.t_offset_ms", s.t_offset_ms);
  s.processing_latency_ms =
      tree.number("sim.processing_latency_ms", s.processing_latency_ms);
  s.wire_latency_ms = tree.number("sim.wire_latency_ms", s.wire_latency_ms);
  s.ton_ms = tree.integer("sim.ton_ms", s.ton_ms);

  BeltCalibration& cal = s.cal;
  cal.belt_width_px = tree.number("belt.width_px", cal.belt_width_px);
  cal.belt_width_in = tree.number("belt.width_in", cal.belt_width_in);
  cal.segment_count =
      static_cast<int>(tree.integer("belt.segments", cal.segment_count));
  cal.segment_width_px = tree.number("belt.segment_width_px", cal.segment_width_px);
  cal.segment_height_px =
      tree.number("belt.segment_height_px", cal.segment_height_px);
  cal.net_input_px = tree.number("belt.net_input_px", cal.net_input_px);
  cal.belt_speed_mps = tree.number("belt.speed_mps", cal.belt_speed_mps);
  cal.fov_exit_to_edge_mm =
      tree.number("belt.exit_gap_mm", cal.fov_exit_to_edge_mm);

  PaddleLayout& lay = s.layout;
  lay.paddle_count = static_cast<int>(tree.integer("paddles.count", lay.paddle_count));
  lay.pitch_mm = tree.number("paddles.pitch_mm", lay.pitch_mm);
  lay.actuate_ms = tree.number("paddles.actuate_ms", lay.actuate_ms);
  lay.return_ms = tree.number("paddles.return_ms", lay.return_ms);
  lay.standoff_mm = tree.number("paddles.standoff_mm", lay.standoff_mm);
  lay.drop_mm = tree.number("paddles.drop_mm", lay.drop_mm);
  lay.time_to_hit_ms = tree.number("paddles.time_to_hit_ms", lay.time_to_hit_ms);

  rc.detector_preset = tree.text("detector.preset", rc.detector_preset);
  if (rc.detector_preset == "oracle") {
    s.detector = DetectorKind::kOracle;
    s.model = ConfusionModel::identity();
  } else {
    s.detector = DetectorKind::kStochastic;
    s.model = model_for_preset(rc.detector_preset);
  }
  load_row(tree, "detector.rows.metal", s.model, 0);
  load_row(tree, "detector.rows.circuit_board", s.model, 1);
  load_row(tree, "detector.rows.plastic", s.model, 2);
  s.model.center_jitter_px =
      tree.number("detector.center_jitter_px", s.model.center_jitter_px);
  s.model.size_jitter_frac =
      tree.number("detector.size_jitter_frac", s.model.size_jitter_frac);
  if (tree.has("detector.false_positives_per_frame")) {
    const auto fp = tree.array("detector.false_positives_per_frame");
    if (fp.size() != kClassCount) {
      throw ConfigError("detector.false_positives_per_frame: expected 3 rates");
    }
    for (int i = 0; i < kClassCount; ++i) s.model.false_positives_per_frame[i] = fp[i];
  }

  const char* names[kClassCount] = {"metal", "circuit_board", "plastic"};
  for (int c = 0; c < kClassCount; ++c) {
    const std::string base = std::string("particles.") + names[c];
    if (tree.has(base + ".dims_mm")) {
      const auto d = tree.array(base + ".dims_mm");
      if (d.size() != 2) throw ConfigError(base + ".dims_mm: expected [min, max]");
      s.particles[c].min_dim_mm = d[0];
      s.particles[c].max_dim_mm = d[1];
    }
    if (tree.has(base + ".mass_g")) {
      const auto m = tree.array(base + ".mass_g");
      if (m.size() != 2) throw ConfigError(base + ".mass_g: expected [min, max]");
      s.particles[c].mass_min_g = m[0];
      s.particles[c].mass_max_g = m[1];
    }
  }

  const std::int64_t port = tree.integer("wire.port", rc.port);
  if (port < 0 || port > 65535) throw ConfigError("wire.port: out of range");
  rc.port = static_cast<std::uint16_t>(port);
  rc.log_dir = tree.text("log.dir", rc.log_dir);

  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return rc;
}

RunConfig RunConfig::load(const std::filesystem::path& file) {
  return from_tree(KvTree::parse_file(file));
}

std::string RunConfig::to_file() const {
  std::ostringstream out;
  char buf[256];
  auto put = [&](const char* format, auto... args) {
    std::snprintf(buf, sizeof(buf), format, args...);
    out << buf;
  };

  out << "# A.R.I.S. sortation-line run configuration.\n";
  out << "# Values mirror the reference line build; override per run.\n\n";
  out << "[sim]\n";
  put("seed = %llu\n", static_cast<unsigned long long>(sim.seed));
  put("particles = %lld\n", static_cast<long long>(sim.particle_count));
  put("duration_s = %g            # > 0 switches to a timed spawn window\n",
      sim.duration_s);
  put("class_mix = [%g, %g, %g]   # metal, circuit_board, plastic feed shares\n",
      sim.class_mix[0], sim.class_mix[1], sim.class_mix[2]);
  put("arrival_rate_hz = %g       # with default masses: ~5 kg/s feed\n",
      sim.arrival_rate_hz);
  put("target = \"%s\"\n", class_name(sim.target));
  put("actuation_noise_std_ms = %g  # strike-timing scatter; 0 = ideal rig\n",
      sim.actuation_noise_std_ms);
  put("t_offset_ms = %g           # flick tuning; -actuate/2 centers the strike\n",
      sim.t_offset_ms);
  put("processing_latency_ms = %g # per-frame inference budget\n",
      sim.processing_latency_ms);
  put("wire_latency_ms = %g\n", sim.wire_latency_ms);
  put("ton_ms = %lld\n", static_cast<long long>(sim.ton_ms));
  out << "\n[belt]\n";
  put("width_px = %g              # stitched frame width, 3 cameras\n",
      sim.cal.belt_width_px);
  put("width_in = %g\n", sim.cal.belt_width_in);
  put("segments = %d\n", sim.cal.segment_count);
  put("segment_width_px = %g\n", sim.cal.segment_width_px);
  put("segment_height_px = %g\n", sim.cal.segment_height_px);
  put("net_input_px = %g          # detector input resolution\n",
      sim.cal.net_input_px);
  put("speed_mps = %g             # drive range 0..1.3; nominal 1.2\n",
      sim.cal.belt_speed_mps);
  put("exit_gap_mm = %g           # belt length from FOV exit to discharge edge\n",
      sim.cal.fov_exit_to_edge_mm);
  out << "\n[paddles]\n";
  put("count = %d\n", sim.layout.paddle_count);
  put("pitch_mm = %g              # 1 in center-to-center\n", sim.layout.pitch_mm);
  put("actuate_ms = %g\n", sim.layout.actuate_ms);
  put("return_ms = %g             # actuate + return = 40 ms cycle\n",
      sim.layout.return_ms);
  put("standoff_mm = %g           # 8 in out from the belt edge\n",
      sim.layout.standoff_mm);
  put("drop_mm = %g               # strike point 6 in below the belt\n",
      sim.layout.drop_mm);
  put("time_to_hit_ms = %g        # 0 derives free-fall sqrt(2*drop/g)\n",
      sim.layout.time_to_hit_ms);
  out << "\n[detector]\n";
  put("preset = \"%s\"            # oracle | reference | reference_counts | identity\n",
      detector_preset.c_str());
  put("center_jitter_px = %g      # localization noise, network-input px\n",
      sim.model.center_jitter_px);
  put("size_jitter_frac = %g\n", sim.model.size_jitter_frac);
  out << "# Outcome rows may be overridden explicitly, e.g.\n";
  out << "# rows.plastic = [0.048, 0.270, 0.562, 0.120]\n";
  out << "\n[wire]\n";
  put("port = %u\n", static_cast<unsigned>(port));
  out << "\n[log]\n";
  put("dir = \"%s\"\n", log_dir.c_str());
  return out.str();
}

}  // namespace aris
