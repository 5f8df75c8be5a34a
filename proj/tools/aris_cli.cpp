// Operator entry points for the sortation-line toolkit:
//   simulate   run the full line simulation from a config file
//   evaluate   detection metrics from annotation + detection dumps
//   replay     recompute counters from an operations log
//   serve-plc  long-running PLC emulator on a TCP port

#include <atomic>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "aris/config.hpp"
#include "aris/dataset_io.hpp"
#include "aris/sim.hpp"
#include "aris/wire.hpp"

namespace {

std::atomic<bool> g_stop{false};

void handle_signal(int) { g_stop.store(true); }

aris::RunConfig load_config(const std::string& path) {
  if (path.empty()) return aris::RunConfig::defaults();
  return aris::RunConfig::load(path);
}

int cmd_simulate(const std::string& config_path, std::int64_t seed,
                 const std::string& target, const std::string& detector,
                 std::int64_t particles, std::string out_dir,
                 bool dump_detections) {
  aris::RunConfig rc = load_config(config_path);
  if (seed >= 0) rc.sim.seed = static_cast<std::uint64_t>(seed);
  if (!target.empty()) {
    const auto cls = aris::class_from_name(target);
    if (!cls) throw aris::ConfigError("--target: unknown class '" + target + "'");
    rc.sim.target = *cls;
  }
  if (!detector.empty()) {
    if (detector == "oracle") {
      rc.sim.detector = aris::DetectorKind::kOracle;
    } else {
      rc.sim.detector = aris::DetectorKind::kStochastic;
      if (detector == "reference") {
        rc.sim.model = aris::ConfusionModel::reference();
      } else if (detector == "reference_counts") {
        rc.sim.model = aris::ConfusionModel::reference_from_counts();
      } else if (detector == "identity") {
        rc.sim.model = aris::ConfusionModel::identity();
      } else {
        throw aris::ConfigError("--detector: unknown detector '" + detector + "'");
      }
    }
  }
  if (particles > 0) rc.sim.particle_count = particles;
  if (out_dir.empty()) out_dir = rc.log_dir;
  if (const char* env = std::getenv("ARIS_LOG_DIR")) out_dir = env;

  const aris::SimOutputs outputs = aris::run_simulation(rc.sim, dump_detections);

  const std::filesystem::path dir(out_dir);
  aris::write_text_file(dir / "report.csv", outputs.report_csv);
  aris::write_text_file(dir / "summary.txt", outputs.summary_text);
  aris::write_text_file(dir / "operations.csv", outputs.operations_csv);
  aris::write_text_file(dir / "breaches.csv", outputs.breaches_csv);
  if (dump_detections) {
    aris::write_detections_csv(dir / "detections.csv", outputs.detections);
    aris::write_annotation_dir(dir / "annotations", outputs.annotations);
  }
  std::cout << outputs.summary_text;
  std::cout << "written: " << (dir / "report.csv").string() << '\n';
  return 0;
}

int cmd_evaluate(const std::string& annotations_dir,
                 const std::string& detections_file, const std::string& out_dir,
                 double iou_thresh) {
  const auto annotations = aris::load_annotation_dir(annotations_dir);
  const auto detections = aris::load_detections_csv(detections_file);
  const auto samples = aris::pair_samples(annotations, detections);
  const aris::MetricsReport rep = aris::evaluate(samples, iou_thresh);

  const std::string table = aris::metrics_report_table(rep);
  std::cout << table;
  if (!out_dir.empty()) {
    const std::filesystem::path dir(out_dir);
    aris::write_text_file(dir / "metrics.csv", aris::metrics_report_csv(rep));
    aris::write_text_file(dir / "metrics.txt", table);
    std::cout << "written: " << (dir / "metrics.csv").string() << '\n';
  }
  return 0;
}

int cmd_replay(const std::string& ops_path) {
  std::ifstream in(ops_path, std::ios::binary);
  if (!in) {
    std::cerr << "error: cannot open " << ops_path << '\n';
    return 2;
  }
  std::ostringstream body;
  body << in.rdbuf();
  const aris::ReplaySummary sum = aris::replay_operations_csv(body.str());
  std::cout << "fragments:    " << sum.fragments << '\n';
  std::cout << "positive:     " << sum.positive << '\n';
  std::cout << "flicks:       " << sum.flicks << '\n';
  std::cout << "breaches:     " << sum.breaches << '\n';
  std::cout << "corrupt rows: " << sum.corrupt_rows << '\n';
  for (std::size_t i = 0; i < sum.latency.bins.size(); ++i) {
    if (sum.latency.bins[i] == 0) continue;
    std::printf("latency [%3zu,%3zu) ms: %lld\n", i * 5, i * 5 + 5,
                static_cast<long long>(sum.latency.bins[i]));
  }
  return 0;
}

int cmd_serve_plc(const std::string& config_path, int port_override) {
  aris::RunConfig rc = load_config(config_path);
  aris::PlcServerOptions opts;
  opts.port = port_override >= 0 ? static_cast<std::uint16_t>(port_override)
                                 : rc.port;
  opts.layout = rc.sim.layout;
  opts.on_actuation = [](const aris::ActuationEvent& ev) {
    std::printf("flick paddle=%d start=%.1f end=%.1f\n", ev.paddle, ev.start_ms,
                ev.end_ms);
  };
  aris::PlcServer server(std::move(opts));
  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
  std::cout << "plc emulator listening on 127.0.0.1:" << server.port() << '\n';
  server.run(g_stop);
  std::cout << "shutdown: packets=" << server.packets_accepted()
            << " flicks=" << server.scheduler().flicks_executed()
            << " breaches=" << server.scheduler().breaches() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"A.R.I.S. sortation line simulator and tooling"};
  app.require_subcommand(1);

  std::string config_path, target, detector, out_dir;
  std::int64_t seed = -1, particles = -1;
  bool dump = false;
  auto* sim = app.add_subcommand("simulate", "run the line simulation");
  sim->add_option("--config", config_path, "run configuration file");
  sim->add_option("--seed", seed, "override the run seed");
  sim->add_option("--target", target, "target class: metal|circuit_board|plastic");
  sim->add_option("--detector", detector,
                  "oracle|reference|reference_counts|identity");
  sim->add_option("--particles", particles, "override the particle budget");
  sim->add_option("--out", out_dir, "output directory");
  sim->add_flag("--dump-detections", dump,
                "write per-frame detections and annotations");

  std::string annotations_dir, detections_file, eval_out;
  double iou_thresh = 0.5;
  auto* eval = app.add_subcommand("evaluate", "detection metrics from dumps");
  eval->add_option("--annotations", annotations_dir, "annotation directory")
      ->required();
  eval->add_option("--detections", detections_file, "detection dump CSV")
      ->required();
  eval->add_option("--out", eval_out, "output directory");
  eval->add_option("--iou", iou_thresh, "matching IoU threshold");

  std::string ops_path;
  auto* replay = app.add_subcommand("replay", "recompute counters from a log");
  replay->add_option("--ops", ops_path, "operations CSV path")->required();

  std::string serve_config;
  int port = -1;
  auto* serve = app.add_subcommand("serve-plc", "run the PLC emulator");
  serve->add_option("--config", serve_config, "run configuration file");
  serve->add_option("--port", port, "listen port (default from config)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      return cmd_simulate(config_path, seed, target, detector, particles,
                          out_dir, dump);
    }
    if (eval->parsed()) {
      return cmd_evaluate(annotations_dir, detections_file, eval_out, iou_thresh);
    }
    if (replay->parsed()) return cmd_replay(ops_path);
    if (serve->parsed()) return cmd_serve_plc(serve_config, port);
  } catch (const aris::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
