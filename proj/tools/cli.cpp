#include "vralpr/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "vralpr/config.hpp"
#include "vralpr/error.hpp"
#include "vralpr/eval.hpp"
#include "vralpr/pipeline.hpp"
#include "vralpr/protocol.hpp"
#include "vralpr/synth.hpp"
#include "vralpr/visual_rhythm.hpp"

namespace vralpr {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitData = 1;
constexpr int kExitUsage = 2;

constexpr const char* kFrameOrderNote =
    "Frame directories are read in byte order of the filenames (.ppm/.pgm, binary, maxval 255); "
    "number frames with zero padding, e.g. frame_000001.ppm.";

void add_overrides(CLI::App* cmd, ConfigOverrides& o) {
  cmd->add_option("--line-y", o.line_y, "Row sampled to build the VR image")->check(CLI::NonNegativeNumber);
  cmd->add_option("--chunk", o.chunk, "Frames per VR chunk (T)")->check(CLI::PositiveNumber);
  cmd->add_option("--overlap", o.overlap, "Rows shared by consecutive chunks (V)")->check(CLI::NonNegativeNumber);
  cmd->add_option("--source", o.source, "Frame directory (overrides source.path)");
  cmd->add_option("--workers", o.workers, "Worker threads (env VRALPR_WORKERS; default: processors)")
      ->check(CLI::PositiveNumber);
}

int cmd_synth(const std::string& out_dir, const std::string& scene_path, const TrafficParams& traffic,
              const std::vector<int>& omit_plates, std::ostream& err) {
  SceneSpec spec;
  if (!scene_path.empty()) {
    std::ifstream in(scene_path, std::ios::binary);
    if (!in) throw Error(ErrorCode::ConfigError, "cannot open scene " + scene_path);
    spec = scene_spec_from_json(std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()));
  } else {
    spec = random_traffic_scene(traffic);
  }
  // An omitted plate keeps its ground truth: nobody can read it, so it costs
  // every character.
  std::vector<std::optional<std::string>> texts;
  for (const auto& v : spec.vehicles) texts.push_back(v.plate_text);
  for (const int i : omit_plates) {
    if (i < 0 || i >= static_cast<int>(spec.vehicles.size())) {
      throw Error(ErrorCode::ConfigError, "--omit-plate index out of range");
    }
    spec.vehicles[static_cast<std::size_t>(i)].plate_text.reset();
  }
  auto [source, truth] = generate_scene(spec);

  const std::filesystem::path dir(out_dir);
  write_scene_frames(spec, dir / "frames");

  std::vector<GroundTruthEntry> gts;
  for (std::size_t i = 0; i < truth.vehicles.size(); ++i) {
    if (!texts[i]) {
      err << "synth: vehicle " << i << " has no plate text and is left out of the ground truth\n";
      continue;
    }
    gts.push_back({truth.vehicles[i].crossing_frame, *texts[i]});
  }
  write_ground_truth(dir / "ground_truth.jsonl", gts);
  {
    std::ofstream scene(dir / "scene.json", std::ios::binary);
    scene << scene_spec_to_json(spec) << '\n';
  }
  PipelineConfig cfg;
  cfg.source.path = "frames";
  cfg.line.row_y = spec.line_y;
  cfg.chunks.chunk_len = traffic.chunk_len;
  cfg.output = "records.jsonl";
  {
    std::ofstream config(dir / "config.json", std::ios::binary);
    config << pipeline_config_to_json(cfg) << '\n';
  }
  err << "synth: " << spec.frames << " frames, " << spec.vehicles.size() << " vehicles -> " << dir.string() << '\n';
  return kExitOk;
}

int cmd_vr(const PipelineConfig& cfg, const std::string& out_dir, std::ostream& out, std::ostream& err) {
  auto source = open_frame_source(cfg.source);
  std::filesystem::create_directories(out_dir);
  const int chunks = cfg.chunks.chunk_count(static_cast<std::int64_t>(source->frame_count()));
  for (int k = 0; k < chunks; ++k) {
    const VRImage vr = build_vr_chunk(*source, cfg.line, cfg.chunks, k);
    char name[32];
    std::snprintf(name, sizeof name, "vr_%06d.%s", k, vr.image.format == PixelFormat::gray8 ? "pgm" : "ppm");
    const auto path = std::filesystem::path(out_dir) / name;
    write_netpbm_file(path, vr.image);
    out << path.string() << " start_frame=" << vr.start_frame << " rows=" << vr.rows() << '\n';
  }
  err << "vr: " << chunks << " chunk(s), T=" << cfg.chunks.chunk_len << " V=" << cfg.chunks.overlap
      << " line y=" << cfg.line.row_y << '\n';
  return kExitOk;
}

int cmd_run(const PipelineConfig& cfg, std::ostream& out, std::ostream& err) {
  const PipelineResult result = run_pipeline(cfg);
  if (cfg.output.empty() || cfg.output == "-") {
    for (const auto& r : result.records) out << record_to_json(r) << '\n';
  } else {
    write_records(cfg.output, result.records);
  }
  const auto& s = result.stats;
  err << "run: " << result.records.size() << " record(s) from " << s.chunks << " chunk(s); " << s.frames_sampled
      << " frames sampled for VR, " << s.frames_extracted << " frames decoded for recognition\n";
  return kExitOk;
}

int cmd_eval(const std::string& records_path, const std::string& gt_path, std::int64_t tolerance,
             const std::string& report_path, std::ostream& out) {
  const auto records = read_records(records_path);
  const auto gts = read_ground_truth(gt_path);
  const CERReport report = compute_cer(records, gts, tolerance);
  const std::string doc = report_to_json(report, records, gts);
  if (report_path.empty()) {
    out << doc << "\n\n";
  } else {
    std::ofstream f(report_path, std::ios::binary);
    if (!f) throw Error(ErrorCode::SourceNotFound, "cannot write " + report_path);
    f << doc << '\n';
  }
  out << report_table(report, records, gts);
  return kExitOk;
}

int cmd_probe(const std::string& command, const std::string& task, std::ostream& out) {
  // 8x8 gray image with a bright 4x4 square in the middle.
  Image img(8, 8, PixelFormat::gray8, 0);
  for (int y = 2; y < 6; ++y) {
    for (int x = 2; x < 6; ++x) img.at(x, y) = 255;
  }
  ProtocolClient client(command);
  const std::string request =
      task == "ocr" ? encode_ocr_request(0, img) : encode_detect_request(0, img, detection_task_from_string(task));
  const std::string reply = client.exchange(request);
  const auto parsed = nlohmann::json::parse(reply, nullptr, false);
  out << "request : " << request << '\n';
  out << "response:\n" << (parsed.is_discarded() ? reply : parsed.dump(2)) << '\n';
  // Validate the reply the same way the pipeline would.
  if (task == "ocr") {
    parse_ocr_reply(reply, 0);
  } else {
    parse_detect_reply(reply, 0);
  }
  out << "reply conforms to the protocol\n";
  return kExitOk;
}

}  // namespace

// Flag > environment (workers only) > config file > built-in default.
PipelineConfig resolve_config(const std::string& config_path, const ConfigOverrides& o) {
  PipelineConfig cfg = config_path.empty() ? PipelineConfig{} : load_pipeline_config(config_path);
  if (o.line_y) cfg.line.row_y = *o.line_y;
  if (o.chunk) cfg.chunks.chunk_len = *o.chunk;
  if (o.overlap) cfg.chunks.overlap = *o.overlap;
  if (o.output) cfg.output = *o.output;
  if (o.source) cfg.source.path = *o.source;
  if (o.dump_dir) cfg.dump_dir = *o.dump_dir;
  if (o.workers) {
    cfg.workers = *o.workers;
  } else if (const char* env = std::getenv("VRALPR_WORKERS")) {
    try {
      cfg.workers = std::stoi(env);
    } catch (const std::exception&) {
      throw Error(ErrorCode::ConfigError, "VRALPR_WORKERS is not an integer");
    }
  }
  cfg.validate();
  return cfg;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Visual-rhythm licence plate recognition: one frame per vehicle."};
  app.name("vralpr");
  app.require_subcommand(1);
  app.footer(kFrameOrderNote);

  // synth
  auto* synth = app.add_subcommand("synth", "Render a synthetic traffic video with ground truth");
  std::string synth_out;
  std::string scene_path;
  TrafficParams traffic;
  std::vector<int> omit_plates;
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--scene", scene_path, "Scene description (JSON); random traffic when omitted");
  synth->add_option("--seed", traffic.seed, "Random seed");
  synth->add_option("--vehicles", traffic.vehicles, "Number of vehicles")->check(CLI::NonNegativeNumber);
  synth->add_option("--width", traffic.width, "Frame width");
  synth->add_option("--height", traffic.height, "Frame height");
  synth->add_option("--line-y", traffic.line_y, "Counting line row");
  synth->add_option("--chunk", traffic.chunk_len, "Chunk length the crossings are laid out for");
  synth->add_option("--noise", traffic.noise, "Pixel inversion probability")->check(CLI::Range(0.0, 1.0));
  synth->add_option("--omit-plate", omit_plates, "Vehicle index rendered without a plate (repeatable)");

  // vr
  auto* vr = app.add_subcommand("vr", "Write the VR image of every chunk");
  std::string vr_config;
  std::string vr_out = "vr";
  ConfigOverrides vr_over;
  vr->add_option("--config", vr_config, "Pipeline config (JSON)");
  vr->add_option("--out-dir", vr_out, "Directory for vr_NNNNNN.ppm/pgm");
  add_overrides(vr, vr_over);
  vr->footer(kFrameOrderNote);

  // run
  auto* run = app.add_subcommand("run", "Run the full pipeline and write one record per vehicle");
  std::string run_config;
  ConfigOverrides run_over;
  run->add_option("--config", run_config, "Pipeline config (JSON)")->required();
  run->add_option("--output", run_over.output, "Records file ('-' for standard output)");
  run->add_option("--dump-dir", run_over.dump_dir, "Write annotated extracted frames here");
  add_overrides(run, run_over);
  run->footer(kFrameOrderNote);

  // eval
  auto* ev = app.add_subcommand("eval", "Character error rate of records against ground truth");
  std::string records_path;
  std::string gt_path;
  std::string report_path;
  std::int64_t tolerance = 3;
  ev->add_option("--records", records_path, "Records file")->required();
  ev->add_option("--gt", gt_path, "Ground-truth file")->required();
  ev->add_option("--tolerance", tolerance, "Frame tolerance for matching")->check(CLI::NonNegativeNumber);
  ev->add_option("--report", report_path, "Write the JSON report here instead of standard output");

  // probe-detector
  auto* probe = app.add_subcommand("probe-detector", "Send a tiny image to an external backend");
  std::string probe_command;
  std::string probe_task = "marks";
  probe->add_option("--command", probe_command, "Backend command line")->required();
  probe->add_option("--task", probe_task, "marks, vehicles, plates or ocr")
      ->check(CLI::IsMember({"marks", "vehicles", "plates", "ocr"}));

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*synth) return cmd_synth(synth_out, scene_path, traffic, omit_plates, err);
    if (*vr) return cmd_vr(resolve_config(vr_config, vr_over), vr_out, out, err);
    if (*run) return cmd_run(resolve_config(run_config, run_over), out, err);
    if (*ev) return cmd_eval(records_path, gt_path, tolerance, report_path, out);
    if (*probe) return cmd_probe(probe_command, probe_task, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::ConfigError ? kExitUsage : kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace vralpr
