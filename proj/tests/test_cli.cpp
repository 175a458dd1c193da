#include <doctest.h>

#include <cstdlib>
#include <sstream>

#include <nlohmann/json.hpp>

#include "support.hpp"
#include "vralpr/cli.hpp"
#include "vralpr/config.hpp"
#include "vralpr/error.hpp"
#include "vralpr/eval.hpp"

using namespace vralpr;
using vralpr::testing::TempDir;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

/// Sets an environment variable for the lifetime of the guard.
class EnvGuard {
 public:
  EnvGuard(const char* name, const char* value) : name_(name) { ::setenv(name, value, 1); }
  ~EnvGuard() { ::unsetenv(name_); }

 private:
  const char* name_;
};

}  // namespace

TEST_CASE("usage errors exit 2") {
  CHECK(cli({}).code == 2);
  CHECK(cli({"frobnicate"}).code == 2);
  CHECK(cli({"run", "--config", "c.json", "--bogus"}).code == 2);
  CHECK(cli({"eval", "--records", "r.jsonl"}).code == 2);
  const auto missing = cli({"run", "--config", "/nonexistent/missing.json"});
  CHECK(missing.code == 2);
  CHECK(missing.err.find("ConfigError") != std::string::npos);
  CHECK(missing.out.empty());
}

TEST_CASE("help exits 0 and documents frame ordering") {
  const auto h = cli({"--help"});
  CHECK(h.code == 0);
  CHECK(h.out.find("zero padding") != std::string::npos);
}

TEST_CASE("flag beats config file beats default") {
  TempDir dir;
  vralpr::testing::spit(dir / "c.json", R"({"source": {"path": "frames"},
    "line": {"row_y": 120}, "chunks": {"chunk_len": 90, "overlap": 10}, "workers": 3,
    "output": "out.jsonl"})");
  const auto path = (dir / "c.json").string();

  const auto from_file = resolve_config(path, {});
  CHECK(from_file.line.row_y == 120);
  CHECK(from_file.chunks.chunk_len == 90);
  CHECK(from_file.chunks.overlap == 10);
  CHECK(from_file.workers == 3);
  CHECK(from_file.source.path == (dir / "frames").string());
  CHECK(from_file.output == (dir / "out.jsonl").string());
  CHECK(from_file.min_overlap_ratio == 0.25);  // not in the file: default

  ConfigOverrides o;
  o.line_y = 800;
  o.chunk = 600;
  o.overlap = 0;
  o.workers = 2;
  o.output = "x.jsonl";
  const auto flagged = resolve_config(path, o);
  CHECK(flagged.line.row_y == 800);
  CHECK(flagged.chunks.chunk_len == 600);
  CHECK(flagged.chunks.overlap == 0);
  CHECK(flagged.workers == 2);
  CHECK(flagged.output == "x.jsonl");

  const auto defaults = resolve_config("", ConfigOverrides{.source = "frames"});
  CHECK(defaults.line.row_y == 800);
  CHECK(defaults.chunks.chunk_len == 600);
  CHECK(defaults.chunks.overlap == 0);
  CHECK(defaults.workers == 0);
}

TEST_CASE("VRALPR_WORKERS sits between the flag and the file") {
  TempDir dir;
  vralpr::testing::spit(dir / "c.json", R"({"source": {"path": "f"}, "workers": 3})");
  const auto path = (dir / "c.json").string();
  EnvGuard env("VRALPR_WORKERS", "5");
  CHECK(resolve_config(path, {}).workers == 5);
  ConfigOverrides o;
  o.workers = 7;
  CHECK(resolve_config(path, o).workers == 7);
}

TEST_CASE("bad config values are ConfigError") {
  TempDir dir;
  const auto check_bad = [&](const std::string& text) {
    vralpr::testing::spit(dir / "bad.json", text);
    try {
      resolve_config((dir / "bad.json").string(), {});
      FAIL("accepted " << text);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ConfigError);
    }
  };
  check_bad(R"({"source": {"path": "f"}, "chunks": {"chunk_len": 10, "overlap": 10}})");
  check_bad(R"({"source": {"path": "f"}, "unknown_key": 1})");
  check_bad(R"({"source": {"path": "f"}, "line": {"row_y": "high"}})");
  check_bad(R"({"source": {"path": "f"}, "detectors": {"marks": {"backend": "external"}}})");
  check_bad("not json");
  check_bad(R"({"line": {"row_y": 10}})");  // no source path
}

TEST_CASE("config documents round trip") {
  PipelineConfig cfg;
  cfg.source.path = "/data/frames";
  cfg.line.row_y = 321;
  cfg.line.x_end = 900;
  cfg.chunks = {120, 20};
  cfg.marks.builtin.background = 40;
  cfg.vehicles.backend = DetectorConfig::Backend::external;
  cfg.vehicles.command = "yolo --serve";
  cfg.ocr.backend = OcrConfig::Backend::external;
  cfg.ocr.command = "ocr-server";
  cfg.min_overlap_ratio = 0.5;
  cfg.workers = 6;
  const auto back = pipeline_config_from_json(pipeline_config_to_json(cfg));
  CHECK(back.source.path == cfg.source.path);
  CHECK(back.line.x_end == 900);
  CHECK(back.chunks.overlap == 20);
  CHECK(back.marks.builtin.background == 40);
  CHECK(back.vehicles.command == "yolo --serve");
  CHECK(back.ocr.command == "ocr-server");
  CHECK(back.min_overlap_ratio == 0.5);
  CHECK(back.workers == 6);
  CHECK(pipeline_config_to_json(back) == pipeline_config_to_json(cfg));
}

TEST_CASE("scene documents round trip") {
  TrafficParams p;
  p.seed = 8;
  p.vehicles = 4;
  const auto spec = random_traffic_scene(p);
  const auto back = scene_spec_from_json(scene_spec_to_json(spec));
  REQUIRE(back.vehicles.size() == 4);
  CHECK(scene_spec_to_json(back) == scene_spec_to_json(spec));
  CHECK(render_scene_frame(back, 50) == render_scene_frame(spec, 50));
}

TEST_CASE("synth, run and eval end to end") {
  TempDir dir;
  const auto out = (dir / "scene").string();
  const auto s = cli({"synth", "--out", out, "--seed", "12", "--vehicles", "6"});
  REQUIRE(s.code == 0);
  CHECK(std::filesystem::exists(dir / "scene" / "frames" / "frame_000000.ppm"));
  CHECK(read_ground_truth(dir / "scene" / "ground_truth.jsonl").size() == 6);

  const auto config = (dir / "scene" / "config.json").string();
  const auto r = cli({"run", "--config", config});
  REQUIRE(r.code == 0);
  CHECK(r.err.find("6 record(s)") != std::string::npos);
  const auto records = read_records(dir / "scene" / "records.jsonl");
  CHECK(records.size() == 6);

  const auto e = cli({"eval", "--records", (dir / "scene" / "records.jsonl").string(), "--gt",
                      (dir / "scene" / "ground_truth.jsonl").string(), "--report", (dir / "report.json").string()});
  REQUIRE(e.code == 0);
  CHECK(e.out.find("CER (micro) 0.0000") != std::string::npos);
  const auto report = nlohmann::json::parse(vralpr::testing::slurp(dir / "report.json"));
  CHECK(report["cer"] == 0.0);

  // Records to standard output when asked.
  const auto to_stdout = cli({"run", "--config", config, "--output", "-"});
  CHECK(to_stdout.code == 0);
  CHECK(to_stdout.out == vralpr::testing::slurp(dir / "scene" / "records.jsonl"));
}

TEST_CASE("vr writes one image per chunk") {
  TempDir dir;
  REQUIRE(cli({"synth", "--out", (dir / "s").string(), "--seed", "2", "--vehicles", "3", "--chunk", "40"}).code == 0);
  const auto v = cli({"vr", "--config", (dir / "s" / "config.json").string(), "--out-dir",
                      (dir / "vr").string(), "--chunk", "50", "--line-y", "100"});
  REQUIRE(v.code == 0);
  const auto frames = list_frame_files(dir / "s" / "frames").size();
  const auto images = list_frame_files(dir / "vr");
  CHECK(images.size() == (frames + 49) / 50);
  const auto first = read_netpbm_file(images.front());
  CHECK(first.height == 50);
  CHECK(first.width == 320);
  CHECK(first.format == PixelFormat::rgb8);

  const auto bad = cli({"vr", "--config", (dir / "s" / "config.json").string(), "--out-dir",
                        (dir / "vr2").string(), "--line-y", "800"});
  CHECK(bad.code == 1);
  CHECK(bad.err.find("LineOutOfBounds") != std::string::npos);
}

TEST_CASE("omitted plate becomes NO_PLATE and costs its length") {
  TempDir dir;
  REQUIRE(cli({"synth", "--out", (dir / "s").string(), "--seed", "4", "--vehicles", "5", "--omit-plate", "2"}).code ==
          0);
  REQUIRE(cli({"run", "--config", (dir / "s" / "config.json").string()}).code == 0);
  const auto records = read_records(dir / "s" / "records.jsonl");
  const auto gts = read_ground_truth(dir / "s" / "ground_truth.jsonl");
  REQUIRE(gts.size() == 5);
  const auto report = compute_cer(records, gts);
  CHECK(report.status_counts.at("NO_PLATE") == 1);
  CHECK(report.total_edits == 7);
}

TEST_CASE("data errors exit 1") {
  TempDir dir;
  vralpr::testing::spit(dir / "r.jsonl", "");
  vralpr::testing::spit(dir / "g.jsonl", "");
  const auto e = cli({"eval", "--records", (dir / "r.jsonl").string(), "--gt", (dir / "g.jsonl").string()});
  CHECK(e.code == 1);
  CHECK(e.err.find("EvalError") != std::string::npos);
  CHECK(cli({"eval", "--records", "/nonexistent/r", "--gt", "/nonexistent/g"}).code == 1);
}

TEST_CASE("probe-detector prints and checks the reply") {
  const std::string mock = VRALPR_MOCK_DETECTOR;
  const auto ok = cli({"probe-detector", "--command", mock + " blob", "--task", "marks"});
  CHECK(ok.code == 0);
  CHECK(ok.out.find("\"detections\"") != std::string::npos);
  CHECK(ok.out.find("conforms") != std::string::npos);
  const auto ocr = cli({"probe-detector", "--command", mock + " ocr ABC", "--task", "ocr"});
  CHECK(ocr.code == 0);
  const auto bad = cli({"probe-detector", "--command", mock + " wrongid", "--task", "plates"});
  CHECK(bad.code == 1);
  CHECK(bad.err.find("ProtocolError") != std::string::npos);
  CHECK(cli({"probe-detector", "--command", mock + " box", "--task", "cars"}).code == 2);
}
