#include "vralpr/config.hpp"

#include <fstream>
#include <initializer_list>
#include <iterator>

#include "json_util.hpp"
#include "vralpr/error.hpp"

namespace vralpr {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorCode::ConfigError, what); }

void check_keys(const json& j, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) config_error(std::string(where) + " must be an object");
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const auto a : allowed) ok = ok || item.key() == a;
    if (!ok) config_error("unknown key '" + item.key() + "' in " + std::string(where));
  }
}

DetectorConfig detector_from_json(const json& j, const std::string& where) {
  check_keys(j, where, {"backend", "threshold", "min_area", "background", "command"});
  DetectorConfig d;
  const auto backend = j.value("backend", std::string("builtin"));
  if (backend == "external") {
    d.backend = DetectorConfig::Backend::external;
  } else if (backend != "builtin") {
    config_error(where + ".backend must be 'builtin' or 'external'");
  }
  d.builtin.threshold = j.value("threshold", d.builtin.threshold);
  d.builtin.min_area = j.value("min_area", d.builtin.min_area);
  if (j.contains("background")) {
    const auto& bg = j["background"];
    if (bg.is_number_integer()) {
      d.builtin.background = bg.get<int>();
    } else if (!(bg.is_string() && bg.get<std::string>() == "auto_median")) {
      config_error(where + ".background must be 'auto_median' or a gray value");
    }
  }
  d.command = j.value("command", std::string{});
  return d;
}

json detector_to_json(const DetectorConfig& d) {
  json j{{"backend", d.backend == DetectorConfig::Backend::external ? "external" : "builtin"},
         {"threshold", d.builtin.threshold},
         {"min_area", d.builtin.min_area},
         {"background", d.builtin.background ? json(*d.builtin.background) : json("auto_median")}};
  if (!d.command.empty()) j["command"] = d.command;
  return j;
}

json parse_document(std::string_view text) {
  json j = json::parse(text.begin(), text.end(), nullptr, false);
  if (j.is_discarded()) config_error("document is not valid JSON");
  return j;
}

}  // namespace

PipelineConfig pipeline_config_from_json(std::string_view text) {
  const json j = parse_document(text);
  check_keys(j, "config", {"source", "line", "chunks", "detectors", "ocr", "min_overlap_ratio", "output",
                           "dump_dir", "workers"});
  PipelineConfig cfg;
  try {
    if (j.contains("source")) {
      const auto& s = j["source"];
      check_keys(s, "source", {"kind", "path", "width", "height", "format"});
      const auto kind = s.value("kind", std::string("ppm_dir"));
      if (kind == "raw_stream") {
        cfg.source.kind = SourceKind::raw_stream;
      } else if (kind != "ppm_dir") {
        config_error("source.kind must be 'ppm_dir' or 'raw_stream'");
      }
      cfg.source.path = s.value("path", std::string{});
      cfg.source.width = s.value("width", 0);
      cfg.source.height = s.value("height", 0);
      cfg.source.format = pixel_format_from_string(s.value("format", std::string("gray8")));
    }
    if (j.contains("line")) {
      const auto& l = j["line"];
      check_keys(l, "line", {"row_y", "x_start", "x_end"});
      cfg.line.row_y = l.value("row_y", cfg.line.row_y);
      cfg.line.x_start = l.value("x_start", 0);
      if (l.contains("x_end") && !l["x_end"].is_null()) cfg.line.x_end = l["x_end"].get<int>();
    }
    if (j.contains("chunks")) {
      const auto& c = j["chunks"];
      check_keys(c, "chunks", {"chunk_len", "overlap"});
      cfg.chunks.chunk_len = c.value("chunk_len", cfg.chunks.chunk_len);
      cfg.chunks.overlap = c.value("overlap", cfg.chunks.overlap);
    }
    if (j.contains("detectors")) {
      const auto& d = j["detectors"];
      check_keys(d, "detectors", {"marks", "vehicles", "plates"});
      if (d.contains("marks")) cfg.marks = detector_from_json(d["marks"], "detectors.marks");
      if (d.contains("vehicles")) cfg.vehicles = detector_from_json(d["vehicles"], "detectors.vehicles");
      if (d.contains("plates")) cfg.plates = detector_from_json(d["plates"], "detectors.plates");
    }
    if (j.contains("ocr")) {
      const auto& o = j["ocr"];
      check_keys(o, "ocr", {"backend", "command"});
      const auto backend = o.value("backend", std::string("builtin"));
      if (backend == "external") {
        cfg.ocr.backend = OcrConfig::Backend::external;
      } else if (backend != "builtin") {
        config_error("ocr.backend must be 'builtin' or 'external'");
      }
      cfg.ocr.command = o.value("command", std::string{});
    }
    cfg.min_overlap_ratio = j.value("min_overlap_ratio", cfg.min_overlap_ratio);
    cfg.output = j.value("output", std::string{});
    cfg.dump_dir = j.value("dump_dir", std::string{});
    cfg.workers = j.value("workers", cfg.workers);
  } catch (const json::exception& e) {
    config_error(std::string("ill-typed value: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    config_error(e.what());
  }
  return cfg;
}

std::string pipeline_config_to_json(const PipelineConfig& cfg) {
  json j;
  j["source"] = {{"kind", cfg.source.kind == SourceKind::raw_stream ? "raw_stream" : "ppm_dir"},
                 {"path", cfg.source.path}};
  if (cfg.source.kind == SourceKind::raw_stream) {
    j["source"]["width"] = cfg.source.width;
    j["source"]["height"] = cfg.source.height;
    j["source"]["format"] = std::string(to_string(cfg.source.format));
  }
  j["line"] = {{"row_y", cfg.line.row_y},
               {"x_start", cfg.line.x_start},
               {"x_end", cfg.line.x_end ? json(*cfg.line.x_end) : json(nullptr)}};
  j["chunks"] = {{"chunk_len", cfg.chunks.chunk_len}, {"overlap", cfg.chunks.overlap}};
  j["detectors"] = {{"marks", detector_to_json(cfg.marks)},
                    {"vehicles", detector_to_json(cfg.vehicles)},
                    {"plates", detector_to_json(cfg.plates)}};
  j["ocr"] = {{"backend", cfg.ocr.backend == OcrConfig::Backend::external ? "external" : "builtin"}};
  if (!cfg.ocr.command.empty()) j["ocr"]["command"] = cfg.ocr.command;
  j["min_overlap_ratio"] = cfg.min_overlap_ratio;
  j["output"] = cfg.output;
  if (!cfg.dump_dir.empty()) j["dump_dir"] = cfg.dump_dir;
  j["workers"] = cfg.workers;
  return j.dump(2);
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) config_error("cannot open config " + path.string());
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  PipelineConfig cfg = pipeline_config_from_json(text);
  const auto base = path.parent_path();
  const auto resolve = [&](std::string& p) {
    if (!p.empty() && p != "-" && std::filesystem::path(p).is_relative()) p = (base / p).string();
  };
  resolve(cfg.source.path);
  resolve(cfg.output);
  resolve(cfg.dump_dir);
  return cfg;
}

SceneSpec scene_spec_from_json(std::string_view text) {
  const json j = parse_document(text);
  check_keys(j, "scene", {"frames", "width", "height", "background", "line_y", "vehicles", "noise", "seed"});
  SceneSpec spec;
  try {
    spec.frames = j.value("frames", 0);
    spec.width = j.value("width", spec.width);
    spec.height = j.value("height", spec.height);
    spec.background = j.value("background", spec.background);
    spec.line_y = j.value("line_y", spec.line_y);
    spec.noise = j.value("noise", 0.0);
    spec.seed = j.value("seed", std::uint64_t{0});
    for (const auto& v : j.value("vehicles", json::array())) {
      check_keys(v, "vehicle", {"x", "width", "height", "speed", "entry_frame", "body_gray", "plate_text",
                                "plate_offset", "plate_scale"});
      VehicleSpec vs;
      vs.x = v.at("x").get<int>();
      vs.width = v.at("width").get<int>();
      vs.height = v.at("height").get<int>();
      vs.speed = v.at("speed").get<double>();
      vs.entry_frame = v.at("entry_frame").get<int>();
      vs.body_gray = v.value("body_gray", vs.body_gray);
      if (v.contains("plate_text") && !v["plate_text"].is_null()) vs.plate_text = v["plate_text"].get<std::string>();
      if (v.contains("plate_offset")) {
        vs.plate_dx = v["plate_offset"].at("x").get<int>();
        vs.plate_dy = v["plate_offset"].at("y").get<int>();
      }
      vs.plate_scale = v.value("plate_scale", 1);
      spec.vehicles.push_back(std::move(vs));
    }
  } catch (const json::exception& e) {
    config_error(std::string("ill-typed scene value: ") + e.what());
  }
  return spec;
}

std::string scene_spec_to_json(const SceneSpec& spec) {
  json vehicles = json::array();
  for (const auto& v : spec.vehicles) {
    vehicles.push_back({{"x", v.x},
                        {"width", v.width},
                        {"height", v.height},
                        {"speed", v.speed},
                        {"entry_frame", v.entry_frame},
                        {"body_gray", v.body_gray},
                        {"plate_text", v.plate_text ? json(*v.plate_text) : json(nullptr)},
                        {"plate_offset", {{"x", v.plate_dx}, {"y", v.plate_dy}}},
                        {"plate_scale", v.plate_scale}});
  }
  return json{{"frames", spec.frames},     {"width", spec.width},   {"height", spec.height},
              {"background", spec.background}, {"line_y", spec.line_y}, {"noise", spec.noise},
              {"seed", spec.seed},         {"vehicles", vehicles}}
      .dump(2);
}

}  // namespace vralpr
