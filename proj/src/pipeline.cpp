#include "vralpr/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <thread>

#include "json_util.hpp"
#include "vralpr/association.hpp"
#include "vralpr/error.hpp"
#include "vralpr/protocol.hpp"

namespace vralpr {

using nlohmann::json;

namespace {

struct Backends {
  std::unique_ptr<Detector> marks;
  std::unique_ptr<Detector> vehicles;
  std::unique_ptr<Detector> plates;
  std::unique_ptr<OcrBackend> ocr;
};

[[noreturn]] void rethrow_with_stage(const Error& e, const std::string& stage) {
  throw Error(e.code(), "stage " + stage + ": " + e.detail());
}

bool is_backend_failure(const Error& e) {
  return e.code() == ErrorCode::DetectorUnavailable || e.code() == ErrorCode::ProtocolError;
}

Backends make_backends(const PipelineConfig& cfg) {
  Backends b;
  const auto spawn = [](const DetectorConfig& dc, const char* task) {
    try {
      return make_detector(dc);
    } catch (const Error& e) {
      rethrow_with_stage(e, task);
    }
  };
  b.marks = spawn(cfg.marks, "marks");
  b.vehicles = spawn(cfg.vehicles, "vehicles");
  b.plates = spawn(cfg.plates, "plates");
  if (cfg.ocr.backend == OcrConfig::Backend::external) {
    b.ocr = std::make_unique<ExternalOcr>(std::make_shared<ProtocolClient>(cfg.ocr.command));
  } else {
    b.ocr = std::make_unique<TemplateOcr>();
  }
  return b;
}

struct MarkJob {
  Mark mark;
  PlateRecord record;
  Frame frame;
};

void draw_rect(Image& rgb, const BBox& b, std::uint8_t r, std::uint8_t g, std::uint8_t bl) {
  const auto put = [&](int x, int y) {
    if (x < 0 || y < 0 || x >= rgb.width || y >= rgb.height) return;
    auto* p = rgb.row(y) + 3 * x;
    p[0] = r;
    p[1] = g;
    p[2] = bl;
  };
  for (int x = b.x0; x < b.x1; ++x) {
    put(x, b.y0);
    put(x, b.y1 - 1);
  }
  for (int y = b.y0; y < b.y1; ++y) {
    put(b.x0, y);
    put(b.x1 - 1, y);
  }
}

void dump_annotated(const PipelineConfig& cfg, const MarkJob& job) {
  Image rgb = to_rgb(job.frame);
  BBox line{job.record.mark_bbox.x0, cfg.line.row_y, job.record.mark_bbox.x1, cfg.line.row_y + 1, 1.0, "line"};
  draw_rect(rgb, line, 255, 255, 0);
  if (job.record.vehicle_bbox) draw_rect(rgb, *job.record.vehicle_bbox, 0, 255, 0);
  if (job.record.plate_bbox) draw_rect(rgb, *job.record.plate_bbox, 255, 0, 0);
  char name[48];
  std::snprintf(name, sizeof name, "vehicle_%06lld.ppm", static_cast<long long>(job.record.vehicle_id));
  write_netpbm_file(std::filesystem::path(cfg.dump_dir) / name, rgb);
}

// Steps after frame extraction: vehicles, association, plate, crop, OCR.
void process_mark(const PipelineConfig& cfg, Backends& backends, MarkJob& job) {
  PlateRecord& rec = job.record;
  const std::string where = " (frame " + std::to_string(rec.frame_index) + ")";

  std::vector<BBox> vehicles;
  try {
    vehicles = backends.vehicles->detect(job.frame, DetectionTask::vehicles);
  } catch (const Error& e) {
    rethrow_with_stage(e, "vehicles" + where);
  }

  BBox vehicle;
  try {
    vehicle = associate_vehicle(rec.mark_bbox.x0, rec.mark_bbox.x1, vehicles, cfg.min_overlap_ratio);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoVehicleMatch) throw;
    rec.status = RecordStatus::NO_VEHICLE;
    return;
  }
  rec.vehicle_bbox = vehicle;

  const Image crop = crop_vehicle(job.frame, vehicle);
  std::vector<BBox> plates;
  try {
    plates = backends.plates->detect(crop, DetectionTask::plates);
  } catch (const Error& e) {
    rethrow_with_stage(e, "plates" + where);
  }
  if (plates.empty()) {
    rec.status = RecordStatus::NO_PLATE;
    return;
  }
  // Highest score first; one plate per vehicle.
  const BBox& plate_local = plates.front();
  rec.plate_bbox = translate_box(plate_local, vehicle.x0, vehicle.y0);

  const Image plate_image = crop_plate(crop, plate_local);
  try {
    PlateReading reading = backends.ocr->read(plate_image);
    rec.text = std::move(reading.text);
    rec.per_char_scores = std::move(reading.per_char_scores);
    rec.status = RecordStatus::OK;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::EmptyReading) {
      rec.status = RecordStatus::OCR_EMPTY;
      return;
    }
    if (is_backend_failure(e)) rethrow_with_stage(e, "ocr" + where);
    throw;
  }
}

void process_jobs(const PipelineConfig& cfg, Backends& backends, std::vector<MarkJob>& jobs) {
  const int requested = cfg.workers > 0 ? cfg.workers : static_cast<int>(std::thread::hardware_concurrency());
  const int workers = std::clamp<int>(requested, 1, static_cast<int>(std::max<std::size_t>(jobs.size(), 1)));
  if (workers == 1) {
    for (auto& job : jobs) process_mark(cfg, backends, job);
    return;
  }
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i; (i = next.fetch_add(1)) < jobs.size();) {
          try {
            process_mark(cfg, backends, jobs[i]);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  // Report the first failure in mark order, as a sequential run would.
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

void PipelineConfig::validate(bool check_source) const {
  if (check_source) source.validate();
  chunks.validate();
  marks.validate();
  vehicles.validate();
  plates.validate();
  if (ocr.backend == OcrConfig::Backend::external && ocr.command.empty()) {
    throw Error(ErrorCode::ConfigError, "external OCR needs a command");
  }
  if (line.row_y < 0 || line.x_start < 0 || (line.x_end && *line.x_end <= line.x_start)) {
    throw Error(ErrorCode::ConfigError, "line must have row_y >= 0 and 0 <= x_start < x_end");
  }
  if (!(min_overlap_ratio >= 0.0 && min_overlap_ratio <= 1.0)) {
    throw Error(ErrorCode::ConfigError, "min_overlap_ratio must lie in [0, 1]");
  }
  if (workers < 0) throw Error(ErrorCode::ConfigError, "workers must be >= 0");
}

std::string_view to_string(RecordStatus s) {
  switch (s) {
    case RecordStatus::OK: return "OK";
    case RecordStatus::NO_VEHICLE: return "NO_VEHICLE";
    case RecordStatus::NO_PLATE: return "NO_PLATE";
    case RecordStatus::OCR_EMPTY: return "OCR_EMPTY";
  }
  return "OK";
}

RecordStatus record_status_from_string(std::string_view s) {
  for (auto st : {RecordStatus::OK, RecordStatus::NO_VEHICLE, RecordStatus::NO_PLATE, RecordStatus::OCR_EMPTY}) {
    if (to_string(st) == s) return st;
  }
  throw Error(ErrorCode::EvalError, "unknown record status '" + std::string(s) + "'");
}

Image crop_vehicle(const Image& frame, const BBox& vehicle_bbox) {
  const auto clipped = clip_box(vehicle_bbox, frame.width, frame.height);
  if (!clipped) throw Error(ErrorCode::InvalidCrop, "vehicle box lies outside the frame");
  return sub_image(frame, clipped->x0, clipped->y0, clipped->x1, clipped->y1);
}

BBox translate_box(const BBox& box, int dx, int dy) {
  BBox out = box;
  out.x0 += dx;
  out.x1 += dx;
  out.y0 += dy;
  out.y1 += dy;
  return out;
}

PipelineResult run_pipeline(const PipelineConfig& cfg, FrameSource& source) {
  cfg.validate(false);
  PipelineResult result;
  const auto total = static_cast<std::int64_t>(source.frame_count());
  if (total == 0) return result;

  Backends backends = make_backends(cfg);
  if (!cfg.dump_dir.empty()) std::filesystem::create_directories(cfg.dump_dir);

  std::int64_t next_id = 0;
  const int chunk_count = cfg.chunks.chunk_count(total);
  for (int k = 0; k < chunk_count; ++k) {
    // (a) time-spatial image of this chunk
    VRImage vr;
    try {
      vr = build_vr_chunk(source, cfg.line, cfg.chunks, k);
    } catch (const Error& e) {
      rethrow_with_stage(e, "vr (chunk " + std::to_string(k) + ")");
    }
    ++result.stats.chunks;
    result.stats.frames_sampled += vr.rows();

    // (b) marks
    std::vector<BBox> boxes;
    try {
      boxes = backends.marks->detect(vr.image, DetectionTask::marks);
    } catch (const Error& e) {
      rethrow_with_stage(e, "marks (chunk " + std::to_string(k) + ")");
    }
    result.stats.marks_detected += static_cast<std::int64_t>(boxes.size());

    std::vector<MarkJob> jobs;
    for (const auto& box : boxes) {
      Mark mark{box, k, vr.start_frame + (box.y1 - 1)};
      if (!own_mark(mark, cfg.chunks)) continue;
      MarkJob job;
      job.mark = mark;
      job.record.frame_index = mark_to_frame_index(mark, cfg.chunks, total - 1);
      job.record.mark_bbox =
          translate_box(box, cfg.line.x_start, static_cast<int>(vr.start_frame));
      jobs.push_back(std::move(job));
    }
    std::stable_sort(jobs.begin(), jobs.end(), [](const MarkJob& a, const MarkJob& b) {
      if (a.mark.global_bottom != b.mark.global_bottom) return a.mark.global_bottom < b.mark.global_bottom;
      return a.mark.bbox.x0 < b.mark.bbox.x0;
    });
    result.stats.marks_owned += static_cast<std::int64_t>(jobs.size());

    // (c) one frame per mark; reads stay sequential
    for (auto& job : jobs) {
      job.record.vehicle_id = next_id++;
      try {
        job.frame = source.read(static_cast<std::size_t>(job.record.frame_index));
      } catch (const Error& e) {
        rethrow_with_stage(e, "extract (frame " + std::to_string(job.record.frame_index) + ")");
      }
      ++result.stats.frames_extracted;
    }

    // (d)-(h)
    process_jobs(cfg, backends, jobs);
    for (auto& job : jobs) {
      if (!cfg.dump_dir.empty()) dump_annotated(cfg, job);
      result.records.push_back(std::move(job.record));
    }
  }
  return result;
}

PipelineResult run_pipeline(const PipelineConfig& cfg) {
  cfg.validate();
  auto source = open_frame_source(cfg.source);
  return run_pipeline(cfg, *source);
}

std::string record_to_json(const PlateRecord& r) {
  using ojson = nlohmann::ordered_json;
  const auto opt_box = [](const std::optional<BBox>& b) { return b ? ojson(bbox_to_json(*b)) : ojson(nullptr); };
  ojson j;
  j["vehicle_id"] = r.vehicle_id;
  j["frame_index"] = r.frame_index;
  j["mark_bbox"] = ojson(bbox_to_json(r.mark_bbox));
  j["vehicle_bbox"] = opt_box(r.vehicle_bbox);
  j["plate_bbox"] = opt_box(r.plate_bbox);
  j["text"] = r.text ? ojson(*r.text) : ojson(nullptr);
  j["per_char_scores"] = r.per_char_scores ? ojson(*r.per_char_scores) : ojson(nullptr);
  j["plate_format"] = r.text ? ojson(std::string(to_string(validate_plate_format(*r.text)))) : ojson(nullptr);
  j["status"] = std::string(to_string(r.status));
  return j.dump();
}

PlateRecord record_from_json(std::string_view line) {
  const json j = json::parse(line.begin(), line.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::EvalError, "record is not a JSON object");
  try {
    PlateRecord r;
    r.vehicle_id = j.at("vehicle_id").get<std::int64_t>();
    r.frame_index = j.at("frame_index").get<std::int64_t>();
    r.mark_bbox = bbox_from_json(j.at("mark_bbox"));
    if (j.contains("vehicle_bbox") && !j["vehicle_bbox"].is_null()) r.vehicle_bbox = bbox_from_json(j["vehicle_bbox"]);
    if (j.contains("plate_bbox") && !j["plate_bbox"].is_null()) r.plate_bbox = bbox_from_json(j["plate_bbox"]);
    if (j.contains("text") && !j["text"].is_null()) r.text = j["text"].get<std::string>();
    if (j.contains("per_char_scores") && !j["per_char_scores"].is_null()) {
      r.per_char_scores = j["per_char_scores"].get<std::vector<double>>();
    }
    r.status = record_status_from_string(j.at("status").get<std::string>());
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::EvalError, std::string("malformed record: ") + e.what());
  }
}

void write_records(const std::filesystem::path& path, const std::vector<PlateRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::SourceNotFound, "cannot write " + path.string());
  for (const auto& r : records) out << record_to_json(r) << '\n';
}

std::vector<PlateRecord> read_records(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::SourceNotFound, "cannot open " + path.string());
  std::vector<PlateRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    records.push_back(record_from_json(line));
  }
  return records;
}

}  // namespace vralpr
