#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vralpr/detection.hpp"
#include "vralpr/plate_ocr.hpp"
#include "vralpr/video_io.hpp"
#include "vralpr/visual_rhythm.hpp"

namespace vralpr {

struct OcrConfig {
  enum class Backend { builtin, external };
  Backend backend = Backend::builtin;
  std::string command;
};

struct PipelineConfig {
  FrameSourceConfig source;
  LineSpec line;
  ChunkSpec chunks;
  DetectorConfig marks;
  DetectorConfig vehicles;
  DetectorConfig plates;
  OcrConfig ocr;
  double min_overlap_ratio = 0.25;
  std::string output;
  /// When set, each extracted frame is written here with its boxes drawn.
  std::string dump_dir;
  /// Threads for the per-mark stages; 0 picks the number of processors.
  int workers = 0;

  /// ConfigError on the first invalid field. The source is skipped when
  /// the caller supplies its own FrameSource.
  void validate(bool check_source = true) const;
};

enum class RecordStatus { OK, NO_VEHICLE, NO_PLATE, OCR_EMPTY };

std::string_view to_string(RecordStatus s);
RecordStatus record_status_from_string(std::string_view s);

/// One vehicle crossing. mark_bbox is given in global time-spatial
/// coordinates: x in frame columns, y in global frame indices.
/// vehicle_bbox and plate_bbox are in frame coordinates.
struct PlateRecord {
  std::int64_t vehicle_id = 0;
  std::int64_t frame_index = 0;
  BBox mark_bbox;
  std::optional<BBox> vehicle_bbox;
  std::optional<BBox> plate_bbox;
  std::optional<std::string> text;
  std::optional<std::vector<double>> per_char_scores;
  RecordStatus status = RecordStatus::OK;

  bool operator==(const PlateRecord&) const = default;
};

struct PipelineStats {
  int chunks = 0;
  std::int64_t frames_sampled = 0;    ///< frames read to build VR images
  std::int64_t frames_extracted = 0;  ///< frames decoded for vehicle/plate stages
  std::int64_t marks_detected = 0;
  std::int64_t marks_owned = 0;
};

struct PipelineResult {
  std::vector<PlateRecord> records;  ///< sorted by vehicle_id
  PipelineStats stats;
};

/// Runs VR building, mark detection, frame extraction, vehicle association,
/// plate detection, cropping and OCR over every chunk of `source`.
/// Per-mark failures become record statuses; a failing backend or source
/// aborts with an Error naming the stage.
PipelineResult run_pipeline(const PipelineConfig& cfg, FrameSource& source);

/// Opens cfg.source and runs the pipeline over it.
PipelineResult run_pipeline(const PipelineConfig& cfg);

/// Intersection of the box with the frame; InvalidCrop when empty.
Image crop_vehicle(const Image& frame, const BBox& vehicle_bbox);

/// Shifts a box by (dx, dy).
BBox translate_box(const BBox& box, int dx, int dy);

std::string record_to_json(const PlateRecord& record);
PlateRecord record_from_json(std::string_view line);

/// One record per line.
void write_records(const std::filesystem::path& path, const std::vector<PlateRecord>& records);
std::vector<PlateRecord> read_records(const std::filesystem::path& path);

}  // namespace vralpr
