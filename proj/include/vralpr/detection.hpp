#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vralpr/image.hpp"

namespace vralpr {

class ProtocolClient;

/// Axis-aligned box, [x0, x1) x [y0, y1).
struct BBox {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;
  double score = 1.0;
  std::string label;

  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  long long area() const { return static_cast<long long>(width()) * height(); }
  bool valid() const { return 0 <= x0 && x0 < x1 && 0 <= y0 && y0 < y1 && 0.0 <= score && score <= 1.0; }

  bool operator==(const BBox&) const = default;
};

/// Intersection with [0, width) x [0, height); nullopt when nothing remains.
std::optional<BBox> clip_box(const BBox& box, int width, int height);

/// A detected blob in a VR image. global_bottom is the global frame index of
/// the bbox's last row: start_frame + bbox.y1 - 1.
struct Mark {
  BBox bbox;
  int chunk_index = 0;
  std::int64_t global_bottom = 0;
};

enum class DetectionTask { marks, vehicles, plates };

std::string_view to_string(DetectionTask t);
DetectionTask detection_task_from_string(std::string_view s);

struct BuiltinParams {
  int threshold = 25;
  int min_area = 64;
  /// Fixed background gray; unset means the per-column median over rows.
  std::optional<int> background;
};

struct DetectorConfig {
  enum class Backend { builtin, external };
  Backend backend = Backend::builtin;
  BuiltinParams builtin;
  /// Shell command line of the external backend.
  std::string command;

  void validate() const;
};

/// Classical foreground detector: per-column background, |pixel - bg| >
/// threshold, 4-connected components, components below min_area dropped.
/// Boxes come out in raster order of their first pixel, all with score 1.
/// rgb8 input is converted with the luma formula first.
std::vector<BBox> builtin_blob_detect(const Image& image, const BuiltinParams& params,
                                      std::string_view label = "blob");

/// Per-column background values used by builtin_blob_detect (lower median
/// over rows when no fixed value is given).
std::vector<std::uint8_t> column_background(const Image& gray, const BuiltinParams& params);

class Detector {
 public:
  virtual ~Detector() = default;

  /// Boxes sorted by descending score and clipped to the image.
  std::vector<BBox> detect(const Image& image, DetectionTask task);

 protected:
  virtual std::vector<BBox> raw_detect(const Image& image, DetectionTask task) = 0;
};

class BuiltinDetector final : public Detector {
 public:
  explicit BuiltinDetector(BuiltinParams params) : params_(params) {}

 protected:
  std::vector<BBox> raw_detect(const Image& image, DetectionTask task) override;

 private:
  BuiltinParams params_;
};

/// Forwards every request to a long-lived subprocess over the line protocol.
class ExternalDetector final : public Detector {
 public:
  explicit ExternalDetector(std::shared_ptr<ProtocolClient> client) : client_(std::move(client)) {}

 protected:
  std::vector<BBox> raw_detect(const Image& image, DetectionTask task) override;

 private:
  std::shared_ptr<ProtocolClient> client_;
};

std::unique_ptr<Detector> make_detector(const DetectorConfig& cfg);

/// One-shot convenience over make_detector.
std::vector<BBox> detect(const Image& image, DetectionTask task, const DetectorConfig& cfg);

}  // namespace vralpr
