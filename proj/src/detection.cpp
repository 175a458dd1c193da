#include "vralpr/detection.hpp"

#include <algorithm>
#include <array>
#include <cstdlib>

#include "vralpr/error.hpp"
#include "vralpr/protocol.hpp"

namespace vralpr {

std::optional<BBox> clip_box(const BBox& box, int width, int height) {
  BBox out = box;
  out.x0 = std::clamp(box.x0, 0, width);
  out.x1 = std::clamp(box.x1, 0, width);
  out.y0 = std::clamp(box.y0, 0, height);
  out.y1 = std::clamp(box.y1, 0, height);
  if (out.x0 >= out.x1 || out.y0 >= out.y1) return std::nullopt;
  return out;
}

std::string_view to_string(DetectionTask t) {
  switch (t) {
    case DetectionTask::marks: return "marks";
    case DetectionTask::vehicles: return "vehicles";
    case DetectionTask::plates: return "plates";
  }
  return "marks";
}

DetectionTask detection_task_from_string(std::string_view s) {
  if (s == "marks") return DetectionTask::marks;
  if (s == "vehicles") return DetectionTask::vehicles;
  if (s == "plates") return DetectionTask::plates;
  throw Error(ErrorCode::ConfigError, "unknown detection task '" + std::string(s) + "'");
}

void DetectorConfig::validate() const {
  if (backend == Backend::external) {
    if (command.empty()) throw Error(ErrorCode::ConfigError, "external detector needs a command");
    return;
  }
  if (builtin.threshold < 0 || builtin.threshold > 255) {
    throw Error(ErrorCode::ConfigError, "threshold must lie in [0, 255]");
  }
  if (builtin.min_area < 1) throw Error(ErrorCode::ConfigError, "min_area must be >= 1");
  if (builtin.background && (*builtin.background < 0 || *builtin.background > 255)) {
    throw Error(ErrorCode::ConfigError, "fixed background must lie in [0, 255]");
  }
}

std::vector<std::uint8_t> column_background(const Image& gray, const BuiltinParams& params) {
  std::vector<std::uint8_t> bg(static_cast<std::size_t>(gray.width));
  if (params.background) {
    std::fill(bg.begin(), bg.end(), static_cast<std::uint8_t>(*params.background));
    return bg;
  }
  const int rank = (gray.height - 1) / 2;
  std::array<int, 256> hist{};
  for (int x = 0; x < gray.width; ++x) {
    hist.fill(0);
    for (int y = 0; y < gray.height; ++y) ++hist[gray.at(x, y)];
    int seen = 0;
    for (int v = 0; v < 256; ++v) {
      seen += hist[v];
      if (seen > rank) {
        bg[x] = static_cast<std::uint8_t>(v);
        break;
      }
    }
  }
  return bg;
}

std::vector<BBox> builtin_blob_detect(const Image& image, const BuiltinParams& params,
                                      std::string_view label) {
  if (image.empty()) return {};
  const Image gray = to_gray(image);
  const int w = gray.width;
  const int h = gray.height;
  const auto bg = column_background(gray, params);

  std::vector<std::uint8_t> fg(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      fg[static_cast<std::size_t>(y) * w + x] = std::abs(int(gray.at(x, y)) - int(bg[x])) > params.threshold;
    }
  }

  std::vector<BBox> boxes;
  std::vector<int> stack;
  for (int start = 0; start < w * h; ++start) {
    if (!fg[start]) continue;
    BBox box{start % w, start / w, start % w + 1, start / w + 1, 1.0, std::string(label)};
    long long area = 0;
    fg[start] = 0;
    stack.push_back(start);
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      ++area;
      const int x = p % w;
      const int y = p / w;
      box.x0 = std::min(box.x0, x);
      box.x1 = std::max(box.x1, x + 1);
      box.y0 = std::min(box.y0, y);
      box.y1 = std::max(box.y1, y + 1);
      const auto visit = [&](int q) {
        if (fg[q]) {
          fg[q] = 0;
          stack.push_back(q);
        }
      };
      if (x > 0) visit(p - 1);
      if (x + 1 < w) visit(p + 1);
      if (y > 0) visit(p - w);
      if (y + 1 < h) visit(p + w);
    }
    if (area >= params.min_area) boxes.push_back(std::move(box));
  }
  return boxes;
}

std::vector<BBox> Detector::detect(const Image& image, DetectionTask task) {
  if (image.empty()) throw Error(ErrorCode::InvalidCrop, "detection on an empty image");
  std::vector<BBox> out;
  for (const auto& box : raw_detect(image, task)) {
    if (auto clipped = clip_box(box, image.width, image.height)) out.push_back(std::move(*clipped));
  }
  std::stable_sort(out.begin(), out.end(), [](const BBox& a, const BBox& b) { return a.score > b.score; });
  return out;
}

namespace {
std::string_view singular_label(DetectionTask task) {
  switch (task) {
    case DetectionTask::marks: return "mark";
    case DetectionTask::vehicles: return "vehicle";
    case DetectionTask::plates: return "plate";
  }
  return "blob";
}
}  // namespace

std::vector<BBox> BuiltinDetector::raw_detect(const Image& image, DetectionTask task) {
  return builtin_blob_detect(image, params_, singular_label(task));
}

std::vector<BBox> ExternalDetector::raw_detect(const Image& image, DetectionTask task) {
  return client_->detect(image, task);
}

std::unique_ptr<Detector> make_detector(const DetectorConfig& cfg) {
  cfg.validate();
  if (cfg.backend == DetectorConfig::Backend::external) {
    return std::make_unique<ExternalDetector>(std::make_shared<ProtocolClient>(cfg.command));
  }
  return std::make_unique<BuiltinDetector>(cfg.builtin);
}

std::vector<BBox> detect(const Image& image, DetectionTask task, const DetectorConfig& cfg) {
  return make_detector(cfg)->detect(image, task);
}

}  // namespace vralpr
