#pragma once

#include <cstdint>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <sys/types.h>
#include <vector>

#include "vralpr/detection.hpp"
#include "vralpr/image.hpp"

namespace vralpr {

// Wire protocol spoken with external backends: one JSON record per line on
// the child's stdin/stdout.
//
//   detect request : {"id", "task", "width", "height", "format", "data"}
//   detect reply   : {"id", "detections": [{"x0","y0","x1","y1","score","label"}, ...]}
//   ocr request    : {"id", "op": "ocr", "width", "height", "format", "data"}
//   ocr reply      : {"id", "text", "scores": [...]}
//
// "data" is base64 of the row-major pixels. Replies must come back in request
// order; unknown fields are ignored.

std::string base64_encode(std::span<const std::uint8_t> bytes);
/// Throws ProtocolError on characters outside the alphabet or bad padding.
std::vector<std::uint8_t> base64_decode(std::string_view text);

struct OcrReply {
  std::string text;
  std::vector<double> scores;
};

std::string encode_detect_request(std::uint64_t id, const Image& image, DetectionTask task);
std::string encode_ocr_request(std::uint64_t id, const Image& image);

/// Both parsers throw ProtocolError on malformed records or a wrong id.
std::vector<BBox> parse_detect_reply(std::string_view line, std::uint64_t expected_id);
OcrReply parse_ocr_reply(std::string_view line, std::uint64_t expected_id);

/// Image carried by a request record (used by backends and test doubles).
Image decode_request_image(std::string_view line);

/// Owns one backend subprocess (`/bin/sh -c command`) for its lifetime.
/// Calls are serialized internally, so one client may be shared by threads.
class ProtocolClient {
 public:
  explicit ProtocolClient(std::string command);
  ~ProtocolClient();

  ProtocolClient(const ProtocolClient&) = delete;
  ProtocolClient& operator=(const ProtocolClient&) = delete;

  std::vector<BBox> detect(const Image& image, DetectionTask task);
  OcrReply ocr(const Image& image);

  /// Sends one raw line and returns the raw reply line (no id checks).
  std::string exchange(const std::string& line);

  const std::string& command() const { return command_; }

 private:
  void spawn();
  void write_line(const std::string& line);
  std::string read_line();
  [[noreturn]] void fail_unavailable(const std::string& what);

  std::string command_;
  std::mutex mutex_;
  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
  std::uint64_t next_id_ = 0;
};

/// Spawns `command`, sends one request and returns the clipped, score-sorted
/// boxes. Pipelines should keep an ExternalDetector alive instead.
std::vector<BBox> external_detect(const Image& image, DetectionTask task, const std::string& command);

}  // namespace vralpr
