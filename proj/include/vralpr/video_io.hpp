#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vralpr/image.hpp"

namespace vralpr {

// ---------------------------------------------------------------------------
// Netpbm
// ---------------------------------------------------------------------------

/// Decodes binary P5 (gray8) or P6 (rgb8) with maxval 255. Header comments
/// are allowed anywhere whitespace is. The returned frame has index -1.
Frame decode_netpbm(std::span<const std::uint8_t> bytes);

/// P5 for gray8, P6 for rgb8, single-space header, maxval 255.
std::vector<std::uint8_t> encode_netpbm(const Image& img);

Frame read_netpbm_file(const std::filesystem::path& path);
void write_netpbm_file(const std::filesystem::path& path, const Image& img);

// ---------------------------------------------------------------------------
// Frame sources
// ---------------------------------------------------------------------------

enum class SourceKind { ppm_dir, raw_stream };

struct FrameSourceConfig {
  SourceKind kind = SourceKind::ppm_dir;
  /// Directory for ppm_dir; file path or "-" (standard input) for raw_stream.
  std::string path;
  // Geometry of a raw stream; ignored for ppm_dir.
  int width = 0;
  int height = 0;
  PixelFormat format = PixelFormat::gray8;

  void validate() const;
};

struct Geometry {
  int width = 0;
  int height = 0;
  PixelFormat format = PixelFormat::gray8;
  bool operator==(const Geometry&) const = default;
};

/// Ordered frame sequence with a sequential cursor (next) and positioned
/// reads (read). The first decoded frame fixes the geometry; any later frame
/// of a different geometry raises GeometryMismatch. Not thread-safe.
class FrameSource {
 public:
  virtual ~FrameSource() = default;

  virtual std::size_t frame_count() const = 0;

  /// Frame at a global index, index < frame_count().
  Frame read(std::size_t index);

  /// Frame under the cursor, advancing it; nullopt at the end.
  std::optional<Frame> next();
  void seek(std::size_t index) { cursor_ = index; }
  std::size_t position() const { return cursor_; }

  /// Geometry fixed by the first frame read so far.
  const std::optional<Geometry>& geometry() const { return geometry_; }

 protected:
  virtual Image load(std::size_t index) = 0;

 private:
  std::size_t cursor_ = 0;
  std::optional<Geometry> geometry_;
};

/// Frames held in memory; used by tests and for pre-decoded input.
class MemoryFrameSource final : public FrameSource {
 public:
  explicit MemoryFrameSource(std::vector<Image> frames) : frames_(std::move(frames)) {}
  std::size_t frame_count() const override { return frames_.size(); }

 protected:
  Image load(std::size_t index) override { return frames_.at(index); }

 private:
  std::vector<Image> frames_;
};

/// Frame files in a directory are ordered by the byte order of their
/// filenames, so numbered files need zero padding (frame_000001.ppm).
std::unique_ptr<FrameSource> open_frame_source(const FrameSourceConfig& cfg);

/// Lists the .ppm/.pgm files of a directory in frame order.
std::vector<std::filesystem::path> list_frame_files(const std::filesystem::path& dir);

}  // namespace vralpr
