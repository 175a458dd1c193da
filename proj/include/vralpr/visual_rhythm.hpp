#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "vralpr/image.hpp"
#include "vralpr/video_io.hpp"

namespace vralpr {

/// Horizontal sampling line: row `row_y`, columns [x_start, x_end).
/// An unset x_end means the full frame width.
struct LineSpec {
  int row_y = 800;
  int x_start = 0;
  std::optional<int> x_end;

  /// x_end resolved against a frame width.
  int resolved_end(int frame_width) const { return x_end.value_or(frame_width); }
  /// Throws LineOutOfBounds when the line does not fit the geometry.
  void check(int frame_width, int frame_height) const;
};

/// Chunking of the time axis. Chunk k starts at k * stride() and holds up to
/// chunk_len frames; consecutive chunks share `overlap` rows.
struct ChunkSpec {
  int chunk_len = 600;
  int overlap = 0;

  int stride() const { return chunk_len - overlap; }
  void validate() const;

  std::int64_t start_frame(int chunk_index) const {
    return static_cast<std::int64_t>(chunk_index) * stride();
  }
  /// Number of chunks needed to cover `frame_count` frames (0 for an empty video).
  int chunk_count(std::int64_t frame_count) const;
};

/// Time-spatial image of one chunk: row t is the sampled line of frame
/// start_frame + t.
struct VRImage {
  int chunk_index = 0;
  std::int64_t start_frame = 0;
  Image image;

  int rows() const { return image.height; }
  int width() const { return image.width; }
};

/// Exact copy of the line's pixels, (x_end - x_start) * channels bytes.
std::vector<std::uint8_t> sample_line(const Image& frame, const LineSpec& line);

/// Stacks the sampled lines of frames [start_frame, start_frame + chunk_len)
/// that exist in `source`. Uses positioned reads, so overlapping rows are
/// sampled from the same frames as the previous chunk's tail.
VRImage build_vr_chunk(FrameSource& source, const LineSpec& line, const ChunkSpec& chunks,
                       int chunk_index);

}  // namespace vralpr
