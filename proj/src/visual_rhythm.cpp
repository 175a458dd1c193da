#include "vralpr/visual_rhythm.hpp"

#include <algorithm>
#include <cstring>
#include <string>

#include "vralpr/error.hpp"

namespace vralpr {

void LineSpec::check(int frame_width, int frame_height) const {
  const int end = resolved_end(frame_width);
  if (row_y < 0 || row_y >= frame_height) {
    throw Error(ErrorCode::LineOutOfBounds, "row " + std::to_string(row_y) + " outside frame height " +
                                                std::to_string(frame_height));
  }
  if (x_start < 0 || x_start >= end || end > frame_width) {
    throw Error(ErrorCode::LineOutOfBounds, "columns [" + std::to_string(x_start) + ", " +
                                                std::to_string(end) + ") invalid for width " +
                                                std::to_string(frame_width));
  }
}

void ChunkSpec::validate() const {
  if (chunk_len < 1) throw Error(ErrorCode::ConfigError, "chunk length must be >= 1");
  if (overlap < 0 || overlap >= chunk_len) {
    throw Error(ErrorCode::ConfigError, "overlap must satisfy 0 <= overlap < chunk length");
  }
}

int ChunkSpec::chunk_count(std::int64_t frame_count) const {
  if (frame_count <= 0) return 0;
  return static_cast<int>((frame_count + stride() - 1) / stride());
}

std::vector<std::uint8_t> sample_line(const Image& frame, const LineSpec& line) {
  line.check(frame.width, frame.height);
  const int c = frame.channel_count();
  const auto* begin = frame.row(line.row_y) + static_cast<std::size_t>(line.x_start) * c;
  const auto* end = frame.row(line.row_y) + static_cast<std::size_t>(line.resolved_end(frame.width)) * c;
  return {begin, end};
}

VRImage build_vr_chunk(FrameSource& source, const LineSpec& line, const ChunkSpec& chunks,
                       int chunk_index) {
  chunks.validate();
  const std::int64_t start = chunks.start_frame(chunk_index);
  const auto total = static_cast<std::int64_t>(source.frame_count());
  if (chunk_index < 0 || start >= total) {
    throw Error(ErrorCode::EmptyChunk, "chunk " + std::to_string(chunk_index) + " starts at frame " +
                                           std::to_string(start) + " of " + std::to_string(total));
  }
  const int rows = static_cast<int>(std::min<std::int64_t>(chunks.chunk_len, total - start));

  VRImage vr;
  vr.chunk_index = chunk_index;
  vr.start_frame = start;
  for (int t = 0; t < rows; ++t) {
    const Frame frame = source.read(static_cast<std::size_t>(start + t));
    const auto samples = sample_line(frame, line);
    if (t == 0) {
      vr.image = Image(line.resolved_end(frame.width) - line.x_start, rows, frame.format);
    }
    std::memcpy(vr.image.row(t), samples.data(), samples.size());
  }
  source.seek(static_cast<std::size_t>(start + rows));
  return vr;
}

}  // namespace vralpr
