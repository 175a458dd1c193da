#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "vralpr/detection.hpp"
#include "vralpr/visual_rhythm.hpp"

namespace vralpr {

/// Global frame at which the mark's vehicle has entirely crossed the line:
/// chunk_index * stride + (bbox.y1 - 1), clamped to last_frame when given.
std::int64_t mark_to_frame_index(const Mark& mark, const ChunkSpec& chunks,
                                 std::optional<std::int64_t> last_frame = std::nullopt);

/// Chunk k owns the marks whose global bottom falls in [k*S, k*S + S). The
/// windows partition the timeline, so with overlapping chunks every crossing
/// is reported by exactly one chunk.
bool own_mark(const Mark& mark, const ChunkSpec& chunks);

/// Index of the chunk whose ownership window contains `frame`.
int owning_chunk(std::int64_t frame, const ChunkSpec& chunks);

/// Length of the intersection of [a0, a1) and [b0, b1), 0 when disjoint.
int overlap_length(int a0, int a1, int b0, int b1);

/// Picks the vehicle whose x-interval overlaps the mark's the most.
/// `mark_x0`/`mark_x1` are in frame columns (VR column + line x_start).
/// Ties go to the box whose centre is closest to the mark's, then to the
/// smaller x0. Throws NoVehicleMatch when the best overlap is below
/// min_overlap_ratio * mark width or there are no boxes.
std::size_t associate_vehicle_index(int mark_x0, int mark_x1, std::span<const BBox> vehicle_boxes,
                                    double min_overlap_ratio = 0.25);

BBox associate_vehicle(int mark_x0, int mark_x1, std::span<const BBox> vehicle_boxes,
                       double min_overlap_ratio = 0.25);

}  // namespace vralpr
