#include "vralpr/association.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>

#include "vralpr/error.hpp"

namespace vralpr {

std::int64_t mark_to_frame_index(const Mark& mark, const ChunkSpec& chunks,
                                 std::optional<std::int64_t> last_frame) {
  std::int64_t frame = chunks.start_frame(mark.chunk_index) + (mark.bbox.y1 - 1);
  if (last_frame) frame = std::min(frame, *last_frame);
  return frame;
}

bool own_mark(const Mark& mark, const ChunkSpec& chunks) {
  const std::int64_t lo = chunks.start_frame(mark.chunk_index);
  return mark.global_bottom >= lo && mark.global_bottom < lo + chunks.stride();
}

int owning_chunk(std::int64_t frame, const ChunkSpec& chunks) {
  return static_cast<int>(frame / chunks.stride());
}

int overlap_length(int a0, int a1, int b0, int b1) {
  return std::max(0, std::min(a1, b1) - std::max(a0, b0));
}

std::size_t associate_vehicle_index(int mark_x0, int mark_x1, std::span<const BBox> vehicle_boxes,
                                    double min_overlap_ratio) {
  if (vehicle_boxes.empty()) throw Error(ErrorCode::NoVehicleMatch, "no vehicle boxes in frame");

  // Centres compared doubled to stay in integers.
  const int mark_centre2 = mark_x0 + mark_x1;
  std::size_t best = 0;
  for (std::size_t i = 1; i < vehicle_boxes.size(); ++i) {
    const auto& a = vehicle_boxes[i];
    const auto& b = vehicle_boxes[best];
    const int oa = overlap_length(mark_x0, mark_x1, a.x0, a.x1);
    const int ob = overlap_length(mark_x0, mark_x1, b.x0, b.x1);
    if (oa != ob) {
      if (oa > ob) best = i;
      continue;
    }
    const int da = std::abs(a.x0 + a.x1 - mark_centre2);
    const int db = std::abs(b.x0 + b.x1 - mark_centre2);
    if (da != db) {
      if (da < db) best = i;
      continue;
    }
    if (a.x0 < b.x0) best = i;
  }

  const int best_overlap =
      overlap_length(mark_x0, mark_x1, vehicle_boxes[best].x0, vehicle_boxes[best].x1);
  if (best_overlap <= 0 || best_overlap < min_overlap_ratio * (mark_x1 - mark_x0)) {
    throw Error(ErrorCode::NoVehicleMatch,
                "best overlap " + std::to_string(best_overlap) + " px for mark [" + std::to_string(mark_x0) +
                    ", " + std::to_string(mark_x1) + ")");
  }
  return best;
}

BBox associate_vehicle(int mark_x0, int mark_x1, std::span<const BBox> vehicle_boxes,
                       double min_overlap_ratio) {
  return vehicle_boxes[associate_vehicle_index(mark_x0, mark_x1, vehicle_boxes, min_overlap_ratio)];
}

}  // namespace vralpr
