#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vralpr/detection.hpp"
#include "vralpr/image.hpp"
#include "vralpr/plate_ocr.hpp"
#include "vralpr/video_io.hpp"

namespace vralpr {

/// SplitMix64: state += 0x9E3779B97F4A7C15, then two xor-shift-multiply
/// rounds. All scene randomness comes from this generator.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }
  /// Uniform in [0, 1) from the top 53 bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  /// Uniform integer in [lo, hi].
  int range(int lo, int hi) { return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1)); }

 private:
  std::uint64_t state_;
};

struct VehicleSpec {
  int x = 0;  ///< left column
  int width = 0;
  int height = 0;
  double speed = 1.0;   ///< rows per frame, downward
  int entry_frame = 0;  ///< frame at which the leading edge reaches row 0
  int body_gray = 200;
  std::optional<std::string> plate_text;
  int plate_dx = 0;  ///< plate position inside the vehicle
  int plate_dy = 0;
  int plate_scale = 1;  ///< pixels per glyph dot

  /// Top row at frame t: floor((t - entry_frame) * speed) - height.
  /// The body covers rows [top_row(t), top_row(t) + height).
  std::int64_t top_row(std::int64_t t) const;
};

struct SceneSpec {
  int frames = 0;
  int width = 320;
  int height = 240;
  int background = 128;
  int line_y = 100;
  std::vector<VehicleSpec> vehicles;
  double noise = 0.0;  ///< probability that a pixel is inverted (v -> 255 - v)
  std::uint64_t seed = 0;
};

struct VehicleTruth {
  std::int64_t crossing_frame = 0;
  std::optional<std::string> plate_text;
  BBox vehicle_bbox;  ///< at crossing_frame, clipped to the frame
  std::optional<BBox> plate_bbox;
};

struct SceneGroundTruth {
  std::vector<VehicleTruth> vehicles;  ///< in SceneSpec order
};

/// Paper-white margin around the glyphs of a plate patch, in pixels.
inline constexpr int kPlateMargin = 2;

/// Binary render (1 = ink) of `text`, glyphs separated by font.advance blank
/// columns: (len * (W + advance) - advance) x H. InvalidGlyph on characters
/// outside the plate alphabet.
Image render_plate_glyphs(const std::string& text, const GlyphFont& font = builtin_font());

/// Gray plate patch: paper 255, ink 0, each glyph dot scale x scale pixels,
/// kPlateMargin (times scale) of paper on every side.
Image render_plate_image(const std::string& text, int scale = 1, const GlyphFont& font = builtin_font());

/// Width and height of render_plate_image for a text length.
std::pair<int, int> plate_image_size(std::size_t length, int scale, const GlyphFont& font = builtin_font());

/// First frame t >= entry_frame whose top row is at or below line_y.
std::int64_t crossing_frame(const VehicleSpec& v, int line_y);

/// Throws SceneInfeasible when the spec breaks its invariants or two
/// vehicles touch or overlap in any frame.
void validate_scene(const SceneSpec& spec);

/// Renders frame t (gray values replicated into rgb8).
Image render_scene_frame(const SceneSpec& spec, std::int64_t t);

SceneGroundTruth scene_ground_truth(const SceneSpec& spec);

/// Frame source rendering each frame on demand.
class SyntheticFrameSource final : public FrameSource {
 public:
  explicit SyntheticFrameSource(SceneSpec spec) : spec_(std::move(spec)) {}
  std::size_t frame_count() const override { return static_cast<std::size_t>(spec_.frames); }
  const SceneSpec& spec() const { return spec_; }

 protected:
  Image load(std::size_t index) override { return render_scene_frame(spec_, static_cast<std::int64_t>(index)); }

 private:
  SceneSpec spec_;
};

std::pair<std::unique_ptr<SyntheticFrameSource>, SceneGroundTruth> generate_scene(const SceneSpec& spec);

/// Parameters of a randomly laid out multi-lane scene.
struct TrafficParams {
  std::uint64_t seed = 1;
  int vehicles = 20;
  int width = 320;
  int height = 240;
  int line_y = 100;
  /// Crossings are kept clear of multiples of this, so no mark straddles a
  /// chunk boundary when chunks do not overlap.
  int chunk_len = 60;
  double noise = 0.0;
};

/// Lays out vehicles in vertical lanes so that each vehicle is the only one
/// of its lane in view when it crosses the line. Feasible by construction.
SceneSpec random_traffic_scene(const TrafficParams& params);

/// Random 7-character plate, legacy or Mercosul layout.
std::string random_plate_text(SplitMix64& rng);

/// Writes frame_000000.ppm ... into `dir` (created if missing).
void write_scene_frames(const SceneSpec& spec, const std::filesystem::path& dir);

}  // namespace vralpr
