#include "vralpr/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "vralpr/error.hpp"

namespace vralpr {

namespace {

[[noreturn]] void infeasible(const std::string& what) { throw Error(ErrorCode::SceneInfeasible, what); }

// Vertical extent [lo, hi) of a vehicle's visible rows at frame t.
std::pair<std::int64_t, std::int64_t> visible_rows(const VehicleSpec& v, std::int64_t t, int frame_height) {
  const auto top = v.top_row(t);
  return {std::max<std::int64_t>(top, 0), std::min<std::int64_t>(top + v.height, frame_height)};
}

std::int64_t interval_overlap(std::int64_t a0, std::int64_t a1, std::int64_t b0, std::int64_t b1) {
  return std::min(a1, b1) - std::max(a0, b0);
}

// Frame offsets (relative to entry) of the first and last frames in which the
// body covers line_y.
std::pair<std::int64_t, std::int64_t> line_cover_offsets(const VehicleSpec& v, int line_y) {
  VehicleSpec probe = v;
  probe.entry_frame = 0;
  std::int64_t k = 0;
  while (probe.top_row(k) + probe.height <= line_y) ++k;
  const std::int64_t first = k;
  while (probe.top_row(k + 1) <= line_y) ++k;
  return {first, k};
}

void paint(Image& gray, int x0, std::int64_t y0, int x1, std::int64_t y1, std::uint8_t value) {
  const int ya = static_cast<int>(std::clamp<std::int64_t>(y0, 0, gray.height));
  const int yb = static_cast<int>(std::clamp<std::int64_t>(y1, 0, gray.height));
  const int xa = std::clamp(x0, 0, gray.width);
  const int xb = std::clamp(x1, 0, gray.width);
  for (int y = ya; y < yb; ++y) std::fill(gray.row(y) + xa, gray.row(y) + xb, value);
}

}  // namespace

std::int64_t VehicleSpec::top_row(std::int64_t t) const {
  return static_cast<std::int64_t>(std::floor(static_cast<double>(t - entry_frame) * speed)) - height;
}

Image render_plate_glyphs(const std::string& text, const GlyphFont& font) {
  const int gw = font.glyph_width;
  const int gh = font.glyph_height;
  const int n = static_cast<int>(text.size());
  Image out(n == 0 ? 0 : n * (gw + font.advance) - font.advance, gh, PixelFormat::gray8, 0);
  for (int i = 0; i < n; ++i) {
    const auto& bitmap = font.glyph(text[static_cast<std::size_t>(i)]);
    const int ox = i * (gw + font.advance);
    for (int y = 0; y < gh; ++y) {
      for (int x = 0; x < gw; ++x) out.at(ox + x, y) = bitmap[static_cast<std::size_t>(y) * gw + x];
    }
  }
  return out;
}

std::pair<int, int> plate_image_size(std::size_t length, int scale, const GlyphFont& font) {
  const int n = static_cast<int>(length);
  const int glyphs_w = n == 0 ? 0 : n * (font.glyph_width + font.advance) - font.advance;
  return {(glyphs_w + 2 * kPlateMargin) * scale, (font.glyph_height + 2 * kPlateMargin) * scale};
}

Image render_plate_image(const std::string& text, int scale, const GlyphFont& font) {
  const Image glyphs = render_plate_glyphs(text, font);
  const auto [w, h] = plate_image_size(text.size(), scale, font);
  Image out(w, h, PixelFormat::gray8, 255);
  const int m = kPlateMargin * scale;
  for (int y = 0; y < h - 2 * m; ++y) {
    for (int x = 0; x < w - 2 * m; ++x) {
      if (glyphs.at(x / scale, y / scale)) out.at(m + x, m + y) = 0;
    }
  }
  return out;
}

std::int64_t crossing_frame(const VehicleSpec& v, int line_y) {
  const double need = static_cast<double>(line_y) + v.height;
  auto k = static_cast<std::int64_t>(std::ceil(need / v.speed));
  // Settle floating-point edge cases against the motion model itself.
  while (k > 0 && v.top_row(v.entry_frame + k - 1) >= line_y) --k;
  while (v.top_row(v.entry_frame + k) < line_y) ++k;
  return v.entry_frame + k;
}

void validate_scene(const SceneSpec& spec) {
  if (spec.frames < 0) infeasible("negative frame count");
  if (spec.width <= 0 || spec.height <= 0) infeasible("frame size must be positive");
  if (spec.background < 0 || spec.background > 255) infeasible("background outside [0, 255]");
  if (spec.line_y < 0 || spec.line_y >= spec.height) infeasible("line_y outside the frame");
  if (!(spec.noise >= 0.0 && spec.noise <= 1.0)) infeasible("noise rate outside [0, 1]");

  constexpr int kContrast = BuiltinParams{}.threshold;
  for (std::size_t i = 0; i < spec.vehicles.size(); ++i) {
    const auto& v = spec.vehicles[i];
    const std::string who = "vehicle " + std::to_string(i) + ": ";
    if (v.width <= 0 || v.height <= 0) infeasible(who + "size must be positive");
    if (v.x < 0 || v.x + v.width > spec.width) infeasible(who + "does not fit horizontally");
    if (!(v.speed > 0.0)) infeasible(who + "speed must be positive");
    if (std::abs(v.body_gray - spec.background) <= kContrast) infeasible(who + "body too close to background");
    if (v.plate_text) {
      if (v.body_gray <= kContrast || v.body_gray >= 255 - kContrast) {
        infeasible(who + "body too close to plate ink or paper");
      }
      if (v.plate_scale < 1) infeasible(who + "plate scale must be >= 1");
      render_plate_glyphs(*v.plate_text);
      const auto [pw, ph] = plate_image_size(v.plate_text->size(), v.plate_scale);
      if (v.plate_dx < 0 || v.plate_dy < 0 || v.plate_dx + pw > v.width || v.plate_dy + ph > v.height) {
        infeasible(who + "plate does not fit inside the vehicle");
      }
    }
  }

  // Touching counts as overlap: 4-adjacent bodies would merge into one blob.
  for (std::size_t i = 0; i < spec.vehicles.size(); ++i) {
    for (std::size_t j = i + 1; j < spec.vehicles.size(); ++j) {
      const auto& a = spec.vehicles[i];
      const auto& b = spec.vehicles[j];
      const auto xo = interval_overlap(a.x, a.x + a.width, b.x, b.x + b.width);
      if (xo < 0) continue;
      for (std::int64_t t = 0; t < spec.frames; ++t) {
        const auto [a0, a1] = visible_rows(a, t, spec.height);
        const auto [b0, b1] = visible_rows(b, t, spec.height);
        if (a0 >= a1 || b0 >= b1) continue;
        const auto yo = interval_overlap(a0, a1, b0, b1);
        if ((xo > 0 && yo >= 0) || (xo >= 0 && yo > 0)) {
          infeasible("vehicles " + std::to_string(i) + " and " + std::to_string(j) + " touch at frame " +
                     std::to_string(t));
        }
      }
    }
  }
}

Image render_scene_frame(const SceneSpec& spec, std::int64_t t) {
  Image gray(spec.width, spec.height, PixelFormat::gray8, static_cast<std::uint8_t>(spec.background));
  for (const auto& v : spec.vehicles) {
    const auto top = v.top_row(t);
    paint(gray, v.x, top, v.x + v.width, top + v.height, static_cast<std::uint8_t>(v.body_gray));
    if (!v.plate_text) continue;
    const Image plate = render_plate_image(*v.plate_text, v.plate_scale);
    const int px = v.x + v.plate_dx;
    const auto py = top + v.plate_dy;
    for (int y = 0; y < plate.height; ++y) {
      const auto fy = py + y;
      if (fy < 0 || fy >= spec.height) continue;
      for (int x = 0; x < plate.width; ++x) gray.at(px + x, static_cast<int>(fy)) = plate.at(x, y);
    }
  }
  if (spec.noise > 0.0) {
    SplitMix64 rng(spec.seed ^ (static_cast<std::uint64_t>(t) * 0xD1B54A32D192ED03ull));
    for (auto& p : gray.pixels) {
      if (rng.uniform() < spec.noise) p = static_cast<std::uint8_t>(255 - p);
    }
  }
  return to_rgb(gray);
}

SceneGroundTruth scene_ground_truth(const SceneSpec& spec) {
  SceneGroundTruth truth;
  for (const auto& v : spec.vehicles) {
    VehicleTruth vt;
    vt.crossing_frame = crossing_frame(v, spec.line_y);
    vt.plate_text = v.plate_text;
    const auto top = v.top_row(vt.crossing_frame);
    const BBox body{v.x, static_cast<int>(top), v.x + v.width, static_cast<int>(top + v.height), 1.0, "vehicle"};
    vt.vehicle_bbox = clip_box(body, spec.width, spec.height).value_or(body);
    if (v.plate_text) {
      const auto [pw, ph] = plate_image_size(v.plate_text->size(), v.plate_scale);
      const BBox plate{v.x + v.plate_dx, static_cast<int>(top) + v.plate_dy, v.x + v.plate_dx + pw,
                       static_cast<int>(top) + v.plate_dy + ph, 1.0, "plate"};
      vt.plate_bbox = clip_box(plate, spec.width, spec.height).value_or(plate);
    }
    truth.vehicles.push_back(std::move(vt));
  }
  return truth;
}

std::pair<std::unique_ptr<SyntheticFrameSource>, SceneGroundTruth> generate_scene(const SceneSpec& spec) {
  validate_scene(spec);
  return {std::make_unique<SyntheticFrameSource>(spec), scene_ground_truth(spec)};
}

std::string random_plate_text(SplitMix64& rng) {
  const auto letter = [&] { return static_cast<char>('A' + rng.range(0, 25)); };
  const auto digit = [&] { return static_cast<char>('0' + rng.range(0, 9)); };
  const bool mercosul = rng.next() & 1;
  std::string s;
  s += letter();
  s += letter();
  s += letter();
  s += digit();
  s += mercosul ? letter() : digit();
  s += digit();
  s += digit();
  return s;
}

SceneSpec random_traffic_scene(const TrafficParams& params) {
  constexpr int kLaneWidth = 80;
  constexpr int kMaxHeight = 48;
  constexpr int kMinSpeed = 3;
  constexpr std::int64_t kMinCrossingGap = 8;
  if (params.width < kLaneWidth || params.height <= params.line_y + kMaxHeight) {
    infeasible("traffic scenes need width >= 80 and room for a vehicle below the line");
  }
  if (params.chunk_len < 24) infeasible("traffic scenes need chunk_len >= 24");

  SplitMix64 rng(params.seed);
  SceneSpec spec;
  spec.width = params.width;
  spec.height = params.height;
  spec.line_y = params.line_y;
  spec.noise = params.noise;
  spec.seed = params.seed;

  const int lanes = params.width / kLaneWidth;
  const int chunk = params.chunk_len;
  // Same-lane spacing that keeps each vehicle alone in its lane while in view.
  const std::int64_t lane_gap = (params.height + kMaxHeight + kMinSpeed - 1) / kMinSpeed + 2;
  std::vector<std::int64_t> next_bottom(static_cast<std::size_t>(lanes));
  for (int l = 0; l < lanes; ++l) next_bottom[static_cast<std::size_t>(l)] = 20 + 13 * l;

  std::vector<std::int64_t> used_bottoms;
  std::int64_t last_bottom = 0;
  for (int i = 0; i < params.vehicles; ++i) {
    const int lane = i % lanes;
    VehicleSpec v;
    v.width = rng.range(kLaneWidth - 28, kLaneWidth - 16);
    v.x = lane * kLaneWidth + rng.range(4, kLaneWidth - v.width - 4);
    v.height = rng.range(36, kMaxHeight);
    v.speed = rng.range(kMinSpeed, 4);
    v.body_gray = (rng.next() & 1) ? rng.range(60, 90) : rng.range(170, 200);
    v.plate_text = random_plate_text(rng);
    const auto [pw, ph] = plate_image_size(v.plate_text->size(), v.plate_scale);
    v.plate_dx = (v.width - pw) / 2;
    v.plate_dy = v.height - ph - 3;

    const auto [first, last] = line_cover_offsets(v, params.line_y);
    std::int64_t bottom = next_bottom[static_cast<std::size_t>(lane)] + rng.range(0, 20);
    for (bool moved = true; moved;) {
      moved = false;
      // Keep the whole mark inside one chunk with a row of slack on each side.
      const auto chunk_start = bottom / chunk * chunk;
      if (bottom - (last - first) - 1 < chunk_start || bottom > chunk_start + chunk - 2) {
        bottom = chunk_start + chunk + (last - first) + 2;
      }
      // Crossings in different lanes stay apart in time, so matching records
      // to ground truth on frame index alone is unambiguous.
      for (const auto b : used_bottoms) {
        if (std::abs(b - bottom) < kMinCrossingGap) {
          bottom = b + kMinCrossingGap;
          moved = true;
        }
      }
    }
    used_bottoms.push_back(bottom);
    v.entry_frame = static_cast<int>(bottom - last);
    next_bottom[static_cast<std::size_t>(lane)] = bottom + lane_gap;
    last_bottom = std::max(last_bottom, bottom);
    spec.vehicles.push_back(std::move(v));
  }
  spec.frames = static_cast<int>((last_bottom + 2 + chunk - 1) / chunk * chunk);
  validate_scene(spec);
  return spec;
}

void write_scene_frames(const SceneSpec& spec, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  char name[32];
  for (int t = 0; t < spec.frames; ++t) {
    std::snprintf(name, sizeof name, "frame_%06d.ppm", t);
    write_netpbm_file(dir / name, render_scene_frame(spec, t));
  }
}

}  // namespace vralpr
