// Oracles and fixtures shared by the unit tests and the acceptance binary.
// Everything here is written independently of the library code it checks.
#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <unistd.h>

#include "vralpr/detection.hpp"
#include "vralpr/image.hpp"
#include "vralpr/synth.hpp"

namespace vralpr::testing {

/// Unique scratch directory, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("vralpr_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void spit(const std::filesystem::path& p, std::string_view text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

/// Levenshtein distance by plain recursion over the three edit choices.
inline std::size_t edit_distance_oracle(std::string_view a, std::string_view b) {
  if (a.empty()) return b.size();
  if (b.empty()) return a.size();
  if (a.back() == b.back()) return edit_distance_oracle(a.substr(0, a.size() - 1), b.substr(0, b.size() - 1));
  return 1 + std::min({edit_distance_oracle(a.substr(0, a.size() - 1), b),
                       edit_distance_oracle(a, b.substr(0, b.size() - 1)),
                       edit_distance_oracle(a.substr(0, a.size() - 1), b.substr(0, b.size() - 1))});
}

/// Bounding boxes of the 4-connected components of a binary mask, found by
/// breadth-first flood fill; returned as (x0, y0, x1, y1, area) tuples.
using BoxTuple = std::tuple<int, int, int, int, long long>;
inline std::set<BoxTuple> component_boxes(const std::vector<std::uint8_t>& mask, int w, int h) {
  std::vector<bool> seen(mask.size());
  std::set<BoxTuple> out;
  for (int sy = 0; sy < h; ++sy) {
    for (int sx = 0; sx < w; ++sx) {
      const auto s = static_cast<std::size_t>(sy) * w + sx;
      if (!mask[s] || seen[s]) continue;
      int x0 = sx, x1 = sx + 1, y0 = sy, y1 = sy + 1;
      long long area = 0;
      std::queue<std::pair<int, int>> q;
      q.emplace(sx, sy);
      seen[s] = true;
      while (!q.empty()) {
        const auto [x, y] = q.front();
        q.pop();
        ++area;
        x0 = std::min(x0, x);
        x1 = std::max(x1, x + 1);
        y0 = std::min(y0, y);
        y1 = std::max(y1, y + 1);
        const int dx[] = {1, -1, 0, 0};
        const int dy[] = {0, 0, 1, -1};
        for (int k = 0; k < 4; ++k) {
          const int nx = x + dx[k], ny = y + dy[k];
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          const auto n = static_cast<std::size_t>(ny) * w + nx;
          if (mask[n] && !seen[n]) {
            seen[n] = true;
            q.emplace(nx, ny);
          }
        }
      }
      out.emplace(x0, y0, x1, y1, area);
    }
  }
  return out;
}

struct Rect {
  int x0, y0, x1, y1;
  bool operator<(const Rect& o) const { return std::tie(x0, y0, x1, y1) < std::tie(o.x0, o.y0, o.x1, o.y1); }
  bool operator==(const Rect&) const = default;
};

/// Gray image with non-touching filled rectangles on a flat background.
/// Every column is covered by rectangles on fewer than half of its rows, so
/// a per-column median recovers the background exactly.
struct RectScene {
  Image image;
  std::vector<Rect> rects;
  int background = 0;
};

inline RectScene random_rect_scene(std::mt19937_64& rng, int min_side = 8) {
  auto uni = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  RectScene s;
  const int w = uni(48, 160), h = uni(48, 120);
  s.background = uni(40, 200);
  s.image = Image(w, h, PixelFormat::gray8, static_cast<std::uint8_t>(s.background));
  std::vector<int> column_cover(w, 0);
  const int wanted = uni(0, 8);
  for (int attempt = 0; attempt < 200 && static_cast<int>(s.rects.size()) < wanted; ++attempt) {
    const int rw = uni(min_side, std::min(32, w - 2)), rh = uni(min_side, std::min(24, h / 2 - 1));
    const int x0 = uni(0, w - rw), y0 = uni(0, h - rh);
    const Rect r{x0, y0, x0 + rw, y0 + rh};
    // One pixel of clearance on every side keeps components apart under 4-adjacency.
    const bool clear = std::none_of(s.rects.begin(), s.rects.end(), [&](const Rect& o) {
      return r.x0 <= o.x1 && o.x0 <= r.x1 && r.y0 <= o.y1 && o.y0 <= r.y1;
    });
    bool cover_ok = true;
    for (int x = r.x0; x < r.x1; ++x) cover_ok = cover_ok && 2 * (column_cover[x] + rh) < h;
    if (!clear || !cover_ok) continue;
    for (int x = r.x0; x < r.x1; ++x) column_cover[x] += rh;
    // Foreground far enough from the background to clear any threshold below 30.
    const int fg = s.background < 128 ? uni(s.background + 40, 255) : uni(0, s.background - 40);
    for (int y = r.y0; y < r.y1; ++y) {
      for (int x = r.x0; x < r.x1; ++x) s.image.at(x, y) = static_cast<std::uint8_t>(fg);
    }
    s.rects.push_back(r);
  }
  return s;
}

/// First frame at which a vehicle has been seen above the line and no
/// longer has any pixel above it, found by rendering a scene with only
/// that vehicle on an empty background and scanning every frame.
inline std::int64_t crossing_by_scan(const VehicleSpec& v, int line_y, int width, int height, int background,
                                     std::int64_t max_frames) {
  SceneSpec s;
  s.frames = static_cast<int>(max_frames);
  s.width = width;
  s.height = height;
  s.background = background;
  s.line_y = line_y;
  VehicleSpec bare = v;
  bare.plate_text.reset();
  s.vehicles = {bare};
  bool seen_above = false;
  for (std::int64_t t = 0; t < max_frames; ++t) {
    const Image f = render_scene_frame(s, t);
    bool above = false;
    for (int y = 0; y < line_y && !above; ++y) {
      for (int x = 0; x < width; ++x) {
        if (f.row(y)[x * 3] != background) {
          above = true;
          break;
        }
      }
    }
    if (above) seen_above = true;
    if (seen_above && !above) return t;
  }
  return -1;
}

/// Random gray or rgb image.
inline Image random_image(std::mt19937_64& rng, int w, int h, PixelFormat f) {
  Image img(w, h, f);
  std::uniform_int_distribution<int> byte(0, 255);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(byte(rng));
  return img;
}

}  // namespace vralpr::testing
