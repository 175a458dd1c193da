#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace vralpr {

enum class PixelFormat { gray8, rgb8 };

constexpr int channels(PixelFormat f) { return f == PixelFormat::gray8 ? 1 : 3; }
std::string_view to_string(PixelFormat f);
PixelFormat pixel_format_from_string(std::string_view s);

/// Row-major 8-bit image. pixels.size() == width * height * channels(format).
struct Image {
  int width = 0;
  int height = 0;
  PixelFormat format = PixelFormat::gray8;
  std::vector<std::uint8_t> pixels;

  Image() = default;
  Image(int w, int h, PixelFormat f, std::uint8_t fill = 0);

  int channel_count() const { return channels(format); }
  std::size_t row_bytes() const { return static_cast<std::size_t>(width) * channel_count(); }
  bool empty() const { return width <= 0 || height <= 0; }

  std::uint8_t* row(int y) { return pixels.data() + static_cast<std::size_t>(y) * row_bytes(); }
  const std::uint8_t* row(int y) const {
    return pixels.data() + static_cast<std::size_t>(y) * row_bytes();
  }
  std::span<const std::uint8_t> row_span(int y) const { return {row(y), row_bytes()}; }

  // Gray accessors; only meaningful for gray8 images.
  std::uint8_t at(int x, int y) const { return row(y)[x]; }
  std::uint8_t& at(int x, int y) { return row(y)[x]; }

  bool operator==(const Image&) const = default;
};

/// A decoded video frame with its global 0-based temporal index.
struct Frame : Image {
  std::int64_t index = -1;

  Frame() = default;
  Frame(Image img, std::int64_t idx) : Image(std::move(img)), index(idx) {}
};

/// round(0.299 R + 0.587 G + 0.114 B), computed in integers with halves
/// rounded up.
constexpr std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  return static_cast<std::uint8_t>((299u * r + 587u * g + 114u * b + 500u) / 1000u);
}

/// Returns a gray8 copy; gray8 inputs are returned unchanged.
Image to_gray(const Image& img);

/// Gray image replicated into three channels.
Image to_rgb(const Image& img);

/// Copies the region [x0,x1) x [y0,y1); the caller guarantees it lies inside
/// the image and is non-empty.
Image sub_image(const Image& img, int x0, int y0, int x1, int y1);

}  // namespace vralpr
