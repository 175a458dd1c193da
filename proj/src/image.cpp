#include "vralpr/image.hpp"

#include <algorithm>
#include <cstring>

#include "vralpr/error.hpp"

namespace vralpr {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::SourceNotFound: return "SourceNotFound";
    case ErrorCode::GeometryMismatch: return "GeometryMismatch";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::UnsupportedDepth: return "UnsupportedDepth";
    case ErrorCode::TruncatedFrame: return "TruncatedFrame";
    case ErrorCode::LineOutOfBounds: return "LineOutOfBounds";
    case ErrorCode::EmptyChunk: return "EmptyChunk";
    case ErrorCode::DetectorUnavailable: return "DetectorUnavailable";
    case ErrorCode::ProtocolError: return "ProtocolError";
    case ErrorCode::NoVehicleMatch: return "NoVehicleMatch";
    case ErrorCode::InvalidCrop: return "InvalidCrop";
    case ErrorCode::EmptyReading: return "EmptyReading";
    case ErrorCode::InvalidGlyph: return "InvalidGlyph";
    case ErrorCode::SceneInfeasible: return "SceneInfeasible";
    case ErrorCode::EvalError: return "EvalError";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

std::string_view to_string(PixelFormat f) {
  return f == PixelFormat::gray8 ? "gray8" : "rgb8";
}

PixelFormat pixel_format_from_string(std::string_view s) {
  if (s == "gray8") return PixelFormat::gray8;
  if (s == "rgb8") return PixelFormat::rgb8;
  throw Error(ErrorCode::UnsupportedFormat, "unknown pixel format '" + std::string(s) + "'");
}

Image::Image(int w, int h, PixelFormat f, std::uint8_t fill)
    : width(w),
      height(h),
      format(f),
      pixels(static_cast<std::size_t>(std::max(w, 0)) * std::max(h, 0) * channels(f), fill) {}

Image to_gray(const Image& img) {
  if (img.format == PixelFormat::gray8) return img;
  Image out(img.width, img.height, PixelFormat::gray8);
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t* p = img.pixels.data() + 3 * i;
    out.pixels[i] = luma(p[0], p[1], p[2]);
  }
  return out;
}

Image to_rgb(const Image& img) {
  if (img.format == PixelFormat::rgb8) return img;
  Image out(img.width, img.height, PixelFormat::rgb8);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    out.pixels[3 * i] = out.pixels[3 * i + 1] = out.pixels[3 * i + 2] = img.pixels[i];
  }
  return out;
}

Image sub_image(const Image& img, int x0, int y0, int x1, int y1) {
  Image out(x1 - x0, y1 - y0, img.format);
  const int c = img.channel_count();
  for (int y = y0; y < y1; ++y) {
    std::memcpy(out.row(y - y0), img.row(y) + static_cast<std::size_t>(x0) * c, out.row_bytes());
  }
  return out;
}

}  // namespace vralpr
