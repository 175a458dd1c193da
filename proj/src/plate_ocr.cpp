#include "vralpr/plate_ocr.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "vralpr/error.hpp"
#include "vralpr/protocol.hpp"

namespace vralpr {

Image crop_plate(const Image& vehicle_crop, const BBox& plate_bbox) {
  const auto clipped = clip_box(plate_bbox, vehicle_crop.width, vehicle_crop.height);
  if (plate_bbox.x0 >= plate_bbox.x1 || plate_bbox.y0 >= plate_bbox.y1 || !clipped) {
    throw Error(ErrorCode::InvalidCrop, "plate box (" + std::to_string(plate_bbox.x0) + "," +
                                            std::to_string(plate_bbox.y0) + "," + std::to_string(plate_bbox.x1) +
                                            "," + std::to_string(plate_bbox.y1) + ") selects no pixels");
  }
  return sub_image(vehicle_crop, clipped->x0, clipped->y0, clipped->x1, clipped->y1);
}

int otsu_threshold(const Image& gray) {
  std::array<double, 256> hist{};
  for (const auto v : gray.pixels) hist[v] += 1.0;
  const double total = static_cast<double>(gray.pixels.size());
  double sum_all = 0.0;
  for (int v = 0; v < 256; ++v) sum_all += v * hist[v];

  double w0 = 0.0;
  double sum0 = 0.0;
  double best = 0.0;
  int best_t = -1;
  for (int t = 0; t < 256; ++t) {
    w0 += hist[t];
    sum0 += t * hist[t];
    const double w1 = total - w0;
    if (w0 == 0.0 || w1 == 0.0) continue;
    const double diff = sum0 / w0 - (sum_all - sum0) / w1;
    const double between = w0 * w1 * diff * diff;
    if (between > best) {
      best = between;
      best_t = t;
    }
  }
  return best_t;
}

std::vector<std::pair<int, int>> segment_columns(const std::vector<std::uint8_t>& ink, int width, int height) {
  std::vector<std::pair<int, int>> segments;
  int begin = -1;
  for (int x = 0; x <= width; ++x) {
    bool has_ink = false;
    if (x < width) {
      for (int y = 0; y < height && !has_ink; ++y) has_ink = ink[static_cast<std::size_t>(y) * width + x];
    }
    if (has_ink && begin < 0) begin = x;
    if (!has_ink && begin >= 0) {
      segments.emplace_back(begin, x);
      begin = -1;
    }
  }
  return segments;
}

PlateReading template_ocr(const Image& plate_image, const GlyphFont& font) {
  const Image gray = to_gray(plate_image);
  const int t = otsu_threshold(gray);
  if (gray.empty() || t < 0) throw Error(ErrorCode::EmptyReading, "plate image has no foreground");

  const int w = gray.width;
  const int h = gray.height;
  std::vector<std::uint8_t> ink(gray.pixels.size());
  for (std::size_t i = 0; i < ink.size(); ++i) ink[i] = gray.pixels[i] <= t;

  const int gw = font.glyph_width;
  const int gh = font.glyph_height;
  PlateReading reading;
  reading.backend = "template";
  std::vector<std::uint8_t> cell(static_cast<std::size_t>(gw) * gh);
  for (const auto& [x0, x1] : segment_columns(ink, w, h)) {
    int y0 = h;
    int y1 = 0;
    for (int y = 0; y < h; ++y) {
      for (int x = x0; x < x1; ++x) {
        if (ink[static_cast<std::size_t>(y) * w + x]) {
          y0 = std::min(y0, y);
          y1 = std::max(y1, y + 1);
        }
      }
    }
    const int sw = x1 - x0;
    const int sh = y1 - y0;
    // Nearest neighbour: cell pixel i samples source pixel floor((2i+1) * s / (2g)).
    for (int cy = 0; cy < gh; ++cy) {
      const int sy = y0 + (2 * cy + 1) * sh / (2 * gh);
      for (int cx = 0; cx < gw; ++cx) {
        const int sx = x0 + (2 * cx + 1) * sw / (2 * gw);
        cell[static_cast<std::size_t>(cy) * gw + cx] = ink[static_cast<std::size_t>(sy) * w + sx];
      }
    }

    std::size_t best_glyph = 0;
    int best_distance = gw * gh + 1;
    for (std::size_t g = 0; g < font.bitmaps.size(); ++g) {
      int distance = 0;
      for (std::size_t i = 0; i < cell.size(); ++i) distance += cell[i] != font.bitmaps[g][i];
      if (distance < best_distance) {
        best_distance = distance;
        best_glyph = g;
      }
    }
    reading.text += kPlateAlphabet[best_glyph];
    reading.per_char_scores.push_back(1.0 - static_cast<double>(best_distance) / (gw * gh));
  }
  return reading;
}

std::string_view to_string(PlateFormat f) {
  switch (f) {
    case PlateFormat::valid_legacy: return "valid_legacy";
    case PlateFormat::valid_mercosul: return "valid_mercosul";
    case PlateFormat::invalid: return "invalid";
  }
  return "invalid";
}

PlateFormat validate_plate_format(std::string_view text) {
  const auto matches = [&](std::string_view pattern) {
    if (text.size() != pattern.size()) return false;
    for (std::size_t i = 0; i < text.size(); ++i) {
      const char c = text[i];
      const bool ok = pattern[i] == 'L' ? (c >= 'A' && c <= 'Z') : (c >= '0' && c <= '9');
      if (!ok) return false;
    }
    return true;
  };
  if (matches("LLLNNNN")) return PlateFormat::valid_legacy;
  if (matches("LLLNLNN")) return PlateFormat::valid_mercosul;
  return PlateFormat::invalid;
}

PlateReading ExternalOcr::read(const Image& plate_image) {
  const OcrReply reply = client_->ocr(plate_image);
  PlateReading reading;
  reading.backend = "external:" + client_->command();
  for (std::size_t i = 0; i < reply.text.size(); ++i) {
    const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(reply.text[i])));
    if (kPlateAlphabet.find(c) == std::string_view::npos) continue;
    reading.text += c;
    reading.per_char_scores.push_back(std::clamp(reply.scores[i], 0.0, 1.0));
  }
  return reading;
}

}  // namespace vralpr
