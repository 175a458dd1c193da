#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "vralpr/detection.hpp"
#include "vralpr/image.hpp"

namespace vralpr {

class ProtocolClient;

inline constexpr std::string_view kPlateAlphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";

/// Fixed-size binary glyphs for the 36 plate characters.
struct GlyphFont {
  int glyph_width = 5;
  int glyph_height = 7;
  /// Blank columns between consecutive glyphs.
  int advance = 1;
  /// One bitmap per kPlateAlphabet character, row-major, 1 = ink.
  std::vector<std::vector<std::uint8_t>> bitmaps;

  const std::vector<std::uint8_t>& glyph(char c) const;
};

/// The builtin 5x7 font. Every glyph touches all four sides of its cell and
/// has ink in every column, so a clean render segments into exactly one
/// piece per character and scales back without loss.
const GlyphFont& builtin_font();

struct PlateReading {
  std::string text;
  std::vector<double> per_char_scores;
  std::string backend;
};

/// Intersection of the box with the image; InvalidCrop when empty.
Image crop_plate(const Image& vehicle_crop, const BBox& plate_bbox);

/// Global Otsu threshold of a gray image; -1 when the image is uniform.
int otsu_threshold(const Image& gray);

/// Column ranges [begin, end) of the glyph segments of a binary ink mask.
std::vector<std::pair<int, int>> segment_columns(const std::vector<std::uint8_t>& ink, int width, int height);

/// Template matcher: Otsu binarisation (dark pixels are ink), projection
/// gap segmentation, nearest-neighbour scaling to the glyph cell, and
/// Hamming-distance scoring. Throws EmptyReading when there is no ink.
PlateReading template_ocr(const Image& plate_image, const GlyphFont& font = builtin_font());

enum class PlateFormat { valid_legacy, valid_mercosul, invalid };

std::string_view to_string(PlateFormat f);

/// LLLNNNN is legacy, LLLNLNN is Mercosul.
PlateFormat validate_plate_format(std::string_view text);

class OcrBackend {
 public:
  virtual ~OcrBackend() = default;
  virtual PlateReading read(const Image& plate_image) = 0;
};

class TemplateOcr final : public OcrBackend {
 public:
  explicit TemplateOcr(const GlyphFont& font = builtin_font()) : font_(font) {}
  PlateReading read(const Image& plate_image) override { return template_ocr(plate_image, font_); }

 private:
  const GlyphFont& font_;
};

/// OCR over the external protocol. The reply text is upper-cased and
/// characters outside the plate alphabet are dropped with their scores.
class ExternalOcr final : public OcrBackend {
 public:
  explicit ExternalOcr(std::shared_ptr<ProtocolClient> client) : client_(std::move(client)) {}
  PlateReading read(const Image& plate_image) override;

 private:
  std::shared_ptr<ProtocolClient> client_;
};

}  // namespace vralpr
