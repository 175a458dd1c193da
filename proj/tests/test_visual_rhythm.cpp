#include <doctest.h>

#include <random>

#include "support.hpp"
#include "vralpr/error.hpp"
#include "vralpr/visual_rhythm.hpp"

using namespace vralpr;

namespace {

MemoryFrameSource random_video(std::mt19937_64& rng, int frames, int w, int h, PixelFormat f) {
  std::vector<Image> v;
  for (int i = 0; i < frames; ++i) v.push_back(vralpr::testing::random_image(rng, w, h, f));
  return MemoryFrameSource(std::move(v));
}

/// Pixel (x, y) of frame `t`, read straight from the frame buffer.
std::uint8_t frame_byte(FrameSource& src, std::int64_t t, int y, int byte) {
  return src.read(static_cast<std::size_t>(t)).row(y)[byte];
}

}  // namespace

TEST_CASE("uniform frame samples to a uniform row") {
  const Image f(10, 6, PixelFormat::gray8, 128);
  LineSpec line;
  line.row_y = 2;
  CHECK(sample_line(f, line) == std::vector<std::uint8_t>(10, 128));
}

TEST_CASE("sampled row follows the column ramp") {
  Image f(300, 5, PixelFormat::gray8);
  for (int y = 0; y < 5; ++y) {
    for (int x = 0; x < 300; ++x) f.at(x, y) = static_cast<std::uint8_t>(x % 256);
  }
  LineSpec line;
  line.row_y = 3;
  const auto row = sample_line(f, line);
  REQUIRE(row.size() == 300);
  for (int x = 0; x < 300; ++x) CHECK(row[x] == x % 256);

  line.x_start = 20;
  line.x_end = 40;
  const auto part = sample_line(f, line);
  REQUIRE(part.size() == 20);
  CHECK(part.front() == 20);
  CHECK(part.back() == 39);
}

TEST_CASE("line outside the frame") {
  const Image f(8, 4, PixelFormat::gray8);
  LineSpec line;
  line.row_y = 4;
  CHECK_THROWS_AS(sample_line(f, line), Error);
  try {
    sample_line(f, line);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::LineOutOfBounds);
  }
  line.row_y = 0;
  line.x_start = 3;
  line.x_end = 3;
  CHECK_THROWS_AS(sample_line(f, line), Error);
  line.x_end = 9;
  CHECK_THROWS_AS(sample_line(f, line), Error);
}

TEST_CASE("five identical frames stack into five identical rows") {
  Image f(7, 3, PixelFormat::gray8);
  for (int x = 0; x < 7; ++x) f.at(x, 1) = static_cast<std::uint8_t>(x * 9);
  MemoryFrameSource src(std::vector<Image>(5, f));
  LineSpec line;
  line.row_y = 1;
  ChunkSpec chunks{5, 0};
  const auto vr = build_vr_chunk(src, line, chunks, 0);
  REQUIRE(vr.rows() == 5);
  for (int t = 0; t < 5; ++t) CHECK(std::equal(vr.image.row(t), vr.image.row(t) + 7, f.row(1)));
}

TEST_CASE("chunk start frames and short final chunk") {
  ChunkSpec default_chunks;
  CHECK(default_chunks.chunk_len == 600);
  CHECK(default_chunks.overlap == 0);
  CHECK(default_chunks.start_frame(1) == 600);

  std::mt19937_64 rng(5);
  auto src = random_video(rng, 7, 4, 3, PixelFormat::gray8);
  LineSpec line;
  line.row_y = 2;
  ChunkSpec chunks{5, 0};
  CHECK(chunks.chunk_count(7) == 2);
  const auto c0 = build_vr_chunk(src, line, chunks, 0);
  const auto c1 = build_vr_chunk(src, line, chunks, 1);
  CHECK(c0.rows() == 5);
  CHECK(c1.rows() == 2);
  CHECK(c1.start_frame == 5);
  CHECK(c1.image.row(0)[0] == frame_byte(src, 5, 2, 0));
  try {
    build_vr_chunk(src, line, chunks, 2);
    FAIL("expected EmptyChunk");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyChunk);
  }
}

TEST_CASE("large chunk index row 0 is the first frame of that chunk") {
  // Frames carry their own index in every pixel (mod 256).
  std::vector<Image> frames;
  for (int i = 0; i < 1300; ++i) frames.emplace_back(3, 2, PixelFormat::gray8, static_cast<std::uint8_t>(i % 256));
  MemoryFrameSource src(std::move(frames));
  LineSpec line;
  line.row_y = 1;
  const auto vr = build_vr_chunk(src, line, ChunkSpec{600, 0}, 1);
  CHECK(vr.start_frame == 600);
  CHECK(vr.image.row(0)[0] == 600 % 256);
  CHECK(vr.rows() == 600);
}

TEST_CASE("every VR byte equals its frame byte") {
  std::mt19937_64 rng(17);
  auto uni = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  for (int trial = 0; trial < 20; ++trial) {
    const int w = uni(1, 40), h = uni(1, 30), n = uni(1, 40);
    const auto fmt = uni(0, 1) ? PixelFormat::rgb8 : PixelFormat::gray8;
    auto src = random_video(rng, n, w, h, fmt);
    LineSpec line;
    line.row_y = uni(0, h - 1);
    line.x_start = uni(0, w - 1);
    line.x_end = uni(line.x_start + 1, w);
    const int T = uni(1, 12);
    const ChunkSpec chunks{T, uni(0, T - 1)};
    const int c = channels(fmt);
    for (int k = 0; k < chunks.chunk_count(n); ++k) {
      const auto vr = build_vr_chunk(src, line, chunks, k);
      CHECK(vr.image.format == fmt);
      CHECK(vr.width() == *line.x_end - line.x_start);
      for (int t = 0; t < vr.rows(); ++t) {
        for (int b = 0; b < vr.width() * c; ++b) {
          REQUIRE(vr.image.row(t)[b] == frame_byte(src, vr.start_frame + t, line.row_y, line.x_start * c + b));
        }
      }
    }
  }
}

TEST_CASE("overlapping rows repeat the previous chunk's tail") {
  std::mt19937_64 rng(23);
  auto src = random_video(rng, 50, 9, 4, PixelFormat::rgb8);
  LineSpec line;
  line.row_y = 3;
  const ChunkSpec chunks{10, 4};
  const int n = chunks.chunk_count(50);
  for (int k = 0; k + 1 < n; ++k) {
    const auto a = build_vr_chunk(src, line, chunks, k);
    const auto b = build_vr_chunk(src, line, chunks, k + 1);
    const int shared = std::min(chunks.overlap, b.rows());
    if (a.rows() < chunks.chunk_len) continue;
    for (int r = 0; r < shared; ++r) {
      CHECK(std::equal(b.image.row(r), b.image.row(r) + b.image.row_bytes(),
                       a.image.row(a.rows() - chunks.overlap + r)));
    }
  }
}

TEST_CASE("chunk spec validation") {
  CHECK_THROWS_AS((ChunkSpec{0, 0}.validate()), Error);
  CHECK_THROWS_AS((ChunkSpec{5, 5}.validate()), Error);
  CHECK_THROWS_AS((ChunkSpec{5, -1}.validate()), Error);
  CHECK_NOTHROW((ChunkSpec{5, 4}.validate()));
  CHECK(ChunkSpec{600, 100}.stride() == 500);
  CHECK(ChunkSpec{600, 0}.chunk_count(0) == 0);
  CHECK(ChunkSpec{600, 0}.chunk_count(600) == 1);
  CHECK(ChunkSpec{600, 0}.chunk_count(601) == 2);
}
