#include "vralpr/video_io.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <limits>

#include "vralpr/error.hpp"

namespace vralpr {

namespace fs = std::filesystem;

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const auto c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
      } else if (std::isspace(c)) {
        ++pos_;
      } else {
        return;
      }
    }
  }

  long long number(const char* what) {
    skip_space_and_comments();
    if (pos_ >= bytes_.size()) {
      throw Error(ErrorCode::TruncatedFrame, std::string("header ends before ") + what);
    }
    if (!std::isdigit(bytes_[pos_])) {
      throw Error(ErrorCode::UnsupportedFormat, std::string("malformed ") + what);
    }
    long long v = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_] - '0');
      if (v > std::numeric_limits<int>::max()) {
        throw Error(ErrorCode::UnsupportedFormat, std::string(what) + " too large");
      }
      ++pos_;
    }
    return v;
  }

  // Exactly one whitespace byte separates maxval from the samples.
  void single_space() {
    if (pos_ >= bytes_.size()) throw Error(ErrorCode::TruncatedFrame, "header ends after maxval");
    if (!std::isspace(bytes_[pos_])) {
      throw Error(ErrorCode::UnsupportedFormat, "expected whitespace after maxval");
    }
    ++pos_;
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_all(std::istream& in) {
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class PpmDirSource final : public FrameSource {
 public:
  explicit PpmDirSource(std::vector<fs::path> files) : files_(std::move(files)) {}
  std::size_t frame_count() const override { return files_.size(); }

 protected:
  Image load(std::size_t index) override { return read_netpbm_file(files_.at(index)); }

 private:
  std::vector<fs::path> files_;
};

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};

class RawStreamSource final : public FrameSource {
 public:
  RawStreamSource(std::unique_ptr<std::FILE, FileCloser> file, Geometry g)
      : file_(std::move(file)), geom_(g) {
    frame_bytes_ = static_cast<std::size_t>(g.width) * g.height * channels(g.format);
    std::fseek(file_.get(), 0, SEEK_END);
    const long size = std::ftell(file_.get());
    total_bytes_ = size < 0 ? 0 : static_cast<std::size_t>(size);
    // A trailing partial frame is counted so that reading it reports truncation.
    count_ = (total_bytes_ + frame_bytes_ - 1) / frame_bytes_;
  }

  std::size_t frame_count() const override { return count_; }

 protected:
  Image load(std::size_t index) override {
    Image img(geom_.width, geom_.height, geom_.format);
    const std::size_t offset = index * frame_bytes_;
    if (offset + frame_bytes_ > total_bytes_) {
      throw Error(ErrorCode::TruncatedFrame, "raw stream ends inside frame " + std::to_string(index));
    }
    std::fseek(file_.get(), static_cast<long>(offset), SEEK_SET);
    if (std::fread(img.pixels.data(), 1, frame_bytes_, file_.get()) != frame_bytes_) {
      throw Error(ErrorCode::TruncatedFrame, "short read in frame " + std::to_string(index));
    }
    return img;
  }

 private:
  std::unique_ptr<std::FILE, FileCloser> file_;
  Geometry geom_;
  std::size_t frame_bytes_ = 0;
  std::size_t total_bytes_ = 0;
  std::size_t count_ = 0;
};

// Standard input cannot seek, so it is spooled to an anonymous temporary file.
std::unique_ptr<std::FILE, FileCloser> spool_stdin() {
  std::unique_ptr<std::FILE, FileCloser> tmp(std::tmpfile());
  if (!tmp) throw Error(ErrorCode::SourceNotFound, "cannot create spool file for standard input");
  std::vector<char> buf(1 << 16);
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), stdin)) > 0) {
    std::fwrite(buf.data(), 1, n, tmp.get());
  }
  std::fflush(tmp.get());
  return tmp;
}

}  // namespace

Frame decode_netpbm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw Error(ErrorCode::UnsupportedFormat, "expected binary P5 or P6 magic");
  }
  const PixelFormat format = bytes[1] == '5' ? PixelFormat::gray8 : PixelFormat::rgb8;
  HeaderReader hdr(bytes);
  hdr.advance(2);
  const auto width = hdr.number("width");
  const auto height = hdr.number("height");
  const auto maxval = hdr.number("maxval");
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::UnsupportedFormat, "zero image dimension");
  }
  if (maxval != 255) {
    throw Error(ErrorCode::UnsupportedDepth, "maxval " + std::to_string(maxval) + " (only 255 is accepted)");
  }
  hdr.single_space();

  Image img(static_cast<int>(width), static_cast<int>(height), format);
  if (bytes.size() - hdr.pos() < img.pixels.size()) {
    throw Error(ErrorCode::TruncatedFrame, "payload holds " + std::to_string(bytes.size() - hdr.pos()) +
                                               " of " + std::to_string(img.pixels.size()) + " bytes");
  }
  std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(hdr.pos()), img.pixels.size(), img.pixels.begin());
  return Frame(std::move(img), -1);
}

std::vector<std::uint8_t> encode_netpbm(const Image& img) {
  const std::string header = std::string(img.format == PixelFormat::gray8 ? "P5" : "P6") + "\n" +
                             std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.pixels.begin(), img.pixels.end());
  return out;
}

Frame read_netpbm_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::SourceNotFound, "cannot open " + path.string());
  const auto bytes = read_all(in);
  try {
    return decode_netpbm(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

void write_netpbm_file(const fs::path& path, const Image& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::SourceNotFound, "cannot write " + path.string());
  const auto bytes = encode_netpbm(img);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void FrameSourceConfig::validate() const {
  if (path.empty()) throw Error(ErrorCode::ConfigError, "frame source path is empty");
  if (kind == SourceKind::raw_stream && (width <= 0 || height <= 0)) {
    throw Error(ErrorCode::ConfigError, "raw_stream requires positive width and height");
  }
}

Frame FrameSource::read(std::size_t index) {
  Image img = load(index);
  const Geometry g{img.width, img.height, img.format};
  if (!geometry_) {
    geometry_ = g;
  } else if (*geometry_ != g) {
    throw Error(ErrorCode::GeometryMismatch,
                "frame " + std::to_string(index) + " is " + std::to_string(g.width) + "x" +
                    std::to_string(g.height) + " " + std::string(to_string(g.format)) + ", expected " +
                    std::to_string(geometry_->width) + "x" + std::to_string(geometry_->height) + " " +
                    std::string(to_string(geometry_->format)));
  }
  return Frame(std::move(img), static_cast<std::int64_t>(index));
}

std::optional<Frame> FrameSource::next() {
  if (cursor_ >= frame_count()) return std::nullopt;
  auto f = read(cursor_);
  ++cursor_;
  return f;
}

std::vector<fs::path> list_frame_files(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension().string();
    if (ext == ".ppm" || ext == ".pgm") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
  return files;
}

std::unique_ptr<FrameSource> open_frame_source(const FrameSourceConfig& cfg) {
  cfg.validate();
  if (cfg.kind == SourceKind::ppm_dir) {
    std::error_code ec;
    if (!fs::is_directory(cfg.path, ec)) {
      throw Error(ErrorCode::SourceNotFound, "no such directory: " + cfg.path);
    }
    return std::make_unique<PpmDirSource>(list_frame_files(cfg.path));
  }

  const Geometry g{cfg.width, cfg.height, cfg.format};
  if (cfg.path == "-") return std::make_unique<RawStreamSource>(spool_stdin(), g);
  std::unique_ptr<std::FILE, FileCloser> file(std::fopen(cfg.path.c_str(), "rb"));
  if (!file) throw Error(ErrorCode::SourceNotFound, "cannot open raw stream " + cfg.path);
  return std::make_unique<RawStreamSource>(std::move(file), g);
}

}  // namespace vralpr
