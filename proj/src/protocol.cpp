#include "vralpr/protocol.hpp"

#include <array>
#include <cctype>
#include <cerrno>
#include <csignal>
#include <cstring>
#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "vralpr/error.hpp"

namespace vralpr {

using nlohmann::json;

namespace {

constexpr std::string_view kAlphabet =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

[[noreturn]] void protocol_error(const std::string& what) { throw Error(ErrorCode::ProtocolError, what); }

json parse_record(std::string_view line, std::uint64_t expected_id) {
  json rec = json::parse(line.begin(), line.end(), nullptr, false);
  if (rec.is_discarded() || !rec.is_object()) protocol_error("reply is not a JSON object: " + std::string(line));
  const auto id = rec.find("id");
  if (id == rec.end() || !id->is_number_unsigned()) protocol_error("reply lacks an unsigned id");
  if (id->get<std::uint64_t>() != expected_id) {
    protocol_error("reply id " + std::to_string(id->get<std::uint64_t>()) + " does not match request id " +
                   std::to_string(expected_id));
  }
  return rec;
}

json image_request(std::uint64_t id, const Image& image) {
  return json{{"id", id},
              {"width", image.width},
              {"height", image.height},
              {"format", std::string(to_string(image.format))},
              {"data", base64_encode(image.pixels)}};
}

}  // namespace

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 3 <= bytes.size(); i += 3) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  if (const auto rest = bytes.size() - i; rest > 0) {
    std::uint32_t v = bytes[i] << 16;
    if (rest == 2) v |= bytes[i + 1] << 8;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += rest == 2 ? kAlphabet[(v >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  std::array<int, 256> lookup;
  lookup.fill(-1);
  for (std::size_t i = 0; i < kAlphabet.size(); ++i) lookup[static_cast<unsigned char>(kAlphabet[i])] = int(i);

  if (text.size() % 4 != 0) protocol_error("base64 length is not a multiple of 4");
  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    const bool last = i + 4 == text.size();
    int pad = 0;
    std::uint32_t v = 0;
    for (std::size_t k = 0; k < 4; ++k) {
      const char c = text[i + k];
      if (c == '=' && last && k >= 2) {
        ++pad;
        v <<= 6;
        continue;
      }
      const int d = lookup[static_cast<unsigned char>(c)];
      if (d < 0 || pad > 0) protocol_error("invalid base64 data");
      v = (v << 6) | static_cast<std::uint32_t>(d);
    }
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    if (pad < 2) out.push_back(static_cast<std::uint8_t>(v >> 8));
    if (pad < 1) out.push_back(static_cast<std::uint8_t>(v));
  }
  return out;
}

std::string encode_detect_request(std::uint64_t id, const Image& image, DetectionTask task) {
  json req = image_request(id, image);
  req["task"] = std::string(to_string(task));
  return req.dump();
}

std::string encode_ocr_request(std::uint64_t id, const Image& image) {
  json req = image_request(id, image);
  req["op"] = "ocr";
  return req.dump();
}

std::vector<BBox> parse_detect_reply(std::string_view line, std::uint64_t expected_id) {
  const json rec = parse_record(line, expected_id);
  const auto dets = rec.find("detections");
  if (dets == rec.end() || !dets->is_array()) protocol_error("reply lacks a detections array");
  std::vector<BBox> boxes;
  for (const auto& d : *dets) {
    if (!d.is_object()) protocol_error("detection is not an object");
    BBox box;
    const std::array<std::pair<const char*, int*>, 4> coords{
        {{"x0", &box.x0}, {"y0", &box.y0}, {"x1", &box.x1}, {"y1", &box.y1}}};
    for (const auto& [key, field] : coords) {
      const auto it = d.find(key);
      if (it == d.end() || !it->is_number_integer()) protocol_error(std::string("detection lacks integer ") + key);
      *field = it->get<int>();
    }
    const auto score = d.find("score");
    if (score == d.end() || !score->is_number()) protocol_error("detection lacks a numeric score");
    box.score = score->get<double>();
    if (!(box.score >= 0.0 && box.score <= 1.0)) protocol_error("detection score outside [0, 1]");
    if (const auto label = d.find("label"); label != d.end()) {
      if (!label->is_string()) protocol_error("detection label is not a string");
      box.label = label->get<std::string>();
    }
    boxes.push_back(std::move(box));
  }
  return boxes;
}

OcrReply parse_ocr_reply(std::string_view line, std::uint64_t expected_id) {
  const json rec = parse_record(line, expected_id);
  const auto text = rec.find("text");
  const auto scores = rec.find("scores");
  if (text == rec.end() || !text->is_string()) protocol_error("ocr reply lacks a text string");
  if (scores == rec.end() || !scores->is_array()) protocol_error("ocr reply lacks a scores array");
  OcrReply reply{text->get<std::string>(), {}};
  for (const auto& s : *scores) {
    if (!s.is_number()) protocol_error("ocr score is not a number");
    reply.scores.push_back(s.get<double>());
  }
  if (reply.scores.size() != reply.text.size()) protocol_error("ocr reply has one score per character required");
  return reply;
}

Image decode_request_image(std::string_view line) {
  const json req = json::parse(line.begin(), line.end(), nullptr, false);
  if (req.is_discarded() || !req.is_object()) protocol_error("request is not a JSON object");
  try {
    Image img(req.at("width").get<int>(), req.at("height").get<int>(),
              pixel_format_from_string(req.at("format").get<std::string>()));
    auto data = base64_decode(req.at("data").get<std::string>());
    if (data.size() != img.pixels.size()) protocol_error("request data size does not match geometry");
    img.pixels = std::move(data);
    return img;
  } catch (const json::exception& e) {
    protocol_error(std::string("malformed request: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// ProtocolClient
// ---------------------------------------------------------------------------

ProtocolClient::ProtocolClient(std::string command) : command_(std::move(command)) { spawn(); }

ProtocolClient::~ProtocolClient() {
  if (to_child_ >= 0) ::close(to_child_);
  if (from_child_ >= 0) ::close(from_child_);
  if (pid_ > 0) {
    int status = 0;
    ::waitpid(pid_, &status, 0);
  }
}

void ProtocolClient::spawn() {
  // Writes to a dead backend must surface as EPIPE, not kill the process.
  std::signal(SIGPIPE, SIG_IGN);
  int in_pipe[2];
  int out_pipe[2];
  if (::pipe2(in_pipe, O_CLOEXEC) != 0 || ::pipe2(out_pipe, O_CLOEXEC) != 0) {
    throw Error(ErrorCode::DetectorUnavailable, "pipe: " + std::string(std::strerror(errno)));
  }
  pid_ = ::fork();
  if (pid_ < 0) throw Error(ErrorCode::DetectorUnavailable, "fork: " + std::string(std::strerror(errno)));
  if (pid_ == 0) {
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    ::close(out_pipe[1]);
    ::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
}

void ProtocolClient::fail_unavailable(const std::string& what) {
  std::string detail = what;
  if (pid_ > 0) {
    int status = 0;
    if (::waitpid(pid_, &status, 0) == pid_) {
      pid_ = -1;
      if (WIFEXITED(status)) {
        detail += " (backend exited with status " + std::to_string(WEXITSTATUS(status)) + ")";
      } else if (WIFSIGNALED(status)) {
        detail += " (backend killed by signal " + std::to_string(WTERMSIG(status)) + ")";
      }
    }
  }
  throw Error(ErrorCode::DetectorUnavailable, "'" + command_ + "': " + detail);
}

void ProtocolClient::write_line(const std::string& line) {
  if (pid_ < 0) fail_unavailable("backend is not running");
  std::string data = line + "\n";
  std::size_t off = 0;
  while (off < data.size()) {
    const auto n = ::write(to_child_, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      fail_unavailable("write failed: " + std::string(std::strerror(errno)));
    }
    off += static_cast<std::size_t>(n);
  }
}

std::string ProtocolClient::read_line() {
  if (pid_ < 0) fail_unavailable("backend is not running");
  std::array<char, 4096> chunk;
  for (;;) {
    if (const auto nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    const auto n = ::read(from_child_, chunk.data(), chunk.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      fail_unavailable("read failed: " + std::string(std::strerror(errno)));
    }
    if (n == 0) {
      if (!buffer_.empty()) {
        std::string partial = std::move(buffer_);
        buffer_.clear();
        protocol_error("truncated reply record: " + partial);
      }
      fail_unavailable("backend closed its output");
    }
    buffer_.append(chunk.data(), static_cast<std::size_t>(n));
  }
}

std::string ProtocolClient::exchange(const std::string& line) {
  std::lock_guard lock(mutex_);
  write_line(line);
  return read_line();
}

std::vector<BBox> ProtocolClient::detect(const Image& image, DetectionTask task) {
  std::lock_guard lock(mutex_);
  const auto id = next_id_++;
  write_line(encode_detect_request(id, image, task));
  return parse_detect_reply(read_line(), id);
}

OcrReply ProtocolClient::ocr(const Image& image) {
  std::lock_guard lock(mutex_);
  const auto id = next_id_++;
  write_line(encode_ocr_request(id, image));
  return parse_ocr_reply(read_line(), id);
}

std::vector<BBox> external_detect(const Image& image, DetectionTask task, const std::string& command) {
  ExternalDetector detector(std::make_shared<ProtocolClient>(command));
  return detector.detect(image, task);
}

}  // namespace vralpr
