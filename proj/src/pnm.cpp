// Copyright 2026 The ITES Authors
// SPDX-License-Identifier: Apache-2.0

#include "ites/pnm.hpp"

#include <cctype>
#include <cmath>

#include "ites/error.hpp"
#include "ites/text.hpp"

namespace ites::pnm {
namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::string_view data) : data_(data) {}

  void skip_space_and_comments() {
    while (pos_ < data_.size()) {
      char c = data_[pos_];
      if (c == '#') {
        while (pos_ < data_.size() && data_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  long number(const char* what) {
    skip_space_and_comments();
    long v = 0;
    std::size_t start = pos_;
    while (pos_ < data_.size() && std::isdigit(static_cast<unsigned char>(data_[pos_]))) {
      v = v * 10 + (data_[pos_] - '0');
      if (v > 1'000'000) throw bad_request(std::string("PNM ") + what + " too large");
      ++pos_;
    }
    if (pos_ == start) throw bad_request(std::string("PNM header: missing ") + what);
    return v;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  void single_space() {
    if (pos_ >= data_.size() || !std::isspace(static_cast<unsigned char>(data_[pos_])))
      throw bad_request("PNM header: expected whitespace before raster");
    ++pos_;
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
};

}  // namespace

segmentation::Frame decode(std::string_view bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
    throw bad_request("not a binary PGM/PPM image (expected P5 or P6)");
  const bool colour = bytes[1] == '6';
  HeaderReader hr(bytes);
  hr.advance(2);
  const long width = hr.number("width");
  const long height = hr.number("height");
  const long maxval = hr.number("maxval");
  hr.single_space();
  if (width <= 0 || height <= 0) throw bad_request("PNM image has zero size");
  if (maxval <= 0 || maxval > 65535) throw bad_request("PNM maxval out of range");

  const std::size_t channels = colour ? 3 : 1;
  const std::size_t sample_bytes = maxval > 255 ? 2 : 1;
  const std::size_t pixels = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  const std::size_t need = pixels * channels * sample_bytes;
  if (bytes.size() - hr.pos() < need) throw bad_request("PNM raster truncated");

  const auto* raster = reinterpret_cast<const unsigned char*>(bytes.data() + hr.pos());
  auto sample = [&](std::size_t i) -> std::uint8_t {
    unsigned v = sample_bytes == 2 ? (raster[2 * i] << 8) | raster[2 * i + 1] : raster[i];
    if (maxval == 255) return static_cast<std::uint8_t>(v);
    return static_cast<std::uint8_t>(std::lround(255.0 * std::min<unsigned>(v, maxval) / maxval));
  };

  segmentation::Frame f;
  f.width = static_cast<int>(width);
  f.height = static_cast<int>(height);
  f.luma.resize(pixels);
  for (std::size_t p = 0; p < pixels; ++p) {
    f.luma[p] = colour ? segmentation::luminance_of(sample(3 * p), sample(3 * p + 1), sample(3 * p + 2))
                       : sample(p);
  }
  return f;
}

segmentation::Frame read(const std::filesystem::path& path) {
  try {
    return decode(text::read_file(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::NotFound) throw;
    throw bad_request(path.string() + ": " + e.what(), {{"path", path.string()}});
  }
}

std::string encode_pgm(const segmentation::Frame& frame) {
  std::string out = "P5\n" + std::to_string(frame.width) + " " + std::to_string(frame.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(frame.luma.data()), frame.luma.size());
  return out;
}

void write_pgm(const std::filesystem::path& path, const segmentation::Frame& frame) {
  text::write_file(path, encode_pgm(frame));
}

}  // namespace ites::pnm
