#include "faceml/pgm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "common/bytes.hpp"
#include "common/error.hpp"

namespace facekey::faceml {

namespace {

class HeaderScanner {
public:
  explicit HeaderScanner(std::span<const std::uint8_t> data) : data_(data) {}

  void skip_space_and_comments() {
    while (pos_ < data_.size()) {
      if (data_[pos_] == '#') {
        while (pos_ < data_.size() && data_[pos_] != '\n') ++pos_;
      } else if (std::isspace(data_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::uint32_t number() {
    skip_space_and_comments();
    std::uint64_t value = 0;
    std::size_t start = pos_;
    while (pos_ < data_.size() && std::isdigit(data_[pos_])) {
      value = value * 10 + (data_[pos_] - '0');
      if (value > 0xFFFFFFFFu) fail(ErrorCode::MalformedImage, "PGM header value too large");
      ++pos_;
    }
    if (pos_ == start) fail(ErrorCode::MalformedImage, "PGM header expected a number");
    return static_cast<std::uint32_t>(value);
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }

private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

}  // namespace

GrayImage decode_pgm(std::span<const std::uint8_t> data) {
  if (data.size() < 2 || data[0] != 'P' || (data[1] != '5' && data[1] != '2')) {
    fail(ErrorCode::MalformedImage, "not a PGM image (expected P5 or P2 magic)");
  }
  const bool binary = data[1] == '5';
  HeaderScanner scan(data);
  scan.advance(2);
  std::uint32_t width = scan.number();
  std::uint32_t height = scan.number();
  std::uint32_t maxval = scan.number();
  if (width == 0 || height == 0) fail(ErrorCode::MalformedImage, "PGM has zero dimension");
  if (maxval == 0 || maxval > 65535) fail(ErrorCode::MalformedImage, "PGM maxval out of range");
  const std::size_t count = static_cast<std::size_t>(width) * height;
  if (count > (std::size_t{1} << 28)) fail(ErrorCode::MalformedImage, "PGM too large");

  GrayImage image{width, height, std::vector<double>(count)};
  const double scale = 1.0 / maxval;
  if (binary) {
    // Exactly one whitespace byte separates maxval from the raster.
    if (scan.pos() >= data.size() || !std::isspace(data[scan.pos()])) {
      fail(ErrorCode::MalformedImage, "PGM header not terminated");
    }
    scan.advance(1);
    const std::size_t width_bytes = maxval < 256 ? 1 : 2;
    if (data.size() - scan.pos() < count * width_bytes) {
      fail(ErrorCode::MalformedImage, "PGM raster truncated");
    }
    const std::uint8_t* p = data.data() + scan.pos();
    for (std::size_t i = 0; i < count; ++i) {
      std::uint32_t v = width_bytes == 1 ? p[i] : (std::uint32_t{p[2 * i]} << 8) | p[2 * i + 1];
      if (v > maxval) fail(ErrorCode::MalformedImage, "PGM sample exceeds maxval");
      image.pixels[i] = v * scale;
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      std::uint32_t v = scan.number();
      if (v > maxval) fail(ErrorCode::MalformedImage, "PGM sample exceeds maxval");
      image.pixels[i] = v * scale;
    }
  }
  return image;
}

GrayImage read_pgm(const std::string& path) {
  Bytes data;
  try {
    data = read_file(path);
  } catch (const Error&) {
    fail(ErrorCode::InvalidImage, "cannot read image " + path);
  }
  return decode_pgm(data);
}

namespace {

std::vector<std::uint8_t> encode_gray(std::size_t width, std::size_t height,
                                      std::span<const double> pixels) {
  std::string header =
      "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + pixels.size());
  for (double v : pixels) {
    out.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
  }
  return out;
}

}  // namespace

std::vector<std::uint8_t> encode_pgm(const FaceRaster& raster) {
  return encode_gray(raster.size(), raster.size(), raster.pixels());
}

std::vector<std::uint8_t> encode_pgm(const GrayImage& image) {
  return encode_gray(image.width, image.height, image.pixels);
}

}  // namespace facekey::faceml
