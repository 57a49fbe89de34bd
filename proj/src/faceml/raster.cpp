#include "faceml/raster.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "common/error.hpp"

namespace facekey::faceml {

FaceRaster::FaceRaster(std::size_t size, std::vector<double> pixels)
    : size_(size), pixels_(std::move(pixels)) {
  if (size_ == 0 || pixels_.size() != size_ * size_) {
    fail(ErrorCode::InvalidImage, "raster must hold exactly size*size pixels");
  }
  for (double v : pixels_) {
    if (!(v >= 0.0 && v <= 1.0)) fail(ErrorCode::InvalidImage, "raster intensity outside [0,1]");
  }
}

namespace {

// Source coordinate for an output sample, clamped to the valid range.
double source_coord(std::size_t dst, std::size_t dst_len, std::size_t src_len) {
  double scale = static_cast<double>(src_len) / static_cast<double>(dst_len);
  double s = (static_cast<double>(dst) + 0.5) * scale - 0.5;
  return std::clamp(s, 0.0, static_cast<double>(src_len - 1));
}

}  // namespace

FaceRaster normalize_raster(const GrayImage& raw, std::size_t raster_size) {
  if (raw.width == 0 || raw.height == 0 || raw.pixels.size() != raw.width * raw.height) {
    fail(ErrorCode::InvalidImage, "image has no pixels or inconsistent dimensions");
  }
  if (raster_size == 0) fail(ErrorCode::InvalidArgument, "raster size must be positive");
  for (double v : raw.pixels) {
    if (!std::isfinite(v)) fail(ErrorCode::InvalidImage, "non-finite intensity");
  }

  auto [lo_it, hi_it] = std::minmax_element(raw.pixels.begin(), raw.pixels.end());
  const double lo = *lo_it;
  const double range = *hi_it - lo;
  std::vector<double> unit(raw.pixels.size(), 0.0);
  if (range > 0.0) {
    std::transform(raw.pixels.begin(), raw.pixels.end(), unit.begin(),
                   [&](double v) { return std::clamp((v - lo) / range, 0.0, 1.0); });
  }

  std::vector<double> out(raster_size * raster_size);
  for (std::size_t y = 0; y < raster_size; ++y) {
    double sy = source_coord(y, raster_size, raw.height);
    auto y0 = static_cast<std::size_t>(sy);
    std::size_t y1 = std::min(y0 + 1, raw.height - 1);
    double fy = sy - static_cast<double>(y0);
    for (std::size_t x = 0; x < raster_size; ++x) {
      double sx = source_coord(x, raster_size, raw.width);
      auto x0 = static_cast<std::size_t>(sx);
      std::size_t x1 = std::min(x0 + 1, raw.width - 1);
      double fx = sx - static_cast<double>(x0);
      double top = unit[y0 * raw.width + x0] * (1 - fx) + unit[y0 * raw.width + x1] * fx;
      double bottom = unit[y1 * raw.width + x0] * (1 - fx) + unit[y1 * raw.width + x1] * fx;
      out[y * raster_size + x] = std::clamp(top * (1 - fy) + bottom * fy, 0.0, 1.0);
    }
  }
  return FaceRaster(raster_size, std::move(out));
}

}  // namespace facekey::faceml
