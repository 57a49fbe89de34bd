#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace facekey::faceml {

inline constexpr std::size_t kDefaultRasterSize = 64;

// Raw grayscale capture of arbitrary size and intensity range, row-major.
struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> pixels;
};

// Square, normalized face raster: size x size intensities in [0,1], row-major.
class FaceRaster {
public:
  FaceRaster() = default;
  // Throws InvalidImage unless pixels.size() == size*size and all values lie in [0,1].
  FaceRaster(std::size_t size, std::vector<double> pixels);

  std::size_t size() const noexcept { return size_; }
  std::size_t dimension() const noexcept { return pixels_.size(); }
  std::span<const double> pixels() const noexcept { return pixels_; }

  friend bool operator==(const FaceRaster&, const FaceRaster&) = default;

private:
  std::size_t size_ = 0;
  std::vector<double> pixels_;
};

// Min-max rescale to [0,1] (constant images become all zero), then bilinear
// resample to raster_size x raster_size using pixel-center alignment.
FaceRaster normalize_raster(const GrayImage& raw, std::size_t raster_size = kDefaultRasterSize);

}  // namespace facekey::faceml
