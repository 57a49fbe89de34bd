#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "faceml/raster.hpp"

namespace facekey::faceml {

// Decodes binary (P5) or ASCII (P2) PGM. Intensities are returned scaled by
// 1/maxval. Malformed input raises MalformedImage.
GrayImage decode_pgm(std::span<const std::uint8_t> data);
GrayImage read_pgm(const std::string& path);

// Binary P5, maxval 255, header "P5\n<w> <h>\n255\n". Intensities are rounded.
std::vector<std::uint8_t> encode_pgm(const FaceRaster& raster);
std::vector<std::uint8_t> encode_pgm(const GrayImage& image);

}  // namespace facekey::faceml
