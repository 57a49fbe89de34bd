#pragma once

#include <span>
#include <string>

#include "faceml/eigenface.hpp"

namespace facekey::faceml {

// Matching thresholds derived from training data.
struct Thresholds {
  double accept = 0.0;  // max embedding distance for a recognized match
  double face = 0.0;    // max DFFS for a raster to count as a face
};

inline constexpr double kAcceptMedianFactor = 0.6;
inline constexpr double kFaceSigmaFactor = 3.0;

// accept = 0.6 * median pairwise distance between training embeddings that
// share a label (falls back to nearest-neighbour distances when no label has
// two samples). face = mean + 3 sigma of DFFS measured on held-out folds, each
// fold projected through a model trained without it.
Thresholds calibrate_thresholds(const EigenfaceModel& model, std::span<const FaceRaster> samples,
                                std::span<const std::string> labels, ComponentSelection selection);

double median(std::vector<double> values);

}  // namespace facekey::faceml
