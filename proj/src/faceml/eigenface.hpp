#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "faceml/raster.hpp"

namespace facekey::faceml {

// Mean face plus an orthonormal eigenface basis, ordered by descending
// eigenvalue. Immutable after construction.
class EigenfaceModel {
public:
  EigenfaceModel() = default;
  // basis is row-major: components() rows of dimension() values each.
  EigenfaceModel(std::size_t raster_size, std::vector<double> mean, std::vector<double> basis,
                 std::vector<double> eigenvalues, std::uint32_t training_count);

  std::size_t raster_size() const noexcept { return raster_size_; }
  std::size_t dimension() const noexcept { return mean_.size(); }
  std::size_t components() const noexcept { return eigenvalues_.size(); }
  std::uint32_t training_count() const noexcept { return training_count_; }

  std::span<const double> mean() const noexcept { return mean_; }
  std::span<const double> eigenvalues() const noexcept { return eigenvalues_; }
  std::span<const double> component(std::size_t i) const noexcept {
    return std::span<const double>(basis_).subspan(i * dimension(), dimension());
  }
  std::span<const double> basis() const noexcept { return basis_; }

  friend bool operator==(const EigenfaceModel&, const EigenfaceModel&) = default;

private:
  std::size_t raster_size_ = 0;
  std::vector<double> mean_;
  std::vector<double> basis_;
  std::vector<double> eigenvalues_;
  std::uint32_t training_count_ = 0;
};

// Projection coefficients plus distance-from-face-space residual.
struct Embedding {
  std::vector<double> weights;
  double dffs = 0.0;

  friend bool operator==(const Embedding&, const Embedding&) = default;
};

struct ComponentSelection {
  std::size_t max_components = 0;  // 0 means M-1
  double energy_fraction = 1.0;    // smallest k reaching this cumulative eigenvalue share
};

struct TrainingResult {
  EigenfaceModel model;
  std::vector<double> spectrum;  // every Gram eigenvalue / M, descending, before truncation
};

inline constexpr double kEigenvalueFloor = 1e-10;
inline constexpr double kDefaultEnergyFraction = 0.95;

// Gram-matrix eigenface training. Throws InsufficientSamples (M < 2),
// RasterMismatch (mixed sizes) or DegenerateTrainingSet (no eigenvalue above
// the floor).
TrainingResult fit_eigenfaces(std::span<const FaceRaster> samples, ComponentSelection selection);

// Retains exactly min(k, M-1, #eigenvalues above floor) components.
EigenfaceModel train_model(std::span<const FaceRaster> samples, std::size_t k);

Embedding project(const EigenfaceModel& model, const FaceRaster& raster);

// Euclidean distance over weights. Throws EmbeddingMismatch on length mismatch.
double embedding_distance(const Embedding& a, const Embedding& b);
double weight_distance(std::span<const double> a, std::span<const double> b);

// "EFM1" then little-endian u32 R, u32 k, u32 M, f64 mean[D], f64 eigenvalues[k], f64 basis[k][D].
std::vector<std::uint8_t> encode_model(const EigenfaceModel& model);
EigenfaceModel decode_model(std::span<const std::uint8_t> data);

}  // namespace facekey::faceml
