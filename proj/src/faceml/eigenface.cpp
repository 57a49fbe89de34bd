#include "faceml/eigenface.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "common/bytes.hpp"
#include "common/error.hpp"
#include "faceml/jacobi.hpp"

namespace facekey::faceml {

EigenfaceModel::EigenfaceModel(std::size_t raster_size, std::vector<double> mean,
                               std::vector<double> basis, std::vector<double> eigenvalues,
                               std::uint32_t training_count)
    : raster_size_(raster_size),
      mean_(std::move(mean)),
      basis_(std::move(basis)),
      eigenvalues_(std::move(eigenvalues)),
      training_count_(training_count) {
  if (raster_size_ == 0 || mean_.size() != raster_size_ * raster_size_) {
    fail(ErrorCode::InvalidArgument, "model mean does not match raster size");
  }
  if (eigenvalues_.empty() || basis_.size() != eigenvalues_.size() * mean_.size()) {
    fail(ErrorCode::InvalidArgument, "model basis does not match component count");
  }
  if (training_count_ < 2 || eigenvalues_.size() > training_count_ - 1) {
    fail(ErrorCode::InvalidArgument, "model keeps more components than M-1");
  }
  for (std::size_t i = 0; i < eigenvalues_.size(); ++i) {
    if (!(eigenvalues_[i] > 0.0) || (i > 0 && eigenvalues_[i] > eigenvalues_[i - 1])) {
      fail(ErrorCode::InvalidArgument, "model eigenvalues must be positive and non-increasing");
    }
  }
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

// Flip so the largest-magnitude coordinate is positive; ties go to the lowest index.
void canonicalize_sign(std::span<double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (std::abs(v[i]) > std::abs(v[best])) best = i;
  }
  if (v[best] < 0) {
    for (double& x : v) x = -x;
  }
}

std::size_t choose_components(const std::vector<double>& spectrum, std::size_t usable,
                              ComponentSelection selection) {
  std::size_t k = usable;
  if (selection.max_components > 0) k = std::min(k, selection.max_components);
  if (selection.energy_fraction < 1.0) {
    const double total = std::accumulate(spectrum.begin(), spectrum.end(), 0.0);
    double running = 0.0;
    for (std::size_t i = 0; i < usable; ++i) {
      running += spectrum[i];
      if (running >= selection.energy_fraction * total) {
        k = std::min(k, i + 1);
        break;
      }
    }
  }
  return std::max<std::size_t>(k, 1);
}

}  // namespace

TrainingResult fit_eigenfaces(std::span<const FaceRaster> samples, ComponentSelection selection) {
  const std::size_t m = samples.size();
  if (m < 2) fail(ErrorCode::InsufficientSamples, "eigenface training needs at least 2 samples");
  const std::size_t raster_size = samples.front().size();
  const std::size_t d = samples.front().dimension();
  for (const auto& s : samples) {
    if (s.size() != raster_size) fail(ErrorCode::RasterMismatch, "training rasters differ in size");
  }

  std::vector<double> mean(d, 0.0);
  for (const auto& s : samples) {
    auto px = s.pixels();
    for (std::size_t j = 0; j < d; ++j) mean[j] += px[j];
  }
  for (double& x : mean) x /= static_cast<double>(m);

  // Centered columns, stored one sample per row.
  std::vector<double> centered(m * d);
  for (std::size_t i = 0; i < m; ++i) {
    auto px = samples[i].pixels();
    for (std::size_t j = 0; j < d; ++j) centered[i * d + j] = px[j] - mean[j];
  }
  auto row = [&](std::size_t i) { return std::span<const double>(centered).subspan(i * d, d); };

  std::vector<double> gram(m * m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i; j < m; ++j) {
      gram[i * m + j] = gram[j * m + i] = dot(row(i), row(j));
    }
  }

  SymmetricEigen eig = jacobi_eigen(std::move(gram), m);

  std::vector<double> spectrum(m);
  for (std::size_t i = 0; i < m; ++i) spectrum[i] = std::max(eig.values[i], 0.0) / static_cast<double>(m);

  std::size_t usable = 0;
  while (usable < m - 1 && spectrum[usable] > kEigenvalueFloor) ++usable;
  if (usable == 0) {
    fail(ErrorCode::DegenerateTrainingSet, "all training samples are identical");
  }
  const std::size_t k = choose_components(spectrum, usable, selection);

  std::vector<double> basis(k * d, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    std::span<double> u(basis.data() + c * d, d);
    for (std::size_t i = 0; i < m; ++i) {
      const double w = eig.vector_component(i, c);
      auto phi = row(i);
      for (std::size_t j = 0; j < d; ++j) u[j] += w * phi[j];
    }
    // Two passes of modified Gram-Schmidt against earlier components keep the
    // basis orthonormal to machine precision even for tiny eigenvalues.
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t p = 0; p < c; ++p) {
        std::span<const double> up(basis.data() + p * d, d);
        const double proj = dot(u, up);
        for (std::size_t j = 0; j < d; ++j) u[j] -= proj * up[j];
      }
      const double norm = std::sqrt(dot(u, u));
      for (double& x : u) x /= norm;
    }
    canonicalize_sign(u);
  }

  std::vector<double> values(spectrum.begin(), spectrum.begin() + static_cast<std::ptrdiff_t>(k));
  return TrainingResult{EigenfaceModel(raster_size, std::move(mean), std::move(basis),
                                       std::move(values), static_cast<std::uint32_t>(m)),
                        std::move(spectrum)};
}

EigenfaceModel train_model(std::span<const FaceRaster> samples, std::size_t k) {
  if (k == 0) fail(ErrorCode::InvalidArgument, "component count must be at least 1");
  return fit_eigenfaces(samples, ComponentSelection{k, 1.0}).model;
}

Embedding project(const EigenfaceModel& model, const FaceRaster& raster) {
  if (raster.size() != model.raster_size()) {
    fail(ErrorCode::RasterMismatch, "raster size " + std::to_string(raster.size()) +
                                        " does not match model size " +
                                        std::to_string(model.raster_size()));
  }
  const std::size_t d = model.dimension();
  auto px = raster.pixels();
  auto mean = model.mean();
  std::vector<double> residual(d);
  for (std::size_t j = 0; j < d; ++j) residual[j] = px[j] - mean[j];

  Embedding out;
  out.weights.resize(model.components());
  for (std::size_t c = 0; c < model.components(); ++c) {
    out.weights[c] = dot(model.component(c), residual);
  }
  for (std::size_t c = 0; c < model.components(); ++c) {
    auto u = model.component(c);
    for (std::size_t j = 0; j < d; ++j) residual[j] -= out.weights[c] * u[j];
  }
  out.dffs = std::sqrt(dot(residual, residual));
  return out;
}

double weight_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) fail(ErrorCode::EmbeddingMismatch, "embedding lengths differ");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    sum += diff * diff;
  }
  return std::sqrt(sum);
}

double embedding_distance(const Embedding& a, const Embedding& b) {
  return weight_distance(a.weights, b.weights);
}

std::vector<std::uint8_t> encode_model(const EigenfaceModel& model) {
  ByteWriter w;
  w.raw(std::string_view("EFM1"));
  w.u32(static_cast<std::uint32_t>(model.raster_size()));
  w.u32(static_cast<std::uint32_t>(model.components()));
  w.u32(model.training_count());
  for (double x : model.mean()) w.f64(x);
  for (double x : model.eigenvalues()) w.f64(x);
  for (double x : model.basis()) w.f64(x);
  return std::move(w).take();
}

EigenfaceModel decode_model(std::span<const std::uint8_t> data) {
  ByteReader r(data, ErrorCode::StorageFailure);
  auto magic = r.raw(4);
  if (!std::equal(magic.begin(), magic.end(), "EFM1")) {
    fail(ErrorCode::StorageFailure, "not an eigenface model file");
  }
  const std::size_t raster_size = r.u32();
  const std::size_t k = r.u32();
  const std::uint32_t m = r.u32();
  const std::size_t d = raster_size * raster_size;
  if (raster_size == 0 || raster_size > 4096 || k == 0 || k > m ||
      r.remaining() != 8 * (d + k + k * d)) {
    fail(ErrorCode::StorageFailure, "model file header inconsistent with payload size");
  }
  std::vector<double> mean(d), values(k), basis(k * d);
  for (double& x : mean) x = r.f64();
  for (double& x : values) x = r.f64();
  for (double& x : basis) x = r.f64();
  try {
    return EigenfaceModel(raster_size, std::move(mean), std::move(basis), std::move(values), m);
  } catch (const Error& e) {
    fail(ErrorCode::StorageFailure, std::string("model file invalid: ") + e.what());
  }
}

}  // namespace facekey::faceml
