#include "faceml/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "common/error.hpp"

namespace facekey::faceml {

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

namespace {

double accept_threshold(const std::vector<Embedding>& embeddings,
                        std::span<const std::string> labels) {
  std::vector<double> intra;
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    for (std::size_t j = i + 1; j < embeddings.size(); ++j) {
      if (!labels[i].empty() && labels[i] == labels[j]) {
        intra.push_back(embedding_distance(embeddings[i], embeddings[j]));
      }
    }
  }
  if (intra.empty()) {
    for (std::size_t i = 0; i < embeddings.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < embeddings.size(); ++j) {
        if (i != j) best = std::min(best, embedding_distance(embeddings[i], embeddings[j]));
      }
      intra.push_back(best);
    }
  }
  return kAcceptMedianFactor * median(std::move(intra));
}

std::vector<double> held_out_dffs(const EigenfaceModel& model, std::span<const FaceRaster> samples,
                                  ComponentSelection selection) {
  const std::size_t m = samples.size();
  std::vector<double> dffs;
  if (m < 3) {
    for (const auto& s : samples) dffs.push_back(project(model, s).dffs);
    return dffs;
  }
  const std::size_t folds = std::min<std::size_t>(5, m);
  selection.max_components = selection.max_components == 0
                                 ? model.components()
                                 : std::min(selection.max_components, model.components());
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<FaceRaster> train, held;
    for (std::size_t i = 0; i < m; ++i) (i % folds == f ? held : train).push_back(samples[i]);
    EigenfaceModel fold_model;
    try {
      fold_model = fit_eigenfaces(train, selection).model;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateTrainingSet) throw;
      fold_model = model;
    }
    for (const auto& s : held) dffs.push_back(project(fold_model, s).dffs);
  }
  return dffs;
}

}  // namespace

Thresholds calibrate_thresholds(const EigenfaceModel& model, std::span<const FaceRaster> samples,
                                std::span<const std::string> labels, ComponentSelection selection) {
  if (labels.size() != samples.size()) {
    fail(ErrorCode::InvalidArgument, "one label per calibration sample is required");
  }
  if (samples.size() < 2) fail(ErrorCode::InsufficientSamples, "calibration needs 2 samples");

  std::vector<Embedding> embeddings;
  embeddings.reserve(samples.size());
  for (const auto& s : samples) embeddings.push_back(project(model, s));

  const auto dffs = held_out_dffs(model, samples, selection);
  const double n = static_cast<double>(dffs.size());
  const double mean = std::accumulate(dffs.begin(), dffs.end(), 0.0) / n;
  double var = 0.0;
  for (double x : dffs) var += (x - mean) * (x - mean);
  var /= n;

  return Thresholds{accept_threshold(embeddings, labels), mean + kFaceSigmaFactor * std::sqrt(var)};
}

}  // namespace facekey::faceml
