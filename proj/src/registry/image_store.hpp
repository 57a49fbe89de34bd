#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <vector>

#include "registry/records.hpp"

namespace facekey::registry {

// The bulky, node-local face image store. With a directory it persists each
// raster as <imageId>.pgm (binary P5, maxval 255) and appends a manifest line
// "imageId ownerCode capturedAt source"; without one it is memory-only.
class ImageStore {
public:
  ImageStore() = default;
  explicit ImageStore(std::filesystem::path dir);

  std::uint64_t add(const codec::FaceOutputCode& owner, const faceml::FaceRaster& raster,
                    Timestamp captured_at, const std::string& source);

  // Owner's images ordered by capture time, then id.
  std::vector<FaceImageRecord> for_owner(const codec::FaceOutputCode& owner) const;
  const FaceImageRecord* find(std::uint64_t image_id) const;
  std::size_t size() const noexcept { return images_.size(); }
  const std::map<std::uint64_t, FaceImageRecord>& all() const noexcept { return images_; }
  const std::optional<std::filesystem::path>& directory() const noexcept { return dir_; }

private:
  std::optional<std::filesystem::path> dir_;
  std::map<std::uint64_t, FaceImageRecord> images_;
  std::uint64_t next_id_ = 1;
};

// Source/station labels are single manifest tokens.
void validate_label(const std::string& label, const char* what);

}  // namespace facekey::registry
