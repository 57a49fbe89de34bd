#include "registry/image_store.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "common/error.hpp"
#include "faceml/pgm.hpp"

namespace facekey::registry {

void validate_label(const std::string& label, const char* what) {
  if (label.empty() || label.size() > 128 ||
      std::any_of(label.begin(), label.end(), [](unsigned char c) { return c <= ' ' || c == 0x7F; })) {
    fail(ErrorCode::ValidationError, std::string(what) + " must be a non-empty token without whitespace");
  }
}

ImageStore::ImageStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(*dir_, ec);
  if (ec) fail(ErrorCode::StorageFailure, "cannot create image directory " + dir_->string());
  std::ifstream manifest(*dir_ / "manifest");
  std::string line;
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::uint64_t id = 0;
    std::string owner, captured, source;
    if (!(fields >> id >> owner >> captured >> source)) {
      fail(ErrorCode::StorageFailure, "corrupt image manifest line: " + line);
    }
    auto gray = faceml::read_pgm((*dir_ / (std::to_string(id) + ".pgm")).string());
    if (gray.width != gray.height) fail(ErrorCode::StorageFailure, "stored image is not square");
    FaceImageRecord rec{id, codec::parse_code(owner),
                        faceml::FaceRaster(gray.width, std::move(gray.pixels)),
                        parse_timestamp(captured), source};
    images_[id] = std::move(rec);
    next_id_ = std::max(next_id_, id + 1);
  }
}

std::uint64_t ImageStore::add(const codec::FaceOutputCode& owner, const faceml::FaceRaster& raster,
                              Timestamp captured_at, const std::string& source) {
  validate_label(source, "image source");
  const std::uint64_t id = next_id_;
  if (dir_) {
    const auto pgm = faceml::encode_pgm(raster);
    write_file_atomic((*dir_ / (std::to_string(id) + ".pgm")).string(), pgm);
    const std::string line = std::to_string(id) + " " + owner.render() + " " +
                             format_timestamp(captured_at) + " " + source + "\n";
    append_file((*dir_ / "manifest").string(), as_bytes(line));
  }
  images_[id] = FaceImageRecord{id, owner, raster, captured_at, source};
  ++next_id_;
  return id;
}

std::vector<FaceImageRecord> ImageStore::for_owner(const codec::FaceOutputCode& owner) const {
  std::vector<FaceImageRecord> out;
  for (const auto& [id, rec] : images_) {
    if (rec.owner == owner) out.push_back(rec);
  }
  std::stable_sort(out.begin(), out.end(), [](const FaceImageRecord& a, const FaceImageRecord& b) {
    return a.captured_at < b.captured_at;
  });
  return out;
}

const FaceImageRecord* ImageStore::find(std::uint64_t image_id) const {
  auto it = images_.find(image_id);
  return it == images_.end() ? nullptr : &it->second;
}

}  // namespace facekey::registry
