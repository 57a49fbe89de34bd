#pragma once

#include <functional>
#include <memory>

#include "federation/replication.hpp"
#include "registry/code_index.hpp"
#include "registry/image_store.hpp"

namespace facekey::registry {

struct LookupResult {
  IdentityRecord identity;
  std::vector<FaceImageRecord> images;  // ascending capture time
};

// Closed-set ranking entry: an identity and its min distance to a query.
struct RankedIdentity {
  const IdentityRecord* identity = nullptr;
  double distance = 0.0;
};

// Enrollment and identification over the code index and the local image
// store. Every mutation is built as a replication entry, applied locally
// through the same path remote entries take, then committed to the log.
class Registry {
public:
  Registry(federation::Replicator& replicator, ImageStore images);

  void set_model(std::shared_ptr<const faceml::EigenfaceModel> model, MatchSettings settings);
  const faceml::EigenfaceModel& model() const;
  bool has_model() const noexcept { return model_ != nullptr; }
  const MatchSettings& settings() const noexcept { return settings_; }
  void set_settings(MatchSettings settings) { settings_ = settings; }

  // Codes the registry must not hand out (the suspect index's codes).
  void set_reserved_codes(std::function<bool(const codec::FaceOutputCode&)> reserved) {
    reserved_ = std::move(reserved);
  }

  codec::FaceOutputCode enroll(const faceml::FaceRaster& raster, const PersonalData& personal,
                               Timestamp now, const std::string& source = "enroll");
  // Enrolls a known embedding with its evidence raster, skipping the face and
  // duplicate checks. `avoid` is a code that must not be assigned.
  codec::FaceOutputCode enroll_embedding(const faceml::Embedding& embedding,
                                         const faceml::FaceRaster& raster,
                                         const PersonalData& personal, Timestamp now,
                                         const std::string& source,
                                         std::optional<codec::FaceOutputCode> avoid);

  MatchResult identify(const faceml::FaceRaster& raster) const;
  MatchResult identify_embedding(const faceml::Embedding& embedding) const;

  std::uint64_t append_face_image(const codec::FaceOutputCode& code,
                                  const faceml::FaceRaster& raster, Timestamp now,
                                  const std::string& source = "append");
  LookupResult lookup(const codec::FaceOutputCode& code) const;
  IdentityRecord update_personal(const codec::FaceOutputCode& code, const PersonalData& personal,
                                 Timestamp now);

  // All active identities by ascending distance (ties: code text).
  std::vector<RankedIdentity> rank(const faceml::Embedding& embedding) const;

  federation::ApplyOutcome apply(const federation::ReplicationEntry& entry,
                                 std::span<const std::uint8_t> body) {
    return index_.apply(entry, body);
  }

  const CodeIndex& index() const noexcept { return index_; }
  const ImageStore& images() const noexcept { return images_; }

private:
  const IdentityRecord& require_active(const codec::FaceOutputCode& code) const;
  std::uint16_t allocate_seq(std::uint64_t bits, std::optional<codec::FaceOutputCode> avoid) const;

  federation::Replicator& replicator_;
  CodeIndex index_;
  ImageStore images_;
  std::shared_ptr<const faceml::EigenfaceModel> model_;
  MatchSettings settings_;
  std::function<bool(const codec::FaceOutputCode&)> reserved_;
};

double min_distance(const IdentityRecord& identity, const faceml::Embedding& query);

}  // namespace facekey::registry
