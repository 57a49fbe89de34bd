#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "codec/face_code.hpp"
#include "common/bytes.hpp"
#include "common/time.hpp"
#include "faceml/eigenface.hpp"
#include "faceml/raster.hpp"

namespace facekey::registry {

struct PersonalData {
  std::string name;
  std::string address;
  std::string phone;
  std::map<std::string, std::string> attributes;

  friend bool operator==(const PersonalData&, const PersonalData&) = default;
};

// Throws ValidationError when the name is empty.
void validate_personal(const PersonalData& personal);
Bytes encode_personal(const PersonalData& personal);
PersonalData decode_personal(std::span<const std::uint8_t> data);

// Origin-assigned identity of a record: the (node, sequence) of the entry
// that created it. Stable across replicas even when code texts collide.
struct RecordId {
  std::string origin;
  std::uint64_t seq = 0;

  friend auto operator<=>(const RecordId&, const RecordId&) = default;
  std::string str() const { return origin + "/" + std::to_string(seq); }
};

// Last-writer-wins ordering key: (timestamp, origin node, origin sequence).
struct Stamp {
  Timestamp at;
  std::string origin;
  std::uint64_t seq = 0;

  friend auto operator<=>(const Stamp&, const Stamp&) = default;
};

struct TaggedEmbedding {
  Stamp stamp;
  faceml::Embedding embedding;
};

struct IdentityRecord {
  RecordId id;
  codec::FaceOutputCode code;
  std::string code_text;
  std::vector<TaggedEmbedding> embeddings;  // sorted by stamp
  PersonalData personal;
  Stamp personal_stamp;
  Timestamp created_at;
  Timestamp updated_at;
  Bytes sealed_code;
  Bytes sealed_personal;
  std::optional<RecordId> merged_into;  // set when another record won this code
};

struct FaceImageRecord {
  std::uint64_t image_id = 0;
  codec::FaceOutputCode owner;
  faceml::FaceRaster raster;
  Timestamp captured_at;
  std::string source;
};

struct Recognized {
  codec::FaceOutputCode code;
  double distance = 0.0;
};
struct Unrecognized {
  std::optional<double> best_distance;
};
struct NotAFace {
  double dffs = 0.0;
};
using MatchResult = std::variant<Recognized, Unrecognized, NotAFace>;

// Matching thresholds and the Hamming prefilter radius.
struct MatchSettings {
  double accept = 0.0;
  double face = 0.0;
  int hamming_radius = 8;
};

void write_embedding(ByteWriter& w, const faceml::Embedding& e);
faceml::Embedding read_embedding(ByteReader& r);

}  // namespace facekey::registry
