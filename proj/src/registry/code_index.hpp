#pragma once

#include <map>
#include <span>
#include <vector>

#include "federation/replication.hpp"
#include "registry/records.hpp"

namespace facekey::registry {

// Replicated mutation bodies (plaintext inside the sealed entry payload).
struct EnrollBody {
  codec::FaceOutputCode code;
  Bytes sealed_code;
  Bytes sealed_personal;
  faceml::Embedding embedding;
};
struct AppendBody {
  RecordId target;
  faceml::Embedding embedding;
};
struct PersonalBody {
  RecordId target;
  Bytes sealed_personal;
};

Bytes encode_body(const EnrollBody& body);
Bytes encode_body(const AppendBody& body);
Bytes encode_body(const PersonalBody& body);

// The slim Face Output Code index. Its contents are a pure function of the
// set of applied entries: embeddings are kept in stamp order, personal data
// is last-writer-wins, and records colliding on one code text are resolved in
// favour of the latest (created_at, origin, seq); losers stay, flagged.
class CodeIndex {
public:
  explicit CodeIndex(Bytes seal_key);

  // Handles Enroll / AppendEmbedding / UpdatePersonal. Validates fully before
  // mutating. Deferred when the target record has not arrived yet.
  federation::ApplyOutcome apply(const federation::ReplicationEntry& entry,
                                 std::span<const std::uint8_t> body);

  const IdentityRecord* find_active(const codec::FaceOutputCode& code) const;
  const IdentityRecord* find(const RecordId& id) const;
  // True when any record (active or merged) carries this code.
  bool uses_code(const codec::FaceOutputCode& code) const;

  std::size_t active_count() const noexcept { return active_.size(); }
  std::size_t record_count() const noexcept { return records_.size(); }
  // Active records ordered by code text.
  std::vector<const IdentityRecord*> active() const;
  const std::map<RecordId, IdentityRecord>& records() const noexcept { return records_; }

  // "FCIX" | u16 version | u32 count | records ordered by RecordId. Each
  // record: id, sealed code envelope, embedding block, created/updated
  // timestamps, sealed personal envelope + LWW stamp, merge flag. No code
  // text is ever written in the clear.
  Bytes snapshot() const;
  void load_snapshot(std::span<const std::uint8_t> data);

private:
  void resolve_code(const codec::FaceOutputCode& code);

  Bytes key_;
  std::map<RecordId, IdentityRecord> records_;
  std::map<codec::FaceOutputCode, RecordId> active_;
};

inline constexpr std::uint16_t kIndexVersion = 1;

}  // namespace facekey::registry
