#pragma once

#include <map>
#include <optional>
#include <span>
#include <vector>

#include "federation/replication.hpp"
#include "registry/records.hpp"

namespace facekey::workflows {

using registry::RecordId;

struct Activity {
  Timestamp at;
  std::string description;

  friend bool operator==(const Activity&, const Activity&) = default;
};

struct SuspectRecord {
  RecordId id;
  codec::FaceOutputCode code;
  std::string code_text;
  std::vector<faceml::Embedding> embeddings;  // evidence order; last one derived the code
  std::vector<Activity> activity_log;
  Bytes sealed_code;
  Timestamp created_at;
  std::optional<RecordId> merged_into;
};

struct SuspectAddBody {
  codec::FaceOutputCode code;
  Bytes sealed_code;
  std::vector<faceml::Embedding> embeddings;
  std::vector<Activity> activity_log;
};

Bytes encode_body(const SuspectAddBody& body);

// Suspect face output code index: replicated, kept apart from the main
// registry. Code collisions resolve like the code index (latest wins, losers
// flagged).
class SuspectIndex {
public:
  explicit SuspectIndex(Bytes seal_key);

  federation::ApplyOutcome apply(const federation::ReplicationEntry& entry,
                                 std::span<const std::uint8_t> body);

  const SuspectRecord* find_active(const codec::FaceOutputCode& code) const;
  bool uses_code(const codec::FaceOutputCode& code) const { return active_.count(code) > 0; }
  std::vector<const SuspectRecord*> active() const;  // by code text
  std::size_t active_count() const noexcept { return active_.size(); }
  const std::map<RecordId, SuspectRecord>& records() const noexcept { return records_; }

  // "FCSX" | u16 version | u32 count | per record: id, sealed code,
  // embeddings, activity log, created_at, merge flag.
  Bytes snapshot() const;

private:
  Bytes key_;
  std::map<RecordId, SuspectRecord> records_;
  std::map<codec::FaceOutputCode, RecordId> active_;
};

}  // namespace facekey::workflows
