#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "common/bytes.hpp"
#include "common/time.hpp"

namespace facekey::federation {

enum class EntryKind : std::uint8_t {
  Enroll = 0,
  AppendEmbedding = 1,
  UpdatePersonal = 2,
  SuspectAdd = 3,
};

std::string_view kind_name(EntryKind kind) noexcept;

// One mutation of the replicated code index. The payload is a sealed envelope
// around the kind-specific body; rasters never travel in it.
struct ReplicationEntry {
  std::string origin_node;
  std::uint64_t origin_seq = 0;
  Timestamp timestamp;
  EntryKind kind = EntryKind::Enroll;
  Bytes payload;

  friend bool operator==(const ReplicationEntry&, const ReplicationEntry&) = default;
};

inline constexpr std::size_t kMaxPayloadBytes = 4096;

// Field order as declared, little-endian, strings u16-prefixed, payload u32-prefixed.
Bytes encode_entry(const ReplicationEntry& entry);
ReplicationEntry decode_entry(std::span<const std::uint8_t> data);

// Sync wire format: each frame is u32 length followed by one encoded entry.
Bytes encode_frames(std::span<const ReplicationEntry> entries);
std::vector<ReplicationEntry> decode_frames(std::span<const std::uint8_t> data);

// origin node -> highest contiguously applied origin sequence.
using AppliedVector = std::map<std::string, std::uint64_t>;

// Text form "nodeA:3,nodeB:7" (used in sync query strings and headers).
std::string format_vector(const AppliedVector& vector);
AppliedVector parse_vector(std::string_view text);

bool valid_node_id(std::string_view id) noexcept;

enum class ApplyOutcome { Applied, Deferred };

// Applies one opened entry to the local stores. Deferred means a causal
// dependency (e.g. the target identity) has not arrived yet; the entry stays
// buffered. Throwing facekey::Error quarantines the entry.
using Applier = std::function<ApplyOutcome(const ReplicationEntry&, std::span<const std::uint8_t>)>;

struct ApplyReport {
  std::size_t applied = 0;
  std::size_t quarantined = 0;
  std::size_t skipped = 0;
  std::size_t pending = 0;  // still buffered after this call
};

// Per-node replication state: applied vector, append-only log, out-of-order
// buffer and quarantine. Not internally synchronized; callers serialize writes.
class Replicator {
public:
  Replicator(std::string node_id, Bytes seal_key);

  const std::string& node_id() const noexcept { return node_id_; }
  std::uint64_t next_local_seq() const;

  // Seals body into a new local entry with the next origin sequence. Does not
  // change state; pair with commit() once the local stores accepted it.
  ReplicationEntry prepare(EntryKind kind, Timestamp at, std::span<const std::uint8_t> body) const;
  void commit(ReplicationEntry entry);
  ReplicationEntry emit(EntryKind kind, Timestamp at, std::span<const std::uint8_t> body);

  // Local-log entries with origin_seq above the peer's vector, in log order.
  std::vector<ReplicationEntry> pull(const AppliedVector& peer) const;
  ApplyReport apply(std::span<const ReplicationEntry> entries, const Applier& applier);

  const AppliedVector& applied_vector() const noexcept { return applied_; }
  const std::vector<ReplicationEntry>& log() const noexcept { return log_; }
  const std::vector<ReplicationEntry>& quarantine() const noexcept { return quarantine_; }
  std::size_t buffered() const noexcept;

  std::span<const std::uint8_t> seal_key() const noexcept { return key_; }

private:
  std::size_t drain(const Applier& applier, ApplyReport& report);

  std::string node_id_;
  Bytes key_;
  AppliedVector applied_;
  std::vector<ReplicationEntry> log_;
  std::vector<ReplicationEntry> quarantine_;
  std::map<std::string, std::map<std::uint64_t, ReplicationEntry>> buffer_;
};

}  // namespace facekey::federation
