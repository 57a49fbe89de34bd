#include "federation/replication.hpp"

#include <charconv>

#include "codec/envelope.hpp"
#include "common/error.hpp"

namespace facekey::federation {

std::string_view kind_name(EntryKind kind) noexcept {
  switch (kind) {
    case EntryKind::Enroll: return "enroll";
    case EntryKind::AppendEmbedding: return "appendEmbedding";
    case EntryKind::UpdatePersonal: return "updatePersonal";
    case EntryKind::SuspectAdd: return "suspectAdd";
  }
  return "unknown";
}

Bytes encode_entry(const ReplicationEntry& entry) {
  ByteWriter w;
  w.str16(entry.origin_node);
  w.u64(entry.origin_seq);
  w.i64(entry.timestamp.seconds);
  w.u8(static_cast<std::uint8_t>(entry.kind));
  w.blob32(entry.payload);
  return std::move(w).take();
}

ReplicationEntry decode_entry(std::span<const std::uint8_t> data) {
  ByteReader r(data, ErrorCode::InvalidArgument);
  ReplicationEntry e;
  e.origin_node = r.str16();
  e.origin_seq = r.u64();
  e.timestamp = Timestamp{r.i64()};
  const auto kind = r.u8();
  if (kind > static_cast<std::uint8_t>(EntryKind::SuspectAdd)) {
    fail(ErrorCode::InvalidArgument, "unknown replication entry kind");
  }
  e.kind = static_cast<EntryKind>(kind);
  e.payload = r.blob32();
  if (!r.done()) fail(ErrorCode::InvalidArgument, "trailing bytes in replication entry");
  if (!valid_node_id(e.origin_node) || e.origin_seq == 0) {
    fail(ErrorCode::InvalidArgument, "replication entry has invalid origin");
  }
  return e;
}

Bytes encode_frames(std::span<const ReplicationEntry> entries) {
  ByteWriter w;
  for (const auto& e : entries) w.blob32(encode_entry(e));
  return std::move(w).take();
}

std::vector<ReplicationEntry> decode_frames(std::span<const std::uint8_t> data) {
  ByteReader r(data, ErrorCode::InvalidArgument);
  std::vector<ReplicationEntry> out;
  while (!r.done()) out.push_back(decode_entry(r.blob32()));
  return out;
}

bool valid_node_id(std::string_view id) noexcept {
  if (id.empty() || id.size() > 64) return false;
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '-' || c == '_' || c == '.';
    if (!ok) return false;
  }
  return true;
}

std::string format_vector(const AppliedVector& vector) {
  std::string out;
  for (const auto& [node, seq] : vector) {
    if (!out.empty()) out += ',';
    out += node + ':' + std::to_string(seq);
  }
  return out;
}

AppliedVector parse_vector(std::string_view text) {
  AppliedVector out;
  while (!text.empty()) {
    auto comma = text.find(',');
    auto item = text.substr(0, comma);
    auto colon = item.find(':');
    if (colon == std::string_view::npos) fail(ErrorCode::InvalidArgument, "bad vector item");
    auto node = item.substr(0, colon);
    auto num = item.substr(colon + 1);
    std::uint64_t seq = 0;
    auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), seq);
    if (ec != std::errc{} || ptr != num.data() + num.size() || !valid_node_id(node)) {
      fail(ErrorCode::InvalidArgument, "bad vector item '" + std::string(item) + "'");
    }
    out[std::string(node)] = seq;
    if (comma == std::string_view::npos) break;
    text = text.substr(comma + 1);
    if (text.empty()) fail(ErrorCode::InvalidArgument, "trailing comma in vector");
  }
  return out;
}

Replicator::Replicator(std::string node_id, Bytes seal_key)
    : node_id_(std::move(node_id)), key_(std::move(seal_key)) {
  if (!valid_node_id(node_id_)) fail(ErrorCode::ConfigError, "invalid node id '" + node_id_ + "'");
  if (key_.size() != codec::kKeyLength) fail(ErrorCode::KeyError, "seal key must be 32 bytes");
}

std::uint64_t Replicator::next_local_seq() const {
  auto it = applied_.find(node_id_);
  return (it == applied_.end() ? 0 : it->second) + 1;
}

ReplicationEntry Replicator::prepare(EntryKind kind, Timestamp at,
                                     std::span<const std::uint8_t> body) const {
  ReplicationEntry e{node_id_, next_local_seq(), at, kind, codec::seal_bytes(key_, body)};
  if (e.payload.size() >= kMaxPayloadBytes) {
    fail(ErrorCode::StorageFailure, "replication payload exceeds 4 KiB");
  }
  return e;
}

void Replicator::commit(ReplicationEntry entry) {
  if (entry.origin_node != node_id_ || entry.origin_seq != next_local_seq()) {
    fail(ErrorCode::Internal, "commit out of sequence");
  }
  applied_[node_id_] = entry.origin_seq;
  log_.push_back(std::move(entry));
}

ReplicationEntry Replicator::emit(EntryKind kind, Timestamp at, std::span<const std::uint8_t> body) {
  auto e = prepare(kind, at, body);
  commit(e);
  return e;
}

std::vector<ReplicationEntry> Replicator::pull(const AppliedVector& peer) const {
  std::vector<ReplicationEntry> out;
  for (const auto& e : log_) {
    auto it = peer.find(e.origin_node);
    if (it == peer.end() || e.origin_seq > it->second) out.push_back(e);
  }
  return out;
}

std::size_t Replicator::buffered() const noexcept {
  std::size_t n = 0;
  for (const auto& [_, m] : buffer_) n += m.size();
  return n;
}

ApplyReport Replicator::apply(std::span<const ReplicationEntry> entries, const Applier& applier) {
  ApplyReport report;
  for (const auto& e : entries) {
    auto it = applied_.find(e.origin_node);
    const std::uint64_t have = it == applied_.end() ? 0 : it->second;
    auto& pending = buffer_[e.origin_node];
    if (e.origin_seq <= have || pending.count(e.origin_seq)) {
      ++report.skipped;
      continue;
    }
    pending.emplace(e.origin_seq, e);
  }
  drain(applier, report);
  report.pending = buffered();
  return report;
}

std::size_t Replicator::drain(const Applier& applier, ApplyReport& report) {
  std::size_t total = 0;
  bool progress = true;
  while (progress) {
    progress = false;
    for (auto& [origin, pending] : buffer_) {
      while (!pending.empty()) {
        auto have = applied_.find(origin);
        const std::uint64_t next = (have == applied_.end() ? 0 : have->second) + 1;
        auto it = pending.find(next);
        if (it == pending.end()) break;
        ReplicationEntry entry = it->second;

        bool poisoned = false;
        try {
          const Bytes body = codec::open_bytes(key_, entry.payload);
          if (applier(entry, body) == ApplyOutcome::Deferred) break;
        } catch (const Error& err) {
          if (err.code() == ErrorCode::Internal) throw;
          poisoned = true;
        }
        pending.erase(it);
        applied_[origin] = next;
        if (poisoned) {
          quarantine_.push_back(entry);
          ++report.quarantined;
        } else {
          ++report.applied;
        }
        log_.push_back(std::move(entry));
        ++total;
        progress = true;
      }
    }
  }
  std::erase_if(buffer_, [](const auto& kv) { return kv.second.empty(); });
  return total;
}

}  // namespace facekey::federation
