#include "workflows/suspect_index.hpp"

#include <algorithm>

#include "codec/envelope.hpp"
#include "common/error.hpp"

namespace facekey::workflows {

Bytes encode_body(const SuspectAddBody& body) {
  ByteWriter w;
  w.u64(body.code.payload());
  w.blob32(body.sealed_code);
  w.u32(static_cast<std::uint32_t>(body.embeddings.size()));
  for (const auto& e : body.embeddings) registry::write_embedding(w, e);
  w.u32(static_cast<std::uint32_t>(body.activity_log.size()));
  for (const auto& a : body.activity_log) {
    w.i64(a.at.seconds);
    w.blob32(as_bytes(a.description));
  }
  return std::move(w).take();
}

SuspectIndex::SuspectIndex(Bytes seal_key) : key_(std::move(seal_key)) {}

federation::ApplyOutcome SuspectIndex::apply(const federation::ReplicationEntry& entry,
                                             std::span<const std::uint8_t> body) {
  if (entry.kind != federation::EntryKind::SuspectAdd) {
    fail(ErrorCode::InvalidArgument, "entry kind not handled by the suspect index");
  }
  ByteReader r(body);
  SuspectRecord rec;
  rec.id = RecordId{entry.origin_node, entry.origin_seq};
  rec.code = codec::FaceOutputCode::from_payload(r.u64());
  rec.code_text = rec.code.render();
  rec.sealed_code = r.blob32();
  const auto n = r.u32();
  if (n == 0 || n > 64) fail(ErrorCode::StorageFailure, "suspect evidence count out of range");
  for (std::uint32_t i = 0; i < n; ++i) rec.embeddings.push_back(registry::read_embedding(r));
  const auto a = r.u32();
  for (std::uint32_t i = 0; i < a; ++i) {
    Activity act;
    act.at = Timestamp{r.i64()};
    auto desc = r.blob32();
    act.description.assign(desc.begin(), desc.end());
    rec.activity_log.push_back(std::move(act));
  }
  if (!r.done()) fail(ErrorCode::StorageFailure, "trailing bytes in suspect body");
  if (rec.activity_log.empty()) fail(ErrorCode::ValidationError, "suspect without activity");
  auto plain = codec::open_bytes(key_, rec.sealed_code);
  if (std::string(plain.begin(), plain.end()) != rec.code_text) {
    fail(ErrorCode::AuthenticationFailure, "sealed suspect code does not match");
  }
  rec.created_at = entry.timestamp;
  if (records_.count(rec.id)) return federation::ApplyOutcome::Applied;

  const auto code = rec.code;
  records_.emplace(rec.id, std::move(rec));
  SuspectRecord* winner = nullptr;
  for (auto& [id, r2] : records_) {
    if (r2.code != code) continue;
    if (!winner || std::tie(winner->created_at, winner->id) < std::tie(r2.created_at, r2.id)) {
      winner = &r2;
    }
  }
  for (auto& [id, r2] : records_) {
    if (r2.code != code) continue;
    if (&r2 == winner) {
      r2.merged_into.reset();
    } else {
      r2.merged_into = winner->id;
    }
  }
  active_[code] = winner->id;
  return federation::ApplyOutcome::Applied;
}

const SuspectRecord* SuspectIndex::find_active(const codec::FaceOutputCode& code) const {
  auto it = active_.find(code);
  return it == active_.end() ? nullptr : &records_.at(it->second);
}

std::vector<const SuspectRecord*> SuspectIndex::active() const {
  std::vector<const SuspectRecord*> out;
  for (const auto& [code, id] : active_) out.push_back(&records_.at(id));
  std::sort(out.begin(), out.end(), [](const SuspectRecord* a, const SuspectRecord* b) {
    return a->code_text < b->code_text;
  });
  return out;
}

Bytes SuspectIndex::snapshot() const {
  ByteWriter w;
  w.raw(std::string_view("FCSX"));
  w.u16(1);
  w.u32(static_cast<std::uint32_t>(records_.size()));
  for (const auto& [id, rec] : records_) {
    w.str16(id.origin);
    w.u64(id.seq);
    w.blob32(rec.sealed_code);
    w.u32(static_cast<std::uint32_t>(rec.embeddings.size()));
    for (const auto& e : rec.embeddings) registry::write_embedding(w, e);
    w.u32(static_cast<std::uint32_t>(rec.activity_log.size()));
    for (const auto& a : rec.activity_log) {
      w.i64(a.at.seconds);
      w.blob32(as_bytes(a.description));
    }
    w.i64(rec.created_at.seconds);
    w.u8(rec.merged_into ? 1 : 0);
    if (rec.merged_into) {
      w.str16(rec.merged_into->origin);
      w.u64(rec.merged_into->seq);
    }
  }
  return std::move(w).take();
}

}  // namespace facekey::workflows
