#include "registry/code_index.hpp"

#include <algorithm>

#include "codec/envelope.hpp"
#include "common/error.hpp"

namespace facekey::registry {

namespace {

void write_id(ByteWriter& w, const RecordId& id) {
  w.str16(id.origin);
  w.u64(id.seq);
}

RecordId read_id(ByteReader& r) {
  RecordId id;
  id.origin = r.str16();
  id.seq = r.u64();
  return id;
}

std::string open_code_text(std::span<const std::uint8_t> key, const Bytes& sealed) {
  auto plain = codec::open_bytes(key, sealed);
  return std::string(plain.begin(), plain.end());
}

}  // namespace

Bytes encode_body(const EnrollBody& body) {
  ByteWriter w;
  w.u64(body.code.payload());
  w.blob32(body.sealed_code);
  w.blob32(body.sealed_personal);
  write_embedding(w, body.embedding);
  return std::move(w).take();
}

Bytes encode_body(const AppendBody& body) {
  ByteWriter w;
  write_id(w, body.target);
  write_embedding(w, body.embedding);
  return std::move(w).take();
}

Bytes encode_body(const PersonalBody& body) {
  ByteWriter w;
  write_id(w, body.target);
  w.blob32(body.sealed_personal);
  return std::move(w).take();
}

CodeIndex::CodeIndex(Bytes seal_key) : key_(std::move(seal_key)) {}

federation::ApplyOutcome CodeIndex::apply(const federation::ReplicationEntry& entry,
                                          std::span<const std::uint8_t> body) {
  using federation::ApplyOutcome;
  using federation::EntryKind;
  ByteReader r(body);
  const Stamp stamp{entry.timestamp, entry.origin_node, entry.origin_seq};

  switch (entry.kind) {
    case EntryKind::Enroll: {
      IdentityRecord rec;
      rec.id = RecordId{entry.origin_node, entry.origin_seq};
      rec.code = codec::FaceOutputCode::from_payload(r.u64());
      rec.code_text = rec.code.render();
      rec.sealed_code = r.blob32();
      rec.sealed_personal = r.blob32();
      auto embedding = read_embedding(r);
      if (!r.done()) fail(ErrorCode::StorageFailure, "trailing bytes in enroll body");
      if (open_code_text(key_, rec.sealed_code) != rec.code_text) {
        fail(ErrorCode::AuthenticationFailure, "sealed code does not match enrolled code");
      }
      rec.personal = decode_personal(codec::open_bytes(key_, rec.sealed_personal));
      validate_personal(rec.personal);
      if (records_.count(rec.id)) return ApplyOutcome::Applied;
      rec.embeddings.push_back(TaggedEmbedding{stamp, std::move(embedding)});
      rec.personal_stamp = stamp;
      rec.created_at = rec.updated_at = entry.timestamp;
      const auto code = rec.code;
      records_.emplace(rec.id, std::move(rec));
      resolve_code(code);
      return ApplyOutcome::Applied;
    }
    case EntryKind::AppendEmbedding: {
      const RecordId target = read_id(r);
      auto embedding = read_embedding(r);
      if (!r.done()) fail(ErrorCode::StorageFailure, "trailing bytes in append body");
      auto it = records_.find(target);
      if (it == records_.end()) return ApplyOutcome::Deferred;
      auto& rec = it->second;
      if (embedding.weights.size() != rec.embeddings.front().embedding.weights.size()) {
        fail(ErrorCode::EmbeddingMismatch, "appended embedding length differs from identity");
      }
      TaggedEmbedding tagged{stamp, std::move(embedding)};
      auto pos = std::upper_bound(rec.embeddings.begin(), rec.embeddings.end(), tagged.stamp,
                                  [](const Stamp& s, const TaggedEmbedding& t) { return s < t.stamp; });
      rec.embeddings.insert(pos, std::move(tagged));
      rec.updated_at = std::max(rec.updated_at, entry.timestamp);
      return ApplyOutcome::Applied;
    }
    case EntryKind::UpdatePersonal: {
      const RecordId target = read_id(r);
      Bytes sealed = r.blob32();
      if (!r.done()) fail(ErrorCode::StorageFailure, "trailing bytes in personal body");
      auto personal = decode_personal(codec::open_bytes(key_, sealed));
      validate_personal(personal);
      auto it = records_.find(target);
      if (it == records_.end()) return ApplyOutcome::Deferred;
      auto& rec = it->second;
      if (rec.personal_stamp < stamp) {
        rec.personal = std::move(personal);
        rec.sealed_personal = std::move(sealed);
        rec.personal_stamp = stamp;
      }
      rec.updated_at = std::max(rec.updated_at, entry.timestamp);
      return ApplyOutcome::Applied;
    }
    case EntryKind::SuspectAdd:
      break;
  }
  fail(ErrorCode::InvalidArgument, "entry kind not handled by the code index");
}

void CodeIndex::resolve_code(const codec::FaceOutputCode& code) {
  IdentityRecord* winner = nullptr;
  std::vector<IdentityRecord*> group;
  for (auto& [id, rec] : records_) {
    if (rec.code != code) continue;
    group.push_back(&rec);
    if (!winner || std::tie(winner->created_at, winner->id) < std::tie(rec.created_at, rec.id)) {
      winner = &rec;
    }
  }
  for (auto* rec : group) {
    if (rec == winner) {
      rec->merged_into.reset();
    } else {
      rec->merged_into = winner->id;
    }
  }
  if (winner) active_[code] = winner->id;
}

const IdentityRecord* CodeIndex::find_active(const codec::FaceOutputCode& code) const {
  auto it = active_.find(code);
  return it == active_.end() ? nullptr : &records_.at(it->second);
}

const IdentityRecord* CodeIndex::find(const RecordId& id) const {
  auto it = records_.find(id);
  return it == records_.end() ? nullptr : &it->second;
}

bool CodeIndex::uses_code(const codec::FaceOutputCode& code) const { return active_.count(code) > 0; }

std::vector<const IdentityRecord*> CodeIndex::active() const {
  std::vector<const IdentityRecord*> out;
  out.reserve(active_.size());
  for (const auto& [code, id] : active_) out.push_back(&records_.at(id));
  std::sort(out.begin(), out.end(),
            [](const IdentityRecord* a, const IdentityRecord* b) { return a->code_text < b->code_text; });
  return out;
}

Bytes CodeIndex::snapshot() const {
  ByteWriter w;
  w.raw(std::string_view("FCIX"));
  w.u16(kIndexVersion);
  w.u32(static_cast<std::uint32_t>(records_.size()));
  for (const auto& [id, rec] : records_) {
    write_id(w, id);
    w.blob32(rec.sealed_code);
    w.u32(static_cast<std::uint32_t>(rec.embeddings.size()));
    for (const auto& t : rec.embeddings) {
      w.i64(t.stamp.at.seconds);
      w.str16(t.stamp.origin);
      w.u64(t.stamp.seq);
      write_embedding(w, t.embedding);
    }
    w.i64(rec.created_at.seconds);
    w.i64(rec.updated_at.seconds);
    w.blob32(rec.sealed_personal);
    w.i64(rec.personal_stamp.at.seconds);
    w.str16(rec.personal_stamp.origin);
    w.u64(rec.personal_stamp.seq);
    w.u8(rec.merged_into ? 1 : 0);
    if (rec.merged_into) write_id(w, *rec.merged_into);
  }
  return std::move(w).take();
}

void CodeIndex::load_snapshot(std::span<const std::uint8_t> data) {
  ByteReader r(data);
  auto magic = r.raw(4);
  if (!std::equal(magic.begin(), magic.end(), "FCIX")) {
    fail(ErrorCode::StorageFailure, "not a code index snapshot");
  }
  if (r.u16() != kIndexVersion) fail(ErrorCode::StorageFailure, "unsupported index version");
  std::map<RecordId, IdentityRecord> records;
  std::map<codec::FaceOutputCode, RecordId> active;
  const auto count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    IdentityRecord rec;
    rec.id = read_id(r);
    rec.sealed_code = r.blob32();
    rec.code_text = open_code_text(key_, rec.sealed_code);
    rec.code = codec::parse_code(rec.code_text);
    const auto n = r.u32();
    for (std::uint32_t j = 0; j < n; ++j) {
      TaggedEmbedding t;
      t.stamp.at = Timestamp{r.i64()};
      t.stamp.origin = r.str16();
      t.stamp.seq = r.u64();
      t.embedding = read_embedding(r);
      rec.embeddings.push_back(std::move(t));
    }
    if (rec.embeddings.empty()) fail(ErrorCode::StorageFailure, "identity without embeddings");
    rec.created_at = Timestamp{r.i64()};
    rec.updated_at = Timestamp{r.i64()};
    rec.sealed_personal = r.blob32();
    rec.personal = decode_personal(codec::open_bytes(key_, rec.sealed_personal));
    rec.personal_stamp.at = Timestamp{r.i64()};
    rec.personal_stamp.origin = r.str16();
    rec.personal_stamp.seq = r.u64();
    if (r.u8()) {
      rec.merged_into = read_id(r);
    } else {
      active[rec.code] = rec.id;
    }
    records.emplace(rec.id, std::move(rec));
  }
  if (!r.done()) fail(ErrorCode::StorageFailure, "trailing bytes in index snapshot");
  records_ = std::move(records);
  active_ = std::move(active);
}

}  // namespace facekey::registry
