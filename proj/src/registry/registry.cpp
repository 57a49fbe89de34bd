#include "registry/registry.hpp"

#include <algorithm>
#include <limits>

#include "codec/envelope.hpp"
#include "common/error.hpp"

namespace facekey::registry {

double min_distance(const IdentityRecord& identity, const faceml::Embedding& query) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& t : identity.embeddings) {
    best = std::min(best, faceml::embedding_distance(t.embedding, query));
  }
  return best;
}

Registry::Registry(federation::Replicator& replicator, ImageStore images)
    : replicator_(replicator),
      index_(Bytes(replicator.seal_key().begin(), replicator.seal_key().end())),
      images_(std::move(images)) {}

void Registry::set_model(std::shared_ptr<const faceml::EigenfaceModel> model,
                         MatchSettings settings) {
  model_ = std::move(model);
  settings_ = settings;
}

const faceml::EigenfaceModel& Registry::model() const {
  if (!model_) fail(ErrorCode::ModelMissing, "no eigenface model has been trained or loaded");
  return *model_;
}

const IdentityRecord& Registry::require_active(const codec::FaceOutputCode& code) const {
  const auto* rec = index_.find_active(code);
  if (!rec) fail(ErrorCode::UnknownCode, "no identity with code " + code.render());
  return *rec;
}

std::uint16_t Registry::allocate_seq(std::uint64_t bits,
                                     std::optional<codec::FaceOutputCode> avoid) const {
  for (std::uint32_t seq = 0; seq <= 0xFFFF; ++seq) {
    auto code = codec::FaceOutputCode::from_parts(bits, static_cast<std::uint16_t>(seq));
    if (index_.uses_code(code) || (reserved_ && reserved_(code)) || (avoid && *avoid == code)) {
      continue;
    }
    return static_cast<std::uint16_t>(seq);
  }
  fail(ErrorCode::StorageFailure, "all 65536 sequence numbers used for this quantization");
}

codec::FaceOutputCode Registry::enroll(const faceml::FaceRaster& raster,
                                       const PersonalData& personal, Timestamp now,
                                       const std::string& source) {
  validate_personal(personal);
  const auto embedding = faceml::project(model(), raster);
  if (embedding.dffs > settings_.face) {
    fail(ErrorCode::NotAFace, "raster is too far from face space (dffs " +
                                  std::to_string(embedding.dffs) + ")");
  }
  auto ranked = rank(embedding);
  if (!ranked.empty() && ranked.front().distance <= settings_.accept) {
    fail(ErrorCode::DuplicateIdentity,
         "face already enrolled as " + ranked.front().identity->code_text,
         ranked.front().identity->code_text);
  }
  return enroll_embedding(embedding, raster, personal, now, source, std::nullopt);
}

codec::FaceOutputCode Registry::enroll_embedding(const faceml::Embedding& embedding,
                                                 const faceml::FaceRaster& raster,
                                                 const PersonalData& personal, Timestamp now,
                                                 const std::string& source,
                                                 std::optional<codec::FaceOutputCode> avoid) {
  validate_personal(personal);
  validate_label(source, "image source");
  const std::uint64_t bits = codec::quantize_signs(embedding.weights);
  const auto code = codec::FaceOutputCode::from_parts(bits, allocate_seq(bits, avoid));
  const auto key = replicator_.seal_key();
  const std::string text = code.render();
  EnrollBody body{code, codec::seal_bytes(key, as_bytes(text)),
                  codec::seal_bytes(key, encode_personal(personal)), embedding};
  const Bytes plain = encode_body(body);
  auto entry = replicator_.prepare(federation::EntryKind::Enroll, now, plain);
  images_.add(code, raster, now, source);
  index_.apply(entry, plain);
  replicator_.commit(std::move(entry));
  return code;
}

std::vector<RankedIdentity> Registry::rank(const faceml::Embedding& embedding) const {
  std::vector<RankedIdentity> out;
  for (const auto* rec : index_.active()) out.push_back({rec, min_distance(*rec, embedding)});
  std::stable_sort(out.begin(), out.end(), [](const RankedIdentity& a, const RankedIdentity& b) {
    return a.distance < b.distance;
  });
  return out;
}

MatchResult Registry::identify(const faceml::FaceRaster& raster) const {
  return identify_embedding(faceml::project(model(), raster));
}

MatchResult Registry::identify_embedding(const faceml::Embedding& embedding) const {
  if (embedding.dffs > settings_.face) return NotAFace{embedding.dffs};
  const auto all = index_.active();
  if (all.empty()) return Unrecognized{};

  const std::uint64_t bits = codec::quantize_signs(embedding.weights);
  std::vector<const IdentityRecord*> candidates;
  for (const auto* rec : all) {
    if (codec::hamming_bits(rec->code.quantization(), bits) <= settings_.hamming_radius) {
      candidates.push_back(rec);
    }
  }
  if (candidates.empty()) candidates = all;

  // Candidates are already in code-text order, so strict < keeps the smallest text on ties.
  const IdentityRecord* winner = nullptr;
  double best = std::numeric_limits<double>::infinity();
  for (const auto* rec : candidates) {
    const double d = min_distance(*rec, embedding);
    if (d < best) {
      best = d;
      winner = rec;
    }
  }
  if (best <= settings_.accept) return Recognized{winner->code, best};
  return Unrecognized{best};
}

std::uint64_t Registry::append_face_image(const codec::FaceOutputCode& code,
                                          const faceml::FaceRaster& raster, Timestamp now,
                                          const std::string& source) {
  validate_label(source, "image source");
  const auto& rec = require_active(code);
  AppendBody body{rec.id, faceml::project(model(), raster)};
  const Bytes plain = encode_body(body);
  auto entry = replicator_.prepare(federation::EntryKind::AppendEmbedding, now, plain);
  const auto image_id = images_.add(code, raster, now, source);
  index_.apply(entry, plain);
  replicator_.commit(std::move(entry));
  return image_id;
}

LookupResult Registry::lookup(const codec::FaceOutputCode& code) const {
  const auto& rec = require_active(code);
  return LookupResult{rec, images_.for_owner(code)};
}

IdentityRecord Registry::update_personal(const codec::FaceOutputCode& code,
                                         const PersonalData& personal, Timestamp now) {
  validate_personal(personal);
  const auto& rec = require_active(code);
  PersonalBody body{rec.id, codec::seal_bytes(replicator_.seal_key(), encode_personal(personal))};
  const Bytes plain = encode_body(body);
  auto entry = replicator_.prepare(federation::EntryKind::UpdatePersonal, now, plain);
  index_.apply(entry, plain);
  replicator_.commit(std::move(entry));
  return require_active(code);
}

}  // namespace facekey::registry
