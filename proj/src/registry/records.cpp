#include "registry/records.hpp"

#include "common/error.hpp"

namespace facekey::registry {

void validate_personal(const PersonalData& personal) {
  if (personal.name.empty()) fail(ErrorCode::ValidationError, "personal data requires a name");
}

Bytes encode_personal(const PersonalData& p) {
  ByteWriter w;
  w.blob32(as_bytes(p.name));
  w.blob32(as_bytes(p.address));
  w.blob32(as_bytes(p.phone));
  w.u32(static_cast<std::uint32_t>(p.attributes.size()));
  for (const auto& [k, v] : p.attributes) {
    w.blob32(as_bytes(k));
    w.blob32(as_bytes(v));
  }
  return std::move(w).take();
}

PersonalData decode_personal(std::span<const std::uint8_t> data) {
  ByteReader r(data);
  auto str = [&] {
    auto b = r.blob32();
    return std::string(b.begin(), b.end());
  };
  PersonalData p;
  p.name = str();
  p.address = str();
  p.phone = str();
  const auto n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    auto key = str();
    p.attributes[key] = str();
  }
  if (!r.done()) fail(ErrorCode::StorageFailure, "trailing bytes in personal record");
  return p;
}

void write_embedding(ByteWriter& w, const faceml::Embedding& e) {
  w.u32(static_cast<std::uint32_t>(e.weights.size()));
  w.f64(e.dffs);
  for (double x : e.weights) w.f64(x);
}

faceml::Embedding read_embedding(ByteReader& r) {
  faceml::Embedding e;
  const auto k = r.u32();
  if (k == 0 || k > 4096) fail(ErrorCode::StorageFailure, "embedding length out of range");
  e.dffs = r.f64();
  e.weights.resize(k);
  for (double& x : e.weights) x = r.f64();
  return e;
}

}  // namespace facekey::registry
