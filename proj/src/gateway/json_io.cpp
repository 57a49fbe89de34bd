#include "gateway/json_io.hpp"

namespace facekey::gateway {

namespace {

template <typename T>
T field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) fail(ErrorCode::InvalidArgument, std::string("missing field '") + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    fail(ErrorCode::InvalidArgument, std::string("field '") + key + "' has the wrong type");
  }
}

}  // namespace

json to_json(const registry::MatchResult& result) {
  return std::visit(
      [](const auto& r) -> json {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, registry::Recognized>) {
          return {{"outcome", "recognized"}, {"code", r.code.render()}, {"distance", r.distance}};
        } else if constexpr (std::is_same_v<T, registry::Unrecognized>) {
          json j{{"outcome", "unrecognized"}, {"bestDistance", nullptr}};
          if (r.best_distance) j["bestDistance"] = *r.best_distance;
          return j;
        } else {
          return {{"outcome", "notAFace"}, {"dffs", r.dffs}};
        }
      },
      result);
}

json to_json(const registry::PersonalData& personal) {
  return {{"name", personal.name},
          {"address", personal.address},
          {"phone", personal.phone},
          {"attributes", personal.attributes}};
}

json to_json(const registry::IdentityRecord& identity) {
  json j{{"code", identity.code_text},
         {"recordId", identity.id.str()},
         {"personal", to_json(identity.personal)},
         {"embeddings", identity.embeddings.size()},
         {"createdAt", format_timestamp(identity.created_at)},
         {"updatedAt", format_timestamp(identity.updated_at)},
         {"mergedInto", nullptr}};
  if (identity.merged_into) j["mergedInto"] = identity.merged_into->str();
  return j;
}

json to_json(const registry::FaceImageRecord& image) {
  return {{"imageId", image.image_id},
          {"ownerCode", image.owner.render()},
          {"capturedAt", format_timestamp(image.captured_at)},
          {"source", image.source}};
}

json to_json(const registry::LookupResult& lookup) {
  json images = json::array();
  for (const auto& img : lookup.images) images.push_back(to_json(img));
  return {{"identity", to_json(lookup.identity)}, {"images", images}};
}

json to_json(const workflows::Message& m) {
  return {{"messageId", m.id},
          {"targetCode", m.target.render()},
          {"body", m.body},
          {"category", workflows::category_name(m.category)},
          {"validFrom", format_timestamp(m.valid_from)},
          {"validUntil", format_timestamp(m.valid_until)},
          {"delivered", m.delivered}};
}

json to_json(const workflows::AttendanceEvent& e) {
  return {{"code", e.owner.render()},
          {"at", format_timestamp(e.at)},
          {"stationId", e.station},
          {"direction", workflows::direction_name(e.direction)}};
}

json to_json(const workflows::AuthorizationResult& result) {
  return std::visit(
      [](const auto& r) -> json {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, workflows::Authorized>) {
          return {{"outcome", "authorized"}, {"code", r.code.render()}};
        } else if constexpr (std::is_same_v<T, workflows::Denied>) {
          return {{"outcome", "denied"}, {"remainingAttempts", r.remaining_attempts}};
        } else {
          return {{"outcome", "escalated"}, {"suspectCode", r.suspect_code.render()}};
        }
      },
      result);
}

json to_json(const workflows::LinkResult& result) {
  if (const auto* l = std::get_if<workflows::Linked>(&result)) {
    return {{"outcome", "linked"}, {"code", l->identity.render()}};
  }
  return {{"outcome", "createdNew"}, {"code", std::get<workflows::CreatedNew>(result).identity.render()}};
}

json to_json(const workflows::SuspectRecord& s, const std::vector<std::uint64_t>& image_ids) {
  json log = json::array();
  for (const auto& a : s.activity_log) {
    log.push_back({{"at", format_timestamp(a.at)}, {"description", a.description}});
  }
  json j{{"suspectCode", s.code_text},
         {"recordId", s.id.str()},
         {"embeddings", s.embeddings.size()},
         {"imageIds", image_ids},
         {"activityLog", log},
         {"createdAt", format_timestamp(s.created_at)},
         {"mergedInto", nullptr}};
  if (s.merged_into) j["mergedInto"] = s.merged_into->str();
  return j;
}

json to_json(const federation::ApplyReport& r) {
  return {{"applied", r.applied},
          {"quarantined", r.quarantined},
          {"skipped", r.skipped},
          {"pending", r.pending}};
}

registry::PersonalData personal_from_json(const json& j) {
  if (!j.is_object()) fail(ErrorCode::InvalidArgument, "personal data must be a JSON object");
  registry::PersonalData p;
  p.name = field<std::string>(j, "name");
  if (j.contains("address")) p.address = field<std::string>(j, "address");
  if (j.contains("phone")) p.phone = field<std::string>(j, "phone");
  if (j.contains("attributes")) p.attributes = field<std::map<std::string, std::string>>(j, "attributes");
  return p;
}

workflows::Message message_from_json(const json& j) {
  if (!j.is_object()) fail(ErrorCode::InvalidArgument, "message must be a JSON object");
  workflows::Message m;
  m.target = codec::parse_code(field<std::string>(j, "targetCode"));
  m.body = field<std::string>(j, "body");
  m.category = workflows::parse_category(field<std::string>(j, "category"));
  m.valid_from = parse_timestamp(field<std::string>(j, "validFrom"));
  m.valid_until = parse_timestamp(field<std::string>(j, "validUntil"));
  return m;
}

std::set<workflows::MessageCategory> categories_from_json(const json& j) {
  if (!j.is_array()) fail(ErrorCode::InvalidArgument, "suppressed must be an array of categories");
  std::set<workflows::MessageCategory> out;
  for (const auto& c : j) {
    if (!c.is_string()) fail(ErrorCode::InvalidArgument, "category must be a string");
    out.insert(workflows::parse_category(c.get<std::string>()));
  }
  return out;
}

json error_json(const Error& error) {
  json j{{"code", error_name(error.code())}, {"message", error.what()}};
  if (!error.detail().empty()) j["detail"] = error.detail();
  return j;
}

json parse_json_body(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::InvalidArgument, std::string("request body is not valid JSON: ") + e.what());
  }
}

}  // namespace facekey::gateway
