#pragma once

#include <json.hpp>

#include "common/error.hpp"
#include "federation/replication.hpp"
#include "registry/registry.hpp"
#include "workflows/workflows.hpp"

// JSON views shared by the HTTP service and the C API.
namespace facekey::gateway {

using nlohmann::json;

json to_json(const registry::MatchResult& result);
json to_json(const registry::PersonalData& personal);
json to_json(const registry::IdentityRecord& identity);
json to_json(const registry::FaceImageRecord& image);
json to_json(const registry::LookupResult& lookup);
json to_json(const workflows::Message& message);
json to_json(const workflows::AttendanceEvent& event);
json to_json(const workflows::AuthorizationResult& result);
json to_json(const workflows::LinkResult& result);
json to_json(const workflows::SuspectRecord& suspect, const std::vector<std::uint64_t>& image_ids);
json to_json(const federation::ApplyReport& report);

registry::PersonalData personal_from_json(const json& j);
// {target, body, category, validFrom, validUntil}
workflows::Message message_from_json(const json& j);
std::set<workflows::MessageCategory> categories_from_json(const json& j);

json error_json(const Error& error);

// Parses a request body; syntax errors become InvalidArgument.
json parse_json_body(std::string_view text);

}  // namespace facekey::gateway
