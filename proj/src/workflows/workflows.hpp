#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <variant>

#include <json.hpp>

#include "registry/registry.hpp"
#include "workflows/alerts.hpp"
#include "workflows/suspect_index.hpp"

namespace facekey::workflows {

enum class MessageCategory { Meeting, Appointment, Email, Other };
std::string_view category_name(MessageCategory c) noexcept;
MessageCategory parse_category(std::string_view text);

struct Message {
  std::uint64_t id = 0;
  codec::FaceOutputCode target;
  std::string body;
  MessageCategory category = MessageCategory::Other;
  Timestamp valid_from;
  Timestamp valid_until;
  bool delivered = false;
};

struct AlertPreference {
  codec::FaceOutputCode owner;
  std::set<MessageCategory> suppressed;
};

enum class Direction { In, Out };
std::string_view direction_name(Direction d) noexcept;
Direction parse_direction(std::string_view text);

struct AttendanceEvent {
  codec::FaceOutputCode owner;
  Timestamp at;
  std::string station;
  Direction direction = Direction::In;
};

enum class StationMode { Office, Banking, Surveillance };
std::string_view mode_name(StationMode m) noexcept;
StationMode parse_mode(std::string_view text);

struct StationConfig {
  std::string id;
  StationMode mode = StationMode::Office;
  std::optional<std::string> alert_sink_path;
  std::string law_enforcement_label = "unassigned";
};

struct Authorized {
  codec::FaceOutputCode code;
};
struct Denied {
  int remaining_attempts = 0;
};
struct Escalated {
  codec::FaceOutputCode suspect_code;
};
using AuthorizationResult = std::variant<Authorized, Denied, Escalated>;

struct Linked {
  codec::FaceOutputCode identity;
};
struct CreatedNew {
  codec::FaceOutputCode identity;
};
using LinkResult = std::variant<Linked, CreatedNew>;

inline constexpr int kDefaultFraudAttempts = 3;
inline constexpr std::string_view kFraudActivity = "banking-fraud-attempt";
inline constexpr std::string_view kCriminalRecordKey = "criminalRecord";

// Office messaging and attendance, card-less banking authorization with fraud
// escalation, and suspect surveillance. All decisions depend only on the
// stores and the explicit `now`.
class Workflows {
public:
  Workflows(registry::Registry& registry, federation::Replicator& replicator,
            registry::ImageStore suspect_images, int fraud_attempts = kDefaultFraudAttempts);

  void configure_station(StationConfig station);
  const StationConfig* station(const std::string& id) const;
  // Unconfigured stations get an in-memory sink on first use.
  AlertSink& sink(const std::string& station_id);
  const AlertSink* find_sink(const std::string& station_id) const;
  // Every sink's alerts, keyed by station id.
  std::map<std::string, std::vector<Alert>> alert_snapshot() const;

  std::uint64_t post_message(Message draft);
  void set_preferences(const AlertPreference& preference);
  std::vector<Message> alert_scan(const codec::FaceOutputCode& code, Timestamp now);

  // Office terminal visit: identify, then alert every due message for the
  // recognized identity at this station. None when unrecognized or nothing due.
  std::optional<Alert> office_visit(const faceml::FaceRaster& raster, const std::string& station,
                                    Timestamp now);

  AttendanceEvent record_attendance(const faceml::FaceRaster& raster, const std::string& station,
                                    Direction direction, Timestamp now);
  AuthorizationResult authorize_transaction(const faceml::FaceRaster& raster,
                                            const std::string& station,
                                            const std::string& session, Timestamp now);
  std::optional<Alert> surveil_frame(const faceml::FaceRaster& raster, const std::string& station,
                                     Timestamp now);
  LinkResult link_suspect_to_registry(const codec::FaceOutputCode& suspect_code, Timestamp now);

  federation::ApplyOutcome apply(const federation::ReplicationEntry& entry,
                                 std::span<const std::uint8_t> body) {
    return suspects_.apply(entry, body);
  }

  const SuspectIndex& suspects() const noexcept { return suspects_; }
  const registry::ImageStore& suspect_images() const noexcept { return suspect_images_; }
  std::vector<std::uint64_t> suspect_image_ids(const RecordId& suspect) const;
  const std::map<std::uint64_t, Message>& messages() const noexcept { return messages_; }
  const std::vector<AttendanceEvent>& attendance() const noexcept { return attendance_; }
  std::optional<AlertPreference> preferences(const codec::FaceOutputCode& code) const;
  int failures(const std::string& station, const std::string& session) const;

  // Node-local (non-replicated) state as a deterministic JSON document.
  nlohmann::json local_state() const;
  void load_local_state(const nlohmann::json& state);

private:
  struct Evidence {
    faceml::FaceRaster raster;
    faceml::Embedding embedding;
  };
  struct Session {
    int failures = 0;
    std::vector<Evidence> evidence;
  };

  codec::FaceOutputCode escalate(Session& session, const std::string& station,
                                 const std::string& session_id, Timestamp now);
  std::uint16_t allocate_suspect_seq(std::uint64_t bits) const;
  std::string law_label(const std::string& station) const;

  registry::Registry& registry_;
  federation::Replicator& replicator_;
  SuspectIndex suspects_;
  registry::ImageStore suspect_images_;
  int fraud_attempts_;

  std::map<std::string, StationConfig> stations_;
  std::map<std::string, std::unique_ptr<AlertSink>> sinks_;
  std::map<std::uint64_t, Message> messages_;
  std::uint64_t next_message_id_ = 1;
  std::map<codec::FaceOutputCode, std::set<MessageCategory>> preferences_;
  std::vector<AttendanceEvent> attendance_;
  std::map<std::pair<codec::FaceOutputCode, std::string>, Timestamp> last_attendance_;
  std::map<std::pair<std::string, std::string>, Session> sessions_;
  std::map<RecordId, std::vector<std::uint64_t>> suspect_images_by_record_;
};

}  // namespace facekey::workflows
