#include "workflows/workflows.hpp"

#include <algorithm>
#include <limits>

#include "codec/envelope.hpp"
#include "common/error.hpp"

namespace facekey::workflows {

using nlohmann::json;

std::string_view category_name(MessageCategory c) noexcept {
  switch (c) {
    case MessageCategory::Meeting: return "meeting";
    case MessageCategory::Appointment: return "appointment";
    case MessageCategory::Email: return "email";
    case MessageCategory::Other: return "other";
  }
  return "other";
}

MessageCategory parse_category(std::string_view text) {
  if (text == "meeting") return MessageCategory::Meeting;
  if (text == "appointment") return MessageCategory::Appointment;
  if (text == "email") return MessageCategory::Email;
  if (text == "other") return MessageCategory::Other;
  fail(ErrorCode::ValidationError, "unknown message category '" + std::string(text) + "'");
}

std::string_view direction_name(Direction d) noexcept { return d == Direction::In ? "in" : "out"; }

Direction parse_direction(std::string_view text) {
  if (text == "in") return Direction::In;
  if (text == "out") return Direction::Out;
  fail(ErrorCode::ValidationError, "direction must be 'in' or 'out'");
}

std::string_view mode_name(StationMode m) noexcept {
  switch (m) {
    case StationMode::Office: return "office";
    case StationMode::Banking: return "banking";
    case StationMode::Surveillance: return "surveillance";
  }
  return "office";
}

StationMode parse_mode(std::string_view text) {
  if (text == "office") return StationMode::Office;
  if (text == "banking") return StationMode::Banking;
  if (text == "surveillance") return StationMode::Surveillance;
  fail(ErrorCode::ConfigError, "unknown station mode '" + std::string(text) + "'");
}

Workflows::Workflows(registry::Registry& registry, federation::Replicator& replicator,
                     registry::ImageStore suspect_images, int fraud_attempts)
    : registry_(registry),
      replicator_(replicator),
      suspects_(Bytes(replicator.seal_key().begin(), replicator.seal_key().end())),
      suspect_images_(std::move(suspect_images)),
      fraud_attempts_(fraud_attempts) {
  if (fraud_attempts_ < 1) fail(ErrorCode::ConfigError, "fraud attempt limit must be >= 1");
}

void Workflows::configure_station(StationConfig station) {
  registry::validate_label(station.id, "station id");
  sinks_[station.id] = std::make_unique<AlertSink>(station.alert_sink_path);
  stations_[station.id] = std::move(station);
}

const StationConfig* Workflows::station(const std::string& id) const {
  auto it = stations_.find(id);
  return it == stations_.end() ? nullptr : &it->second;
}

AlertSink& Workflows::sink(const std::string& station_id) {
  auto& slot = sinks_[station_id];
  if (!slot) slot = std::make_unique<AlertSink>();
  return *slot;
}

const AlertSink* Workflows::find_sink(const std::string& station_id) const {
  auto it = sinks_.find(station_id);
  return it == sinks_.end() ? nullptr : it->second.get();
}

std::map<std::string, std::vector<Alert>> Workflows::alert_snapshot() const {
  std::map<std::string, std::vector<Alert>> out;
  for (const auto& [id, sink] : sinks_) out[id] = sink->snapshot();
  return out;
}

// ---------------------------------------------------------------------------
// Messaging

std::uint64_t Workflows::post_message(Message draft) {
  if (!registry_.index().find_active(draft.target)) {
    fail(ErrorCode::UnknownCode, "message target " + draft.target.render() + " is not enrolled");
  }
  if (draft.valid_until < draft.valid_from) {
    fail(ErrorCode::InvalidInterval, "message validFrom is after validUntil");
  }
  draft.id = next_message_id_++;
  draft.delivered = false;
  const auto id = draft.id;
  messages_.emplace(id, std::move(draft));
  return id;
}

void Workflows::set_preferences(const AlertPreference& preference) {
  if (!registry_.index().find_active(preference.owner)) {
    fail(ErrorCode::UnknownCode, "preference owner " + preference.owner.render() + " is not enrolled");
  }
  if (preference.suppressed.count(MessageCategory::Meeting)) {
    fail(ErrorCode::PolicyViolation, "meeting messages cannot be suppressed");
  }
  preferences_[preference.owner] = preference.suppressed;
}

std::optional<AlertPreference> Workflows::preferences(const codec::FaceOutputCode& code) const {
  auto it = preferences_.find(code);
  if (it == preferences_.end()) return std::nullopt;
  return AlertPreference{code, it->second};
}

std::vector<Message> Workflows::alert_scan(const codec::FaceOutputCode& code, Timestamp now) {
  if (!registry_.index().find_active(code)) {
    fail(ErrorCode::UnknownCode, "no identity with code " + code.render());
  }
  const auto pref = preferences_.find(code);
  std::vector<Message*> due;
  for (auto& [id, msg] : messages_) {
    if (msg.target != code || msg.delivered) continue;
    if (now < msg.valid_from || msg.valid_until < now) continue;
    if (msg.category != MessageCategory::Meeting && pref != preferences_.end() &&
        pref->second.count(msg.category)) {
      continue;
    }
    due.push_back(&msg);
  }
  std::sort(due.begin(), due.end(), [](const Message* a, const Message* b) {
    return std::tie(a->valid_from, a->id) < std::tie(b->valid_from, b->id);
  });
  std::vector<Message> out;
  for (auto* msg : due) {
    msg->delivered = true;
    out.push_back(*msg);
  }
  return out;
}

std::optional<Alert> Workflows::office_visit(const faceml::FaceRaster& raster,
                                             const std::string& station, Timestamp now) {
  registry::validate_label(station, "station id");
  const auto result = registry_.identify(raster);
  const auto* hit = std::get_if<registry::Recognized>(&result);
  if (!hit) return std::nullopt;
  const auto due = alert_scan(hit->code, now);
  if (due.empty()) return std::nullopt;

  json messages = json::array();
  for (const auto& m : due) {
    messages.push_back({{"messageId", m.id},
                        {"category", category_name(m.category)},
                        {"body", m.body},
                        {"validFrom", format_timestamp(m.valid_from)},
                        {"validUntil", format_timestamp(m.valid_until)}});
  }
  Alert alert{AlertKind::MessageAlert, station,
              json{{"code", hit->code.render()}, {"messages", messages}}, now};
  sink(station).push(alert);
  return alert;
}

// ---------------------------------------------------------------------------
// Attendance

AttendanceEvent Workflows::record_attendance(const faceml::FaceRaster& raster,
                                             const std::string& station, Direction direction,
                                             Timestamp now) {
  registry::validate_label(station, "station id");
  const auto result = registry_.identify(raster);
  const auto* hit = std::get_if<registry::Recognized>(&result);
  if (!hit) fail(ErrorCode::NotRecognized, "face not recognized; attendance not recorded");

  const auto key = std::make_pair(hit->code, station);
  auto last = last_attendance_.find(key);
  if (last != last_attendance_.end() && !(last->second < now)) {
    fail(ErrorCode::ClockSkew, "attendance timestamp must increase per identity and station");
  }
  AttendanceEvent event{hit->code, now, station, direction};
  attendance_.push_back(event);
  last_attendance_[key] = now;
  return event;
}

// ---------------------------------------------------------------------------
// Banking

std::uint16_t Workflows::allocate_suspect_seq(std::uint64_t bits) const {
  for (std::uint32_t seq = 0; seq <= 0xFFFF; ++seq) {
    auto code = codec::FaceOutputCode::from_parts(bits, static_cast<std::uint16_t>(seq));
    if (!suspects_.uses_code(code) && !registry_.index().uses_code(code)) {
      return static_cast<std::uint16_t>(seq);
    }
  }
  fail(ErrorCode::StorageFailure, "suspect sequence space exhausted for this quantization");
}

codec::FaceOutputCode Workflows::escalate(Session& session, const std::string& station,
                                          const std::string& session_id, Timestamp now) {
  const auto& last = session.evidence.back().embedding;
  const std::uint64_t bits = codec::quantize_signs(last.weights);
  const auto code = codec::FaceOutputCode::from_parts(bits, allocate_suspect_seq(bits));

  SuspectAddBody body;
  body.code = code;
  body.sealed_code = codec::seal_bytes(replicator_.seal_key(), as_bytes(code.render()));
  for (const auto& ev : session.evidence) body.embeddings.push_back(ev.embedding);
  body.activity_log.push_back(Activity{now, std::string(kFraudActivity)});
  const Bytes plain = encode_body(body);

  auto entry = replicator_.prepare(federation::EntryKind::SuspectAdd, now, plain);
  const RecordId id{entry.origin_node, entry.origin_seq};
  std::vector<std::uint64_t> image_ids;
  for (const auto& ev : session.evidence) {
    image_ids.push_back(suspect_images_.add(code, ev.raster, now, station));
  }
  suspects_.apply(entry, plain);
  replicator_.commit(std::move(entry));
  suspect_images_by_record_[id] = image_ids;


  json payload{{"suspectCode", code.render()},
               {"sessionId", session_id},
               {"imageIds", image_ids},
               {"lawEnforcement", law_label(station)}};
  sink(station).push(Alert{AlertKind::UnrecognizedAlert, station, std::move(payload), now});
  return code;
}

std::string Workflows::law_label(const std::string& station) const {
  const auto* st = this->station(station);
  return st ? st->law_enforcement_label : std::string("unassigned");
}

AuthorizationResult Workflows::authorize_transaction(const faceml::FaceRaster& raster,
                                                     const std::string& station,
                                                     const std::string& session_id,
                                                     Timestamp now) {
  registry::validate_label(station, "station id");
  registry::validate_label(session_id, "session id");
  const auto embedding = faceml::project(registry_.model(), raster);
  const auto result = registry_.identify_embedding(embedding);
  auto& session = sessions_[{station, session_id}];

  if (const auto* hit = std::get_if<registry::Recognized>(&result)) {
    session = Session{};
    return Authorized{hit->code};
  }
  session.failures += 1;
  session.evidence.push_back(Evidence{raster, embedding});
  if (session.failures < fraud_attempts_) return Denied{fraud_attempts_ - session.failures};

  const auto code = escalate(session, station, session_id, now);
  session = Session{};
  return Escalated{code};
}

int Workflows::failures(const std::string& station, const std::string& session) const {
  auto it = sessions_.find({station, session});
  return it == sessions_.end() ? 0 : it->second.failures;
}

std::vector<std::uint64_t> Workflows::suspect_image_ids(const RecordId& suspect) const {
  auto it = suspect_images_by_record_.find(suspect);
  return it == suspect_images_by_record_.end() ? std::vector<std::uint64_t>{} : it->second;
}

// ---------------------------------------------------------------------------
// Surveillance

std::optional<Alert> Workflows::surveil_frame(const faceml::FaceRaster& raster,
                                              const std::string& station, Timestamp now) {
  registry::validate_label(station, "station id");
  const auto embedding = faceml::project(registry_.model(), raster);
  if (embedding.dffs > registry_.settings().face) return std::nullopt;

  const SuspectRecord* winner = nullptr;
  double best = std::numeric_limits<double>::infinity();
  for (const auto* rec : suspects_.active()) {
    for (const auto& e : rec->embeddings) {
      const double d = faceml::embedding_distance(e, embedding);
      if (d < best) {
        best = d;
        winner = rec;
      }
    }
  }
  if (!winner || best > registry_.settings().accept) return std::nullopt;

  Alert alert{AlertKind::SuspectAlert, station,
              json{{"suspectCode", winner->code_text},
                   {"imageIds", suspect_image_ids(winner->id)},
                   {"distance", best},
                   {"lawEnforcement", law_label(station)}},
              now};
  sink(station).push(alert);
  return alert;
}

LinkResult Workflows::link_suspect_to_registry(const codec::FaceOutputCode& suspect_code,
                                               Timestamp now) {
  const auto* suspect = suspects_.find_active(suspect_code);
  if (!suspect) fail(ErrorCode::UnknownSuspect, "no suspect with code " + suspect_code.render());

  std::optional<registry::Recognized> best;
  for (const auto& e : suspect->embeddings) {
    const auto result = registry_.identify_embedding(e);
    if (const auto* hit = std::get_if<registry::Recognized>(&result)) {
      if (!best || hit->distance < best->distance) best = *hit;
    }
  }

  const std::string activity = suspect->activity_log.back().description;
  const std::string entry = "criminal-activity " + format_timestamp(now) + " suspect=" +
                            suspect->code_text + " " + activity;

  if (best) {
    auto personal = registry_.lookup(best->code).identity.personal;
    auto& record = personal.attributes[std::string(kCriminalRecordKey)];
    record = record.empty() ? entry : record + "; " + entry;
    registry_.update_personal(best->code, personal, now);
    return Linked{best->code};
  }

  const auto ids = suspect_image_ids(suspect->id);
  if (ids.empty()) {
    fail(ErrorCode::StorageFailure,
         "suspect evidence images are held by another node; link there");
  }
  const auto* evidence = suspect_images_.find(ids.back());
  if (!evidence) fail(ErrorCode::StorageFailure, "suspect evidence image missing");

  registry::PersonalData personal;
  personal.name = "UNIDENTIFIED-" + suspect->code_text;
  personal.attributes[std::string(kCriminalRecordKey)] = entry;
  const auto code = registry_.enroll_embedding(suspect->embeddings.back(), evidence->raster,
                                               personal, now, "suspect-link", suspect_code);
  return CreatedNew{code};
}

// ---------------------------------------------------------------------------
// Local state

namespace {

json raster_json(const faceml::FaceRaster& r) {
  return json{{"size", r.size()}, {"pixels", std::vector<double>(r.pixels().begin(), r.pixels().end())}};
}

faceml::FaceRaster raster_from_json(const json& j) {
  return faceml::FaceRaster(j.at("size").get<std::size_t>(), j.at("pixels").get<std::vector<double>>());
}

json embedding_json(const faceml::Embedding& e) {
  return json{{"weights", e.weights}, {"dffs", e.dffs}};
}

faceml::Embedding embedding_from_json(const json& j) {
  return faceml::Embedding{j.at("weights").get<std::vector<double>>(), j.at("dffs").get<double>()};
}

}  // namespace

json Workflows::local_state() const {
  json messages = json::array();
  for (const auto& [id, m] : messages_) {
    messages.push_back({{"id", id},
                        {"targetCode", m.target.render()},
                        {"body", m.body},
                        {"category", category_name(m.category)},
                        {"validFrom", format_timestamp(m.valid_from)},
                        {"validUntil", format_timestamp(m.valid_until)},
                        {"delivered", m.delivered}});
  }
  json prefs = json::array();
  for (const auto& [code, set] : preferences_) {
    json cats = json::array();
    for (auto c : set) cats.push_back(category_name(c));
    prefs.push_back({{"owner", code.render()}, {"suppressed", cats}});
  }
  json attendance = json::array();
  for (const auto& a : attendance_) {
    attendance.push_back({{"owner", a.owner.render()},
                          {"at", format_timestamp(a.at)},
                          {"station", a.station},
                          {"direction", direction_name(a.direction)}});
  }
  json sessions = json::array();
  for (const auto& [key, s] : sessions_) {
    if (s.failures == 0) continue;
    json evidence = json::array();
    for (const auto& ev : s.evidence) {
      evidence.push_back({{"raster", raster_json(ev.raster)}, {"embedding", embedding_json(ev.embedding)}});
    }
    sessions.push_back({{"station", key.first},
                        {"session", key.second},
                        {"failures", s.failures},
                        {"evidence", evidence}});
  }
  json suspect_images = json::array();
  for (const auto& [id, ids] : suspect_images_by_record_) {
    suspect_images.push_back({{"origin", id.origin}, {"seq", id.seq}, {"imageIds", ids}});
  }
  return json{{"nextMessageId", next_message_id_},
              {"messages", messages},
              {"preferences", prefs},
              {"attendance", attendance},
              {"sessions", sessions},
              {"suspectImages", suspect_images}};
}

void Workflows::load_local_state(const json& state) {
  try {
    messages_.clear();
    for (const auto& m : state.at("messages")) {
      Message msg;
      msg.id = m.at("id").get<std::uint64_t>();
      msg.target = codec::parse_code(m.at("targetCode").get<std::string>());
      msg.body = m.at("body").get<std::string>();
      msg.category = parse_category(m.at("category").get<std::string>());
      msg.valid_from = parse_timestamp(m.at("validFrom").get<std::string>());
      msg.valid_until = parse_timestamp(m.at("validUntil").get<std::string>());
      msg.delivered = m.at("delivered").get<bool>();
      messages_[msg.id] = std::move(msg);
    }
    next_message_id_ = state.at("nextMessageId").get<std::uint64_t>();
    preferences_.clear();
    for (const auto& p : state.at("preferences")) {
      std::set<MessageCategory> cats;
      for (const auto& c : p.at("suppressed")) cats.insert(parse_category(c.get<std::string>()));
      preferences_[codec::parse_code(p.at("owner").get<std::string>())] = cats;
    }
    attendance_.clear();
    last_attendance_.clear();
    for (const auto& a : state.at("attendance")) {
      AttendanceEvent ev{codec::parse_code(a.at("owner").get<std::string>()),
                         parse_timestamp(a.at("at").get<std::string>()),
                         a.at("station").get<std::string>(),
                         parse_direction(a.at("direction").get<std::string>())};
      last_attendance_[{ev.owner, ev.station}] = ev.at;
      attendance_.push_back(std::move(ev));
    }
    sessions_.clear();
    for (const auto& s : state.at("sessions")) {
      Session session;
      session.failures = s.at("failures").get<int>();
      for (const auto& ev : s.at("evidence")) {
        session.evidence.push_back(
            Evidence{raster_from_json(ev.at("raster")), embedding_from_json(ev.at("embedding"))});
      }
      sessions_[{s.at("station").get<std::string>(), s.at("session").get<std::string>()}] =
          std::move(session);
    }
    suspect_images_by_record_.clear();
    for (const auto& s : state.at("suspectImages")) {
      suspect_images_by_record_[RecordId{s.at("origin").get<std::string>(),
                                         s.at("seq").get<std::uint64_t>()}] =
          s.at("imageIds").get<std::vector<std::uint64_t>>();
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::StorageFailure, std::string("corrupt local workflow state: ") + e.what());
  }
}

}  // namespace facekey::workflows
