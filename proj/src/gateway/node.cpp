#include "gateway/node.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>

#include <httplib.h>
#include <openssl/sha.h>

#include "codec/envelope.hpp"
#include "common/error.hpp"
#include "faceml/calibration.hpp"
#include "gateway/json_io.hpp"

namespace facekey::gateway {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kModelFile = "model.efm";
constexpr const char* kCalibrationFile = "calibration.cfg";
constexpr const char* kLogFile = "replication.log";
constexpr const char* kStateFile = "workflow_state.json";

std::string hex(std::span<const std::uint8_t> data) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  for (auto b : data) {
    out += digits[b >> 4];
    out += digits[b & 15];
  }
  return out;
}

std::string sha256_hex(std::span<const std::uint8_t> data) {
  std::uint8_t md[SHA256_DIGEST_LENGTH];
  SHA256(data.data(), data.size(), md);
  return hex(md);
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

faceml::Thresholds read_calibration(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::StorageFailure, "cannot read " + path.string());
  faceml::Thresholds t;
  bool have_accept = false, have_face = false;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const auto key = line.substr(0, eq);
    try {
      const double v = std::stod(line.substr(eq + 1));
      if (key == "theta_accept") t.accept = v, have_accept = true;
      if (key == "theta_face") t.face = v, have_face = true;
    } catch (const std::exception&) {
      fail(ErrorCode::StorageFailure, "corrupt calibration file " + path.string());
    }
  }
  if (!have_accept || !have_face) fail(ErrorCode::StorageFailure, "incomplete calibration file " + path.string());
  return t;
}

// Label of a training image: its subdirectory under the training root, else
// the file name up to the first '_'.
std::string training_label(const fs::path& root, const fs::path& file) {
  const auto rel = fs::relative(file, root);
  if (rel.has_parent_path() && !rel.parent_path().empty()) return rel.parent_path().string();
  const auto stem = file.stem().string();
  const auto us = stem.find('_');
  return us == std::string::npos ? stem : stem.substr(0, us);
}

bool is_pgm(const fs::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".pgm";
}

}  // namespace

Node::Node(Config config)
    : config_(std::move(config)),
      dir_(config_.data_dir),
      replicator_(config_.node_id, codec::parse_key_hex(config_.seal_key_hex)),
      registry_(replicator_, (fs::create_directories(dir_), registry::ImageStore(dir_ / "images"))),
      workflows_(registry_, replicator_, registry::ImageStore(dir_ / "suspect_images"),
                 config_.fraud_attempts) {
  const auto& wf = workflows_;
  registry_.set_reserved_codes([&wf](const codec::FaceOutputCode& c) { return wf.suspects().uses_code(c); });
  for (auto st : config_.stations) {
    if (!st.alert_sink_path) {
      st.alert_sink_path = (dir_ / "alerts" / (st.id + ".jsonl")).string();
    } else if (fs::path(*st.alert_sink_path).is_relative()) {
      st.alert_sink_path = (dir_ / *st.alert_sink_path).string();
    }
    workflows_.configure_station(std::move(st));
  }
  load_model();
  replay_log();
  const auto state_path = dir_ / kStateFile;
  if (fs::exists(state_path)) {
    const Bytes raw = read_file(state_path.string());
    json state;
    try {
      state = json::parse(raw.begin(), raw.end());
    } catch (const json::exception& e) {
      fail(ErrorCode::StorageFailure, std::string("corrupt workflow state: ") + e.what());
    }
    workflows_.load_local_state(state);
  }
}

Node::~Node() = default;

void Node::load_model() {
  const auto model_path = dir_ / kModelFile;
  if (!fs::exists(model_path)) return;
  auto model = std::make_shared<faceml::EigenfaceModel>(faceml::decode_model(read_file(model_path.string())));
  const auto calibrated = read_calibration(dir_ / kCalibrationFile);
  registry::MatchSettings settings;
  settings.accept = config_.theta_accept.value_or(calibrated.accept);
  settings.face = config_.theta_face.value_or(calibrated.face);
  settings.hamming_radius = config_.hamming_radius;
  registry_.set_model(std::move(model), settings);
}

federation::ApplyReport Node::apply_locked(std::span<const federation::ReplicationEntry> entries) {
  return replicator_.apply(entries, [this](const federation::ReplicationEntry& e,
                                           std::span<const std::uint8_t> body) {
    if (e.kind == federation::EntryKind::SuspectAdd) return workflows_.apply(e, body);
    return registry_.apply(e, body);
  });
}

void Node::replay_log() {
  const auto path = dir_ / kLogFile;
  if (!fs::exists(path)) return;
  const auto entries = federation::decode_frames(read_file(path.string()));
  const auto report = apply_locked(entries);
  if (report.pending != 0) fail(ErrorCode::StorageFailure, "replication log has gaps");
  persisted_entries_ = replicator_.log().size();
}

void Node::persist() {
  const auto& log = replicator_.log();
  if (log.size() > persisted_entries_) {
    const auto fresh = std::span(log).subspan(persisted_entries_);
    append_file((dir_ / kLogFile).string(), federation::encode_frames(fresh));
    persisted_entries_ = log.size();
  }
  write_file_atomic((dir_ / kStateFile).string(), as_bytes(workflows_.local_state().dump()));
}

faceml::FaceRaster Node::to_raster(const faceml::GrayImage& image) const {
  return faceml::normalize_raster(image, config_.raster_size);
}

void Node::ensure_station(const std::string& station) {
  registry::validate_label(station, "station id");
  if (workflows_.station(station)) return;
  workflows::StationConfig st;
  st.id = station;
  st.alert_sink_path = (dir_ / "alerts" / (station + ".jsonl")).string();
  workflows_.configure_station(std::move(st));
}

// ---------------------------------------------------------------------------

TrainSummary Node::train(const fs::path& dir, std::optional<std::size_t> k) {
  std::unique_lock lock(mutex_);
  if (registry_.index().record_count() > 0 || workflows_.suspects().records().size() > 0) {
    fail(ErrorCode::ValidationError,
         "records already hold embeddings from the current model; retraining would orphan them");
  }
  if (!fs::is_directory(dir)) fail(ErrorCode::InvalidArgument, "not a directory: " + dir.string());

  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file() && is_pgm(entry.path())) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  std::vector<faceml::FaceRaster> samples;
  std::vector<std::string> labels;
  for (const auto& f : files) {
    samples.push_back(to_raster(faceml::read_pgm(f.string())));
    labels.push_back(training_label(dir, f));
  }

  faceml::ComponentSelection selection{k.value_or(config_.k), faceml::kDefaultEnergyFraction};
  auto fit = faceml::fit_eigenfaces(samples, selection);
  const auto thresholds = faceml::calibrate_thresholds(fit.model, samples, labels, selection);

  write_file_atomic((dir_ / kModelFile).string(), faceml::encode_model(fit.model));
  const std::string cal = "theta_accept=" + format_double(thresholds.accept) +
                          "\ntheta_face=" + format_double(thresholds.face) + "\n";
  write_file_atomic((dir_ / kCalibrationFile).string(), as_bytes(cal));

  TrainSummary summary;
  summary.samples = samples.size();
  summary.labels = std::set<std::string>(labels.begin(), labels.end()).size();
  summary.components = fit.model.components();
  summary.calibrated = thresholds;
  load_model();
  summary.active = registry_.settings();
  return summary;
}

bool Node::has_model() const {
  std::shared_lock lock(mutex_);
  return registry_.has_model();
}

codec::FaceOutputCode Node::enroll(const faceml::GrayImage& image, const registry::PersonalData& personal,
                                   Timestamp now, const std::string& source) {
  const auto raster = to_raster(image);
  std::unique_lock lock(mutex_);
  auto code = registry_.enroll(raster, personal, now, source);
  persist();
  return code;
}

registry::MatchResult Node::identify(const faceml::GrayImage& image) const {
  const auto raster = to_raster(image);
  std::shared_lock lock(mutex_);
  return registry_.identify(raster);
}

registry::LookupResult Node::lookup(const codec::FaceOutputCode& code) const {
  std::shared_lock lock(mutex_);
  return registry_.lookup(code);
}

std::uint64_t Node::append_image(const codec::FaceOutputCode& code, const faceml::GrayImage& image,
                                 Timestamp now, const std::string& source) {
  const auto raster = to_raster(image);
  std::unique_lock lock(mutex_);
  const auto id = registry_.append_face_image(code, raster, now, source);
  persist();
  return id;
}

registry::IdentityRecord Node::update_personal(const codec::FaceOutputCode& code,
                                               const registry::PersonalData& personal, Timestamp now) {
  std::unique_lock lock(mutex_);
  auto rec = registry_.update_personal(code, personal, now);
  persist();
  return rec;
}

std::uint64_t Node::post_message(workflows::Message draft) {
  std::unique_lock lock(mutex_);
  const auto id = workflows_.post_message(std::move(draft));
  persist();
  return id;
}

void Node::set_preferences(const workflows::AlertPreference& preference) {
  std::unique_lock lock(mutex_);
  workflows_.set_preferences(preference);
  persist();
}

std::vector<workflows::Message> Node::alert_scan(const codec::FaceOutputCode& code, Timestamp now) {
  std::unique_lock lock(mutex_);
  auto due = workflows_.alert_scan(code, now);
  persist();
  return due;
}

workflows::AttendanceEvent Node::record_attendance(const faceml::GrayImage& image, const std::string& station,
                                                   workflows::Direction direction, Timestamp now) {
  const auto raster = to_raster(image);
  std::unique_lock lock(mutex_);
  auto ev = workflows_.record_attendance(raster, station, direction, now);
  persist();
  return ev;
}

workflows::AuthorizationResult Node::authorize(const faceml::GrayImage& image, const std::string& station,
                                               const std::string& session, Timestamp now) {
  const auto raster = to_raster(image);
  std::unique_lock lock(mutex_);
  ensure_station(station);
  auto result = workflows_.authorize_transaction(raster, station, session, now);
  persist();
  return result;
}

std::optional<workflows::Alert> Node::surveil(const faceml::GrayImage& image, const std::string& station,
                                              Timestamp now) {
  const auto raster = to_raster(image);
  std::unique_lock lock(mutex_);
  ensure_station(station);
  return workflows_.surveil_frame(raster, station, now);
}

workflows::LinkResult Node::link_suspect(const codec::FaceOutputCode& suspect, Timestamp now) {
  std::unique_lock lock(mutex_);
  auto result = workflows_.link_suspect_to_registry(suspect, now);
  persist();
  return result;
}

json Node::suspects() const {
  std::shared_lock lock(mutex_);
  json out = json::array();
  for (const auto* s : workflows_.suspects().active()) {
    out.push_back(to_json(*s, workflows_.suspect_image_ids(s->id)));
  }
  return out;
}

std::vector<workflows::Alert> Node::alerts(const std::string& station) const {
  std::shared_lock lock(mutex_);
  if (!workflows_.station(station)) fail(ErrorCode::UnknownStation, "station '" + station + "' is not configured");
  return workflows_.find_sink(station)->snapshot();
}

StreamSummary Node::run_stream(const fs::path& manifest, const std::string& station) {
  struct Frame {
    fs::path path;
    Timestamp at;
    std::string session;
  };
  std::ifstream in(manifest);
  if (!in) fail(ErrorCode::InvalidArgument, "cannot read manifest " + manifest.string());
  std::vector<Frame> frames;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string path, ts, session = "stream";
    if (!(fields >> path >> ts)) {
      fail(ErrorCode::ValidationError, "manifest line " + std::to_string(lineno) + ": expected '<path> <timestamp>'");
    }
    fields >> session;
    Frame f{fs::path(path), parse_timestamp(ts), session};
    if (f.path.is_relative()) f.path = manifest.parent_path() / f.path;
    if (!frames.empty() && f.at < frames.back().at) {
      fail(ErrorCode::ValidationError, "manifest line " + std::to_string(lineno) + ": timestamps must not decrease");
    }
    frames.push_back(std::move(f));
  }

  std::unique_lock lock(mutex_);
  const auto* st = workflows_.station(station);
  if (!st) fail(ErrorCode::UnknownStation, "station '" + station + "' is not configured");
  const auto mode = st->mode;
  auto& sink = workflows_.sink(station);
  const auto before = sink.size();

  StreamSummary summary;
  summary.frames = frames.size();
  for (const auto& f : frames) {
    faceml::FaceRaster raster;
    try {
      raster = to_raster(faceml::read_pgm(f.path.string()));
    } catch (const Error&) {
      ++summary.skipped;
      continue;
    }
    switch (mode) {
      case workflows::StationMode::Office: workflows_.office_visit(raster, station, f.at); break;
      case workflows::StationMode::Banking:
        workflows_.authorize_transaction(raster, station, f.session, f.at);
        break;
      case workflows::StationMode::Surveillance: workflows_.surveil_frame(raster, station, f.at); break;
    }
    ++summary.processed;
  }
  summary.alerts = sink.size() - before;
  persist();
  return summary;
}

// ---------------------------------------------------------------------------
// Federation

federation::AppliedVector Node::applied_vector() const {
  std::shared_lock lock(mutex_);
  return replicator_.applied_vector();
}

Bytes Node::pull_frames(const federation::AppliedVector& peer) const {
  std::shared_lock lock(mutex_);
  return federation::encode_frames(replicator_.pull(peer));
}

federation::ApplyReport Node::apply_frames(std::span<const std::uint8_t> frames) {
  const auto entries = federation::decode_frames(frames);
  std::unique_lock lock(mutex_);
  auto report = apply_locked(entries);
  persist();
  return report;
}

SyncSummary Node::sync_with(const std::string& peer) {
  SyncSummary summary;
  if (peer.rfind("http://", 0) == 0) {
    httplib::Client client(peer);
    client.set_connection_timeout(10);
    client.set_read_timeout(60);
    const auto mine = federation::format_vector(applied_vector());
    auto got = client.Get("/sync?vector=" + httplib::detail::encode_query_param(mine));
    if (!got) fail(ErrorCode::StorageFailure, "peer " + peer + " unreachable: " + httplib::to_string(got.error()));
    if (got->status != 200) fail(ErrorCode::StorageFailure, "peer " + peer + " answered " + std::to_string(got->status) + ": " + got->body);
    summary.pulled = apply_frames(as_bytes(got->body));
    const auto peer_vector = federation::parse_vector(got->get_header_value("X-Facekey-Vector"));

    const Bytes outgoing = pull_frames(peer_vector);
    auto put = client.Post("/sync", reinterpret_cast<const char*>(outgoing.data()), outgoing.size(),
                           "application/octet-stream");
    if (!put) fail(ErrorCode::StorageFailure, "peer " + peer + " unreachable: " + httplib::to_string(put.error()));
    if (put->status != 200) fail(ErrorCode::StorageFailure, "peer " + peer + " answered " + std::to_string(put->status) + ": " + put->body);
    const auto r = json::parse(put->body);
    summary.pushed.applied = r.at("applied").get<std::size_t>();
    summary.pushed.quarantined = r.at("quarantined").get<std::size_t>();
    summary.pushed.skipped = r.at("skipped").get<std::size_t>();
    summary.pushed.pending = r.at("pending").get<std::size_t>();
    return summary;
  }

  Node other(load_config(peer));
  if (other.node_id() == node_id()) fail(ErrorCode::InvalidArgument, "peer has the same node_id");
  summary.pulled = apply_frames(other.pull_frames(applied_vector()));
  summary.pushed = other.apply_frames(pull_frames(other.applied_vector()));
  return summary;
}

Bytes Node::export_index() const {
  std::shared_lock lock(mutex_);
  return registry_.index().snapshot();
}

std::size_t Node::identity_count() const {
  std::shared_lock lock(mutex_);
  return registry_.index().active_count();
}

json Node::state_json() const {
  std::shared_lock lock(mutex_);
  json identities = json::array();
  for (const auto& [id, rec] : registry_.index().records()) {
    json embeddings = json::array();
    for (const auto& e : rec.embeddings) {
      embeddings.push_back({{"at", format_timestamp(e.stamp.at)},
                            {"origin", e.stamp.origin},
                            {"seq", e.stamp.seq},
                            {"weights", e.embedding.weights},
                            {"dffs", e.embedding.dffs}});
    }
    auto j = to_json(rec);
    j["embeddings"] = embeddings;
    identities.push_back(j);
  }
  auto image_list = [](const registry::ImageStore& store) {
    json out = json::array();
    for (const auto& [id, img] : store.all()) {
      auto j = to_json(img);
      j["sha256"] = sha256_hex(faceml::encode_pgm(img.raster));
      out.push_back(j);
    }
    return out;
  };
  json suspects = json::array();
  for (const auto& [id, s] : workflows_.suspects().records()) {
    auto j = to_json(s, workflows_.suspect_image_ids(id));
    json embeddings = json::array();
    for (const auto& e : s.embeddings) embeddings.push_back({{"weights", e.weights}, {"dffs", e.dffs}});
    j["embeddings"] = embeddings;
    suspects.push_back(j);
  }
  json alerts = json::object();
  for (const auto& [station, list] : workflows_.alert_snapshot()) {
    json items = json::array();
    for (const auto& a : list) items.push_back(a.to_json());
    alerts[station] = items;
  }
  json log = json::array();
  for (const auto& e : replicator_.log()) {
    log.push_back({{"origin", e.origin_node},
                   {"seq", e.origin_seq},
                   {"at", format_timestamp(e.timestamp)},
                   {"kind", federation::kind_name(e.kind)},
                   {"payloadBytes", e.payload.size()}});
  }
  return json{{"nodeId", config_.node_id},
              {"vector", federation::format_vector(replicator_.applied_vector())},
              {"log", log},
              {"identities", identities},
              {"images", image_list(registry_.images())},
              {"suspects", suspects},
              {"suspectImages", image_list(workflows_.suspect_images())},
              {"workflows", workflows_.local_state()},
              {"alerts", alerts}};
}

}  // namespace facekey::gateway
