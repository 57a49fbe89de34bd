#pragma once

#include <filesystem>
#include <memory>
#include <shared_mutex>

#include <json.hpp>

#include "faceml/calibration.hpp"
#include "faceml/pgm.hpp"
#include "gateway/config.hpp"
#include "registry/registry.hpp"
#include "workflows/workflows.hpp"

namespace facekey::gateway {

struct TrainSummary {
  std::size_t samples = 0;
  std::size_t labels = 0;
  std::size_t components = 0;
  faceml::Thresholds calibrated;
  registry::MatchSettings active;
};

struct StreamSummary {
  std::size_t frames = 0;
  std::size_t processed = 0;
  std::size_t skipped = 0;
  std::size_t alerts = 0;
};

struct SyncSummary {
  federation::ApplyReport pulled;  // entries received from the peer
  federation::ApplyReport pushed;  // entries the peer accepted from us
};

// One federation node: configuration, the replicated code index, the local
// image stores and the workflow state, persisted under data_dir. Readers
// share a lock; every mutation is serialized and persisted before returning.
//
// data_dir layout:
//   model.efm, calibration.cfg     trained model and derived thresholds
//   replication.log                every applied entry, as sync frames
//   workflow_state.json            node-local messages, sessions, attendance
//   images/, suspect_images/       PGM files + manifest
//   alerts/<station>.jsonl         default alert sinks
class Node {
public:
  explicit Node(Config config);
  ~Node();

  const Config& config() const noexcept { return config_; }
  const std::string& node_id() const noexcept { return config_.node_id; }

  TrainSummary train(const std::filesystem::path& dir, std::optional<std::size_t> k);
  bool has_model() const;

  codec::FaceOutputCode enroll(const faceml::GrayImage& image, const registry::PersonalData& personal,
                               Timestamp now, const std::string& source = "enroll");
  registry::MatchResult identify(const faceml::GrayImage& image) const;
  registry::LookupResult lookup(const codec::FaceOutputCode& code) const;
  std::uint64_t append_image(const codec::FaceOutputCode& code, const faceml::GrayImage& image,
                             Timestamp now, const std::string& source = "append");
  registry::IdentityRecord update_personal(const codec::FaceOutputCode& code,
                                           const registry::PersonalData& personal, Timestamp now);

  std::uint64_t post_message(workflows::Message draft);
  void set_preferences(const workflows::AlertPreference& preference);
  std::vector<workflows::Message> alert_scan(const codec::FaceOutputCode& code, Timestamp now);
  workflows::AttendanceEvent record_attendance(const faceml::GrayImage& image,
                                               const std::string& station,
                                               workflows::Direction direction, Timestamp now);
  workflows::AuthorizationResult authorize(const faceml::GrayImage& image, const std::string& station,
                                           const std::string& session, Timestamp now);
  std::optional<workflows::Alert> surveil(const faceml::GrayImage& image, const std::string& station,
                                          Timestamp now);
  workflows::LinkResult link_suspect(const codec::FaceOutputCode& suspect, Timestamp now);
  nlohmann::json suspects() const;
  std::vector<workflows::Alert> alerts(const std::string& station) const;

  // Manifest lines: "<framePath> <timestamp> [sessionId]"; relative paths
  // resolve against the manifest's directory. Unreadable frames are skipped.
  StreamSummary run_stream(const std::filesystem::path& manifest, const std::string& station);

  // Federation.
  federation::AppliedVector applied_vector() const;
  Bytes pull_frames(const federation::AppliedVector& peer) const;
  federation::ApplyReport apply_frames(std::span<const std::uint8_t> frames);
  // peer: "http://host:port" or the path of another node's config file.
  SyncSummary sync_with(const std::string& peer);

  Bytes export_index() const;
  std::size_t identity_count() const;

  // Canonical decrypted dump of every store, for equality checks.
  nlohmann::json state_json() const;

private:
  faceml::FaceRaster to_raster(const faceml::GrayImage& image) const;
  void load_model();
  void replay_log();
  void persist();
  void ensure_station(const std::string& station);
  federation::ApplyReport apply_locked(std::span<const federation::ReplicationEntry> entries);

  Config config_;
  std::filesystem::path dir_;
  federation::Replicator replicator_;
  registry::Registry registry_;
  workflows::Workflows workflows_;
  std::size_t persisted_entries_ = 0;
  mutable std::shared_mutex mutex_;
};

}  // namespace facekey::gateway
