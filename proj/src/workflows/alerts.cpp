#include "workflows/alerts.hpp"

#include <filesystem>
#include <fstream>

#include "common/bytes.hpp"
#include "common/error.hpp"

namespace facekey::workflows {

std::string_view alert_kind_name(AlertKind kind) noexcept {
  switch (kind) {
    case AlertKind::MessageAlert: return "messageAlert";
    case AlertKind::SuspectAlert: return "suspectAlert";
    case AlertKind::UnrecognizedAlert: return "unrecognizedAlert";
  }
  return "unknown";
}

nlohmann::json Alert::to_json() const {
  return nlohmann::json{{"kind", alert_kind_name(kind)},
                        {"stationId", station},
                        {"emittedAt", format_timestamp(emitted_at)},
                        {"payload", payload}};
}

Alert Alert::from_json(const nlohmann::json& j) {
  Alert a;
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "messageAlert") a.kind = AlertKind::MessageAlert;
  else if (kind == "suspectAlert") a.kind = AlertKind::SuspectAlert;
  else if (kind == "unrecognizedAlert") a.kind = AlertKind::UnrecognizedAlert;
  else fail(ErrorCode::StorageFailure, "unknown alert kind '" + kind + "'");
  a.station = j.at("stationId").get<std::string>();
  a.emitted_at = parse_timestamp(j.at("emittedAt").get<std::string>());
  a.payload = j.at("payload");
  return a;
}

AlertSink::AlertSink(std::optional<std::string> path) : path_(std::move(path)) {
  if (!path_ || !std::filesystem::exists(*path_)) return;
  std::ifstream in(*path_);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      alerts_.push_back(Alert::from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::StorageFailure, "corrupt alert sink '" + *path_ + "': " + e.what());
    }
  }
}

void AlertSink::push(const Alert& alert) {
  std::lock_guard lock(mutex_);
  if (path_) {
    auto parent = std::filesystem::path(*path_).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    append_file(*path_, as_bytes(alert.to_json().dump() + "\n"));
  }
  alerts_.push_back(alert);
}

std::vector<Alert> AlertSink::snapshot() const {
  std::lock_guard lock(mutex_);
  return alerts_;
}

std::size_t AlertSink::size() const {
  std::lock_guard lock(mutex_);
  return alerts_.size();
}

}  // namespace facekey::workflows
