#pragma once

#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "common/time.hpp"

namespace facekey::workflows {

enum class AlertKind { MessageAlert, SuspectAlert, UnrecognizedAlert };

std::string_view alert_kind_name(AlertKind kind) noexcept;

struct Alert {
  AlertKind kind = AlertKind::MessageAlert;
  std::string station;
  nlohmann::json payload;
  Timestamp emitted_at;

  // {"kind":..,"stationId":..,"emittedAt":..,"payload":..}
  nlohmann::json to_json() const;
  static Alert from_json(const nlohmann::json& j);
};

// Append-only per-station alert queue, mirrored one JSON object per line to
// a file when a path is configured. push() and snapshot() may race freely.
class AlertSink {
public:
  AlertSink() = default;
  // Existing lines in the file are loaded, so a sink survives restarts.
  explicit AlertSink(std::optional<std::string> path);

  void push(const Alert& alert);
  std::vector<Alert> snapshot() const;
  std::size_t size() const;
  const std::optional<std::string>& path() const noexcept { return path_; }

private:
  std::optional<std::string> path_;
  mutable std::mutex mutex_;
  std::vector<Alert> alerts_;
};

}  // namespace facekey::workflows
