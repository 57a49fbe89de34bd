#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "workflows/workflows.hpp"

namespace facekey::gateway {

struct Config {
  std::string node_id;
  std::string data_dir;
  std::size_t raster_size = 64;
  std::size_t k = 0;  // 0: up to M-1, trimmed to 95% energy
  std::optional<double> theta_accept;  // unset: calibrated at train time
  std::optional<double> theta_face;
  int hamming_radius = 8;
  std::string listen_addr = "127.0.0.1:8080";
  std::string seal_key_hex;
  std::vector<workflows::StationConfig> stations;
  int fraud_attempts = workflows::kDefaultFraudAttempts;
};

// key=value lines, '#' comments. FACEKEY_<KEY> environment variables override
// file values; an empty path reads the environment only.
Config load_config(const std::string& path);
Config parse_config(const std::string& text, const std::map<std::string, std::string>& overrides);

// "id:mode[:sinkPath[:label]]" entries separated by commas.
std::vector<workflows::StationConfig> parse_stations(const std::string& text);

std::pair<std::string, int> split_listen_addr(const std::string& addr);

}  // namespace facekey::gateway
