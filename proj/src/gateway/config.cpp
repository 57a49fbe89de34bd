#include "gateway/config.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "codec/envelope.hpp"
#include "common/error.hpp"
#include "federation/replication.hpp"


namespace facekey::gateway {

namespace {

const std::set<std::string> kKeys = {"node_id",     "data_dir",       "raster_size",    "k",
                                     "theta_accept", "theta_face",    "hamming_radius", "listen_addr",
                                     "seal_key_hex", "stations",      "fraud_attempts"};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc{} || ptr != end) {
    fail(ErrorCode::ConfigError, "config key '" + key + "': not a number: '" + value + "'");
  }
  return out;
}

}  // namespace

std::vector<workflows::StationConfig> parse_stations(const std::string& text) {
  std::vector<workflows::StationConfig> out;
  std::set<std::string> seen;
  std::stringstream list(text);
  std::string item;
  while (std::getline(list, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    std::vector<std::string> parts;
    std::stringstream fields(item);
    std::string f;
    while (std::getline(fields, f, ':')) parts.push_back(f);
    if (parts.size() < 2 || parts.size() > 4 || parts[0].empty()) {
      fail(ErrorCode::ConfigError, "station entry must be id:mode[:sinkPath[:label]]: '" + item + "'");
    }
    workflows::StationConfig st;
    st.id = parts[0];
    st.mode = workflows::parse_mode(parts[1]);
    if (parts.size() >= 3 && !parts[2].empty()) st.alert_sink_path = parts[2];
    if (parts.size() == 4 && !parts[3].empty()) st.law_enforcement_label = parts[3];
    if (!seen.insert(st.id).second) fail(ErrorCode::ConfigError, "duplicate station id '" + st.id + "'");
    out.push_back(std::move(st));
  }
  return out;
}

std::pair<std::string, int> split_listen_addr(const std::string& addr) {
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos || colon == 0) {
    fail(ErrorCode::ConfigError, "listen_addr must be host:port, got '" + addr + "'");
  }
  const int port = parse_number<int>("listen_addr", addr.substr(colon + 1));
  if (port < 0 || port > 65535) fail(ErrorCode::ConfigError, "listen_addr port out of range");
  return {addr.substr(0, colon), port};
}

Config parse_config(const std::string& text, const std::map<std::string, std::string>& overrides) {
  std::map<std::string, std::string> values;
  std::stringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ErrorCode::ConfigError, "config line " + std::to_string(lineno) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (!kKeys.count(key)) {
      fail(ErrorCode::ConfigError, "config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    values[key] = trim(line.substr(eq + 1));
  }
  for (const auto& [k, v] : overrides) values[k] = v;

  Config cfg;
  auto get = [&](const char* key) -> const std::string* {
    auto it = values.find(key);
    return it == values.end() ? nullptr : &it->second;
  };
  if (auto* v = get("node_id")) cfg.node_id = *v;
  if (!federation::valid_node_id(cfg.node_id)) {
    fail(ErrorCode::ConfigError, "node_id must be 1-64 chars of [A-Za-z0-9._-]");
  }
  if (auto* v = get("data_dir")) cfg.data_dir = *v;
  if (cfg.data_dir.empty()) fail(ErrorCode::ConfigError, "data_dir is required");
  if (auto* v = get("raster_size")) cfg.raster_size = parse_number<std::size_t>("raster_size", *v);
  if (cfg.raster_size < 2 || cfg.raster_size > 1024) {
    fail(ErrorCode::ConfigError, "raster_size must be within [2, 1024]");
  }
  if (auto* v = get("k")) cfg.k = parse_number<std::size_t>("k", *v);
  if (auto* v = get("theta_accept"); v && !v->empty()) {
    cfg.theta_accept = parse_number<double>("theta_accept", *v);
    if (*cfg.theta_accept < 0) fail(ErrorCode::ConfigError, "theta_accept must be >= 0");
  }
  if (auto* v = get("theta_face"); v && !v->empty()) {
    cfg.theta_face = parse_number<double>("theta_face", *v);
    if (*cfg.theta_face < 0) fail(ErrorCode::ConfigError, "theta_face must be >= 0");
  }
  if (auto* v = get("hamming_radius")) cfg.hamming_radius = parse_number<int>("hamming_radius", *v);
  if (cfg.hamming_radius < 0 || cfg.hamming_radius > 48) {
    fail(ErrorCode::ConfigError, "hamming_radius must be within [0, 48]");
  }
  if (auto* v = get("listen_addr")) cfg.listen_addr = *v;
  split_listen_addr(cfg.listen_addr);
  if (auto* v = get("seal_key_hex")) cfg.seal_key_hex = *v;
  try {
    codec::parse_key_hex(cfg.seal_key_hex);
  } catch (const Error& e) {
    fail(ErrorCode::ConfigError, std::string("seal_key_hex: ") + e.what());
  }
  if (auto* v = get("stations")) cfg.stations = parse_stations(*v);
  if (auto* v = get("fraud_attempts")) cfg.fraud_attempts = parse_number<int>("fraud_attempts", *v);
  if (cfg.fraud_attempts < 1) fail(ErrorCode::ConfigError, "fraud_attempts must be >= 1");
  return cfg;
}

Config load_config(const std::string& path) {
  std::string text;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::ConfigError, "cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  std::map<std::string, std::string> env;
  for (const auto& key : kKeys) {
    std::string name = "FACEKEY_";
    for (char c : key) name += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (const char* v = std::getenv(name.c_str())) env[key] = v;
  }
  return parse_config(text, env);
}

}  // namespace facekey::gateway
