#include "facekey/facekey.h"

#include <cstring>
#include <fstream>

#include "gateway/http_service.hpp"
#include "gateway/json_io.hpp"

using namespace facekey;
using gateway::json;

struct fk_node {
  std::unique_ptr<gateway::Node> node;
};

struct fk_server {
  fk_node* owner = nullptr;
  std::unique_ptr<gateway::HttpService> service;
};

namespace {

thread_local std::string last_error;

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::string str(const char* s) { return s ? std::string(s) : std::string(); }

const char* need(const char* s, const char* what) {
  if (!s) fail(ErrorCode::InvalidArgument, std::string(what) + " must not be NULL");
  return s;
}

template <typename Fn>
fk_status guarded(Fn&& fn) {
  try {
    fn();
    last_error.clear();
    return FK_OK;
  } catch (const Error& e) {
    last_error = gateway::error_json(e).dump();
    return static_cast<fk_status>(e.code());
  } catch (const std::exception& e) {
    last_error = gateway::error_json(Error(ErrorCode::Internal, e.what())).dump();
    return FK_INTERNAL;
  }
}

template <typename Fn>
fk_status with_node(fk_node* node, Fn&& fn) {
  return guarded([&] {
    if (!node || !node->node) fail(ErrorCode::InvalidArgument, "node handle is NULL");
    fn(*node->node);
  });
}

void put(char** out, const json& j) {
  if (out) *out = dup(j.dump());
}

faceml::GrayImage image(const char* path) { return faceml::read_pgm(need(path, "pgm path")); }

Timestamp at(const char* s) { return parse_timestamp(need(s, "timestamp")); }

}  // namespace

extern "C" {

const char* fk_status_name(fk_status status) {
  if (status == FK_OK) return "OK";
  static thread_local std::string name;
  name = std::string(error_name(static_cast<ErrorCode>(status)));
  return name.c_str();
}

const char* fk_last_error(void) { return last_error.c_str(); }

void fk_string_free(char* s) { std::free(s); }

const char* fk_version(void) { return "0.1.0"; }

fk_status fk_node_open(const char* config_path, fk_node** out) {
  return guarded([&] {
    if (!out) fail(ErrorCode::InvalidArgument, "out must not be NULL");
    *out = nullptr;
    auto node = std::make_unique<fk_node>();
    node->node = std::make_unique<gateway::Node>(gateway::load_config(str(config_path)));
    *out = node.release();
  });
}

void fk_node_close(fk_node* node) { delete node; }

fk_status fk_train(fk_node* node, const char* dir, uint32_t k, char** out_json) {
  return with_node(node, [&](gateway::Node& n) {
    std::optional<std::size_t> cap;
    if (k > 0) cap = k;
    const auto s = n.train(need(dir, "dir"), cap);
    put(out_json, {{"samples", s.samples},
                   {"labels", s.labels},
                   {"components", s.components},
                   {"calibratedAccept", s.calibrated.accept},
                   {"calibratedFace", s.calibrated.face},
                   {"thetaAccept", s.active.accept},
                   {"thetaFace", s.active.face},
                   {"hammingRadius", s.active.hamming_radius}});
  });
}

fk_status fk_enroll(fk_node* node, const char* pgm_path, const char* personal_json, const char* when,
                    const char* source, char** out_code) {
  return with_node(node, [&](gateway::Node& n) {
    const auto personal = gateway::personal_from_json(gateway::parse_json_body(need(personal_json, "personal")));
    const auto code = n.enroll(image(pgm_path), personal, at(when), source ? source : "enroll");
    if (out_code) *out_code = dup(code.render());
  });
}

fk_status fk_identify(fk_node* node, const char* pgm_path, char** out_json) {
  return with_node(node, [&](gateway::Node& n) { put(out_json, gateway::to_json(n.identify(image(pgm_path)))); });
}

fk_status fk_lookup(fk_node* node, const char* code, char** out_json) {
  return with_node(node, [&](gateway::Node& n) {
    put(out_json, gateway::to_json(n.lookup(codec::parse_code(need(code, "code")))));
  });
}

fk_status fk_append_image(fk_node* node, const char* code, const char* pgm_path, const char* when,
                          const char* source, uint64_t* out_image_id) {
  return with_node(node, [&](gateway::Node& n) {
    const auto id = n.append_image(codec::parse_code(need(code, "code")), image(pgm_path), at(when),
                                   source ? source : "append");
    if (out_image_id) *out_image_id = id;
  });
}

fk_status fk_update_personal(fk_node* node, const char* code, const char* personal_json, const char* when,
                             char** out_json) {
  return with_node(node, [&](gateway::Node& n) {
    const auto personal = gateway::personal_from_json(gateway::parse_json_body(need(personal_json, "personal")));
    put(out_json, gateway::to_json(n.update_personal(codec::parse_code(need(code, "code")), personal, at(when))));
  });
}

fk_status fk_post_message(fk_node* node, const char* message_json, uint64_t* out_id) {
  return with_node(node, [&](gateway::Node& n) {
    const auto id = n.post_message(gateway::message_from_json(gateway::parse_json_body(need(message_json, "message"))));
    if (out_id) *out_id = id;
  });
}

fk_status fk_set_preferences(fk_node* node, const char* code, const char* suppressed_json) {
  return with_node(node, [&](gateway::Node& n) {
    const auto cats = gateway::categories_from_json(gateway::parse_json_body(need(suppressed_json, "suppressed")));
    n.set_preferences({codec::parse_code(need(code, "code")), cats});
  });
}

fk_status fk_alert_scan(fk_node* node, const char* code, const char* when, char** out_json) {
  return with_node(node, [&](gateway::Node& n) {
    json out = json::array();
    for (const auto& m : n.alert_scan(codec::parse_code(need(code, "code")), at(when))) {
      out.push_back(gateway::to_json(m));
    }
    put(out_json, {{"messages", out}});
  });
}

fk_status fk_alerts(fk_node* node, const char* station, char** out_json) {
  return with_node(node, [&](gateway::Node& n) {
    json out = json::array();
    for (const auto& a : n.alerts(need(station, "station"))) out.push_back(a.to_json());
    put(out_json, {{"alerts", out}});
  });
}

fk_status fk_attendance(fk_node* node, const char* pgm_path, const char* station, const char* direction,
                        const char* when, char** out_json) {
  return with_node(node, [&](gateway::Node& n) {
    const auto dir = workflows::parse_direction(direction ? direction : "in");
    put(out_json, gateway::to_json(n.record_attendance(image(pgm_path), need(station, "station"), dir, at(when))));
  });
}

fk_status fk_authorize(fk_node* node, const char* pgm_path, const char* station, const char* session,
                       const char* when, char** out_json) {
  return with_node(node, [&](gateway::Node& n) {
    put(out_json, gateway::to_json(n.authorize(image(pgm_path), need(station, "station"),
                                               need(session, "session"), at(when))));
  });
}

fk_status fk_surveil(fk_node* node, const char* pgm_path, const char* station, const char* when,
                     char** out_json) {
  return with_node(node, [&](gateway::Node& n) {
    const auto alert = n.surveil(image(pgm_path), need(station, "station"), at(when));
    put(out_json, {{"alert", alert ? alert->to_json() : json(nullptr)}});
  });
}

fk_status fk_suspects(fk_node* node, char** out_json) {
  return with_node(node, [&](gateway::Node& n) { put(out_json, {{"suspects", n.suspects()}}); });
}

fk_status fk_link_suspect(fk_node* node, const char* suspect_code, const char* when, char** out_json) {
  return with_node(node, [&](gateway::Node& n) {
    put(out_json, gateway::to_json(n.link_suspect(codec::parse_code(need(suspect_code, "code")), at(when))));
  });
}

fk_status fk_stream(fk_node* node, const char* manifest_path, const char* station, char** out_json) {
  return with_node(node, [&](gateway::Node& n) {
    const auto s = n.run_stream(need(manifest_path, "manifest"), need(station, "station"));
    put(out_json, {{"frames", s.frames}, {"processed", s.processed}, {"skipped", s.skipped}, {"alerts", s.alerts}});
  });
}

fk_status fk_sync(fk_node* node, const char* peer, char** out_json) {
  return with_node(node, [&](gateway::Node& n) {
    const auto s = n.sync_with(need(peer, "peer"));
    put(out_json, {{"pulled", gateway::to_json(s.pulled)},
                   {"pushed", gateway::to_json(s.pushed)},
                   {"vector", federation::format_vector(n.applied_vector())}});
  });
}

fk_status fk_export_index(fk_node* node, const char* path) {
  return with_node(node, [&](gateway::Node& n) {
    const Bytes snap = n.export_index();
    write_file_atomic(need(path, "path"), snap);
  });
}

fk_status fk_state(fk_node* node, char** out_json) {
  return with_node(node, [&](gateway::Node& n) { put(out_json, n.state_json()); });
}

fk_status fk_health(fk_node* node, char** out_json) {
  return with_node(node, [&](gateway::Node& n) {
    put(out_json, {{"status", "ok"}, {"identities", n.identity_count()}});
  });
}

fk_status fk_server_start(fk_node* node, const char* listen_addr, fk_server** out) {
  return with_node(node, [&](gateway::Node& n) {
    if (!out) fail(ErrorCode::InvalidArgument, "out must not be NULL");
    *out = nullptr;
    const auto [host, port] = gateway::split_listen_addr(listen_addr ? listen_addr : n.config().listen_addr);
    auto server = std::make_unique<fk_server>();
    server->owner = node;
    server->service = std::make_unique<gateway::HttpService>(n);
    server->service->start(host, port);
    *out = server.release();
  });
}

int fk_server_port(const fk_server* server) { return server ? server->service->port() : -1; }

void fk_server_wait(fk_server* server) {
  if (server) server->service->wait();
}

void fk_server_stop(fk_server* server) {
  if (server) server->service->stop();
}

void fk_server_free(fk_server* server) { delete server; }

}  // extern "C"
