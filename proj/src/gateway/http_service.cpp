#include "gateway/http_service.hpp"

#include <httplib.h>

#include "gateway/json_io.hpp"

namespace facekey::gateway {

using nlohmann::json;

int http_status(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::UnknownCode:
    case ErrorCode::UnknownSuspect:
    case ErrorCode::UnknownStation: return 404;
    case ErrorCode::DuplicateIdentity:
    case ErrorCode::ClockSkew: return 409;
    case ErrorCode::NotAFace:
    case ErrorCode::NotRecognized:
    case ErrorCode::PolicyViolation: return 422;
    case ErrorCode::ModelMissing: return 503;
    case ErrorCode::StorageFailure:
    case ErrorCode::Internal:
    case ErrorCode::ConfigError: return 500;
    default: return 400;
  }
}

namespace {

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

std::span<const std::uint8_t> body_bytes(const httplib::Request& req) {
  return {reinterpret_cast<const std::uint8_t*>(req.body.data()), req.body.size()};
}

faceml::GrayImage pgm_body(const httplib::Request& req) { return faceml::decode_pgm(body_bytes(req)); }

std::string param(const httplib::Request& req, const char* name) {
  if (!req.has_param(name)) fail(ErrorCode::InvalidArgument, std::string("missing query parameter '") + name + "'");
  return req.get_param_value(name);
}

std::string param_or(const httplib::Request& req, const char* name, std::string fallback) {
  return req.has_param(name) ? req.get_param_value(name) : std::move(fallback);
}

Timestamp at_param(const httplib::Request& req) { return parse_timestamp(param(req, "at")); }

// Personal fields from the query: name, address, phone, attr.<key>=<value>.
registry::PersonalData personal_params(const httplib::Request& req) {
  registry::PersonalData p;
  p.name = param_or(req, "name", "");
  p.address = param_or(req, "address", "");
  p.phone = param_or(req, "phone", "");
  for (const auto& [key, value] : req.params) {
    if (key.rfind("attr.", 0) == 0 && key.size() > 5) p.attributes[key.substr(5)] = value;
  }
  return p;
}

template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const Error& e) {
      send_json(res, error_json(e), http_status(e.code()));
    } catch (const std::exception& e) {
      send_json(res, error_json(Error(ErrorCode::Internal, e.what())), 500);
    }
  };
}

}  // namespace

HttpService::HttpService(Node& node) : node_(node), server_(std::make_unique<httplib::Server>()) {
  routes();
}

HttpService::~HttpService() {
  stop();
  wait();
}

void HttpService::routes() {
  auto& s = *server_;
  Node& node = node_;

  s.Get("/health", guarded([&node](const httplib::Request&, httplib::Response& res) {
    send_json(res, {{"status", "ok"}, {"identities", node.identity_count()}});
  }));

  s.Post("/enroll", guarded([&node](const httplib::Request& req, httplib::Response& res) {
    const auto image = pgm_body(req);
    const auto code = node.enroll(image, personal_params(req), at_param(req), param_or(req, "source", "enroll"));
    send_json(res, {{"code", code.render()}}, 201);
  }));

  s.Post("/identify", guarded([&node](const httplib::Request& req, httplib::Response& res) {
    send_json(res, to_json(node.identify(pgm_body(req))));
  }));

  s.Get(R"(/identity/([^/]+))", guarded([&node](const httplib::Request& req, httplib::Response& res) {
    send_json(res, to_json(node.lookup(codec::parse_code(req.matches[1].str()))));
  }));

  s.Post(R"(/identity/([^/]+)/images)", guarded([&node](const httplib::Request& req, httplib::Response& res) {
    const auto code = codec::parse_code(req.matches[1].str());
    const auto id = node.append_image(code, pgm_body(req), at_param(req), param_or(req, "source", "append"));
    send_json(res, {{"imageId", id}}, 201);
  }));

  s.Put(R"(/identity/([^/]+)/personal)", guarded([&node](const httplib::Request& req, httplib::Response& res) {
    const auto code = codec::parse_code(req.matches[1].str());
    const auto rec = node.update_personal(code, personal_from_json(parse_json_body(req.body)), at_param(req));
    send_json(res, to_json(rec));
  }));

  s.Post("/message", guarded([&node](const httplib::Request& req, httplib::Response& res) {
    const auto id = node.post_message(message_from_json(parse_json_body(req.body)));
    send_json(res, {{"messageId", id}}, 201);
  }));

  s.Put(R"(/preferences/([^/]+))", guarded([&node](const httplib::Request& req, httplib::Response& res) {
    const auto code = codec::parse_code(req.matches[1].str());
    const auto body = parse_json_body(req.body);
    if (!body.is_object() || !body.contains("suppressed")) {
      fail(ErrorCode::InvalidArgument, "body must be {\"suppressed\": [...]}");
    }
    node.set_preferences({code, categories_from_json(body.at("suppressed"))});
    send_json(res, {{"code", code.render()}, {"suppressed", body.at("suppressed")}});
  }));

  s.Post(R"(/alerts/scan/([^/]+))", guarded([&node](const httplib::Request& req, httplib::Response& res) {
    json out = json::array();
    for (const auto& m : node.alert_scan(codec::parse_code(req.matches[1].str()), at_param(req))) {
      out.push_back(to_json(m));
    }
    send_json(res, {{"messages", out}});
  }));

  s.Get(R"(/alerts/([^/]+))", guarded([&node](const httplib::Request& req, httplib::Response& res) {
    json out = json::array();
    for (const auto& a : node.alerts(req.matches[1].str())) out.push_back(a.to_json());
    send_json(res, {{"alerts", out}});
  }));

  s.Post(R"(/attendance/([^/]+))", guarded([&node](const httplib::Request& req, httplib::Response& res) {
    const auto direction = workflows::parse_direction(param_or(req, "direction", "in"));
    const auto ev = node.record_attendance(pgm_body(req), req.matches[1].str(), direction, at_param(req));
    send_json(res, to_json(ev), 201);
  }));

  s.Post(R"(/authorize/([^/]+)/([^/]+))", guarded([&node](const httplib::Request& req, httplib::Response& res) {
    const auto result = node.authorize(pgm_body(req), req.matches[1].str(), req.matches[2].str(), at_param(req));
    send_json(res, to_json(result));
  }));

  s.Post(R"(/surveil/([^/]+))", guarded([&node](const httplib::Request& req, httplib::Response& res) {
    const auto alert = node.surveil(pgm_body(req), req.matches[1].str(), at_param(req));
    send_json(res, {{"alert", alert ? alert->to_json() : json(nullptr)}});
  }));

  s.Get("/suspects", guarded([&node](const httplib::Request&, httplib::Response& res) {
    send_json(res, {{"suspects", node.suspects()}});
  }));

  s.Post(R"(/suspects/([^/]+)/link)", guarded([&node](const httplib::Request& req, httplib::Response& res) {
    send_json(res, to_json(node.link_suspect(codec::parse_code(req.matches[1].str()), at_param(req))));
  }));

  s.Get("/index", guarded([&node](const httplib::Request&, httplib::Response& res) {
    const Bytes snap = node.export_index();
    res.set_content(std::string(snap.begin(), snap.end()), "application/octet-stream");
  }));

  // Anti-entropy: GET returns the frames the caller lacks plus our vector in
  // X-Facekey-Vector; POST applies the caller's frames.
  s.Get("/sync", guarded([&node](const httplib::Request& req, httplib::Response& res) {
    const auto peer = federation::parse_vector(param_or(req, "vector", ""));
    const Bytes frames = node.pull_frames(peer);
    res.set_header("X-Facekey-Vector", federation::format_vector(node.applied_vector()));
    res.set_content(std::string(frames.begin(), frames.end()), "application/octet-stream");
  }));

  s.Post("/sync", guarded([&node](const httplib::Request& req, httplib::Response& res) {
    auto report = to_json(node.apply_frames(body_bytes(req)));
    report["vector"] = federation::format_vector(node.applied_vector());
    send_json(res, report);
  }));

  s.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return;
    const ErrorCode code = res.status == 404 ? ErrorCode::InvalidArgument : ErrorCode::Internal;
    send_json(res, {{"code", error_name(code)}, {"message", "no such endpoint or method"}}, res.status);
  });
}

void HttpService::start(const std::string& host, int port) {
  if (worker_.joinable()) fail(ErrorCode::ConfigError, "service already running");
  if (port == 0) {
    port_ = server_->bind_to_any_port(host);
  } else {
    port_ = server_->bind_to_port(host, port) ? port : -1;
  }
  if (port_ < 0) fail(ErrorCode::ConfigError, "cannot listen on " + host + ":" + std::to_string(port));
  worker_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

void HttpService::stop() {
  if (server_) server_->stop();
}

void HttpService::wait() {
  std::lock_guard lock(join_mutex_);
  if (worker_.joinable()) worker_.join();
}

}  // namespace facekey::gateway
