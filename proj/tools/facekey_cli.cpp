// facekey command line. Talks to the library only through the C API.
#include <csignal>
#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "facekey/facekey.h"

using nlohmann::json;

namespace {

constexpr int kExitDomain = 1;
constexpr int kExitUsage = 2;

struct Failure {
  fk_status status;
};

void check(fk_status st) {
  if (st != FK_OK) throw Failure{st};
}

// Takes ownership of a library string.
std::string take(char* s) {
  std::string out = s ? s : "";
  fk_string_free(s);
  return out;
}

void print_json(char* s) { std::cout << json::parse(take(s)).dump(2) << "\n"; }

struct Personal {
  std::string name, address, phone;
  std::vector<std::string> attrs;  // key=value

  std::string to_json() const {
    json j{{"name", name}, {"address", address}, {"phone", phone}, {"attributes", json::object()}};
    for (const auto& kv : attrs) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw CLI::ValidationError("--attr", "expected key=value, got '" + kv + "'");
      j["attributes"][kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    return j.dump();
  }

  void add_to(CLI::App* cmd, bool name_required) {
    auto* opt = cmd->add_option("--name", name, "Full name");
    if (name_required) opt->required();
    cmd->add_option("--address", address, "Postal address");
    cmd->add_option("--phone", phone, "Phone number");
    cmd->add_option("--attr", attrs, "Extra attribute key=value (repeatable)");
  }
};

class Session {
public:
  explicit Session(const std::string& config) { check(fk_node_open(config.c_str(), &node_)); }
  ~Session() { fk_node_close(node_); }
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;
  fk_node* get() const { return node_; }

private:
  fk_node* node_ = nullptr;
};

fk_server* g_server = nullptr;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"facekey: face output code registry node"};
  app.require_subcommand(1);

  std::string config;
  if (const char* env = std::getenv("FACEKEY_CONFIG")) config = env;
  app.add_option("-c,--config", config, "Node config file (key=value); FACEKEY_CONFIG also works");

  int exit_code = 0;
  std::function<void()> action;

  // train
  std::string train_dir;
  std::uint32_t train_k = 0;
  auto* train = app.add_subcommand("train", "Train the eigenface model from a directory of PGM files");
  train->add_option("dir", train_dir, "Training directory")->required();
  train->add_option("--k", train_k, "Component cap (0: configured k)");
  train->callback([&] {
    action = [&] {
      Session s(config);
      char* out = nullptr;
      check(fk_train(s.get(), train_dir.c_str(), train_k, &out));
      print_json(out);
    };
  });

  // enroll
  std::string pgm, at, source;
  Personal personal;
  auto* enroll = app.add_subcommand("enroll", "Enroll a face; prints the new face output code");
  enroll->add_option("pgm", pgm, "Face image (PGM)")->required();
  personal.add_to(enroll, true);
  enroll->add_option("--at", at, "Enrollment time")->required();
  enroll->add_option("--source", source, "Capture source label")->default_val("enroll");
  enroll->callback([&] {
    action = [&] {
      Session s(config);
      char* code = nullptr;
      check(fk_enroll(s.get(), pgm.c_str(), personal.to_json().c_str(), at.c_str(), source.c_str(), &code));
      std::cout << take(code) << "\n";
    };
  });

  // identify
  auto* identify = app.add_subcommand("identify", "Identify a face");
  identify->add_option("pgm", pgm, "Face image (PGM)")->required();
  identify->callback([&] {
    action = [&] {
      Session s(config);
      char* out = nullptr;
      check(fk_identify(s.get(), pgm.c_str(), &out));
      const auto r = json::parse(take(out));
      const auto outcome = r.at("outcome").get<std::string>();
      if (outcome == "recognized") {
        std::cout << "RECOGNIZED " << r.at("code").get<std::string>() << " " << r.at("distance").get<double>() << "\n";
      } else if (outcome == "unrecognized") {
        std::cout << "UNRECOGNIZED\n";
        exit_code = kExitDomain;
      } else {
        std::cout << "NOT_A_FACE " << r.at("dffs").get<double>() << "\n";
        exit_code = kExitDomain;
      }
    };
  });

  // lookup
  std::string code;
  auto* lookup = app.add_subcommand("lookup", "Show an identity and its images");
  lookup->add_option("code", code, "Face output code")->required();
  lookup->callback([&] {
    action = [&] {
      Session s(config);
      char* out = nullptr;
      check(fk_lookup(s.get(), code.c_str(), &out));
      print_json(out);
    };
  });

  // append-image
  auto* append = app.add_subcommand("append-image", "Attach another face image to an identity");
  append->add_option("code", code, "Face output code")->required();
  append->add_option("pgm", pgm, "Face image (PGM)")->required();
  append->add_option("--at", at, "Capture time")->required();
  append->add_option("--source", source, "Capture source label")->default_val("append");
  append->callback([&] {
    action = [&] {
      Session s(config);
      std::uint64_t id = 0;
      check(fk_append_image(s.get(), code.c_str(), pgm.c_str(), at.c_str(), source.c_str(), &id));
      std::cout << json{{"imageId", id}}.dump(2) << "\n";
    };
  });

  // update-personal
  auto* update = app.add_subcommand("update-personal", "Replace an identity's personal data");
  update->add_option("code", code, "Face output code")->required();
  personal.add_to(update, true);
  update->add_option("--at", at, "Update time")->required();
  update->callback([&] {
    action = [&] {
      Session s(config);
      char* out = nullptr;
      check(fk_update_personal(s.get(), code.c_str(), personal.to_json().c_str(), at.c_str(), &out));
      print_json(out);
    };
  });

  // message
  std::string body, category, valid_from, valid_until;
  auto* message = app.add_subcommand("message", "Post a message for an identity");
  message->add_option("--to", code, "Target face output code")->required();
  message->add_option("--body", body, "Message text")->required();
  message->add_option("--category", category, "meeting|appointment|email|other")->required();
  message->add_option("--from", valid_from, "Valid from")->required();
  message->add_option("--until", valid_until, "Valid until")->required();
  message->callback([&] {
    action = [&] {
      Session s(config);
      const json m{{"targetCode", code}, {"body", body}, {"category", category},
                   {"validFrom", valid_from}, {"validUntil", valid_until}};
      std::uint64_t id = 0;
      check(fk_post_message(s.get(), m.dump().c_str(), &id));
      std::cout << json{{"messageId", id}}.dump(2) << "\n";
    };
  });

  // preferences
  std::vector<std::string> suppress;
  auto* prefs = app.add_subcommand("preferences", "Set the message categories an identity suppresses");
  prefs->add_option("code", code, "Face output code")->required();
  prefs->add_option("--suppress", suppress, "Category to suppress (repeatable, comma-separated)")->delimiter(',');
  prefs->callback([&] {
    action = [&] {
      Session s(config);
      check(fk_set_preferences(s.get(), code.c_str(), json(suppress).dump().c_str()));
      std::cout << json{{"code", code}, {"suppressed", suppress}}.dump(2) << "\n";
    };
  });

  // alerts
  std::string station;
  auto* alerts = app.add_subcommand("alerts", "Message scans and station alert sinks");
  alerts->require_subcommand(1);
  auto* scan = alerts->add_subcommand("scan", "Deliver the due messages for an identity");
  scan->add_option("code", code, "Face output code")->required();
  scan->add_option("--at", at, "Scan time")->required();
  scan->callback([&] {
    action = [&] {
      Session s(config);
      char* out = nullptr;
      check(fk_alert_scan(s.get(), code.c_str(), at.c_str(), &out));
      print_json(out);
    };
  });
  auto* alert_list = alerts->add_subcommand("list", "Show a station's alert sink");
  alert_list->add_option("station", station, "Station id")->required();
  alert_list->callback([&] {
    action = [&] {
      Session s(config);
      char* out = nullptr;
      check(fk_alerts(s.get(), station.c_str(), &out));
      print_json(out);
    };
  });

  // attendance
  std::string direction = "in";
  auto* attendance = app.add_subcommand("attendance", "Clock a recognized face in or out");
  attendance->add_option("pgm", pgm, "Face image (PGM)")->required();
  attendance->add_option("--station", station, "Station id")->required();
  attendance->add_option("--direction", direction, "in|out")->check(CLI::IsMember({"in", "out"}));
  attendance->add_option("--at", at, "Event time")->required();
  attendance->callback([&] {
    action = [&] {
      Session s(config);
      char* out = nullptr;
      check(fk_attendance(s.get(), pgm.c_str(), station.c_str(), direction.c_str(), at.c_str(), &out));
      print_json(out);
    };
  });

  // authorize
  std::string session_id;
  auto* authorize = app.add_subcommand("authorize", "Card-less banking authorization attempt");
  authorize->add_option("pgm", pgm, "Face image (PGM)")->required();
  authorize->add_option("--station", station, "Station id")->required();
  authorize->add_option("--session", session_id, "Session id")->required();
  authorize->add_option("--at", at, "Attempt time")->required();
  authorize->callback([&] {
    action = [&] {
      Session s(config);
      char* out = nullptr;
      check(fk_authorize(s.get(), pgm.c_str(), station.c_str(), session_id.c_str(), at.c_str(), &out));
      const auto r = json::parse(take(out));
      std::cout << r.dump(2) << "\n";
      if (r.at("outcome") != "authorized") exit_code = kExitDomain;
    };
  });

  // surveil
  auto* surveil = app.add_subcommand("surveil", "Match one surveillance frame against the suspect index");
  surveil->add_option("pgm", pgm, "Frame (PGM)")->required();
  surveil->add_option("--station", station, "Station id")->required();
  surveil->add_option("--at", at, "Frame time")->required();
  surveil->callback([&] {
    action = [&] {
      Session s(config);
      char* out = nullptr;
      check(fk_surveil(s.get(), pgm.c_str(), station.c_str(), at.c_str(), &out));
      print_json(out);
    };
  });

  // serve
  std::string listen;
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--listen", listen, "host:port (default: listen_addr from config)");
  serve->callback([&] {
    action = [&] {
      Session s(config);
      sigset_t set;
      sigemptyset(&set);
      sigaddset(&set, SIGINT);
      sigaddset(&set, SIGTERM);
      pthread_sigmask(SIG_BLOCK, &set, nullptr);
      check(fk_server_start(s.get(), listen.empty() ? nullptr : listen.c_str(), &g_server));
      std::cout << "listening on port " << fk_server_port(g_server) << std::endl;
      std::thread waiter([&set] {
        int sig = 0;
        sigwait(&set, &sig);
        fk_server_stop(g_server);
      });
      fk_server_wait(g_server);
      waiter.detach();
      fk_server_free(g_server);
      g_server = nullptr;
    };
  });

  // stream
  std::string manifest;
  auto* stream = app.add_subcommand("stream", "Replay a frame manifest through a station");
  stream->add_option("manifest", manifest, "Manifest: '<framePath> <timestamp> [session]' per line")->required();
  stream->add_option("--station", station, "Station id")->required();
  stream->callback([&] {
    action = [&] {
      Session s(config);
      char* out = nullptr;
      check(fk_stream(s.get(), manifest.c_str(), station.c_str(), &out));
      print_json(out);
    };
  });

  // sync
  std::string peer;
  auto* sync = app.add_subcommand("sync", "Two-way anti-entropy exchange with a peer");
  sync->add_option("--peer", peer, "http://host:port or a peer config file")->required();
  sync->callback([&] {
    action = [&] {
      Session s(config);
      char* out = nullptr;
      check(fk_sync(s.get(), peer.c_str(), &out));
      print_json(out);
    };
  });

  // export-index
  std::string path;
  auto* exp = app.add_subcommand("export-index", "Write the code index snapshot (FCIX)");
  exp->add_option("path", path, "Output file")->required();
  exp->callback([&] {
    action = [&] {
      Session s(config);
      check(fk_export_index(s.get(), path.c_str()));
    };
  });

  // suspects
  auto* suspects = app.add_subcommand("suspects", "Suspect index");
  suspects->require_subcommand(1);
  auto* list = suspects->add_subcommand("list", "List active suspects");
  list->callback([&] {
    action = [&] {
      Session s(config);
      char* out = nullptr;
      check(fk_suspects(s.get(), &out));
      print_json(out);
    };
  });
  auto* link = suspects->add_subcommand("link", "Link a suspect to the main registry");
  link->add_option("code", code, "Suspect face output code")->required();
  link->add_option("--at", at, "Link time")->required();
  link->callback([&] {
    action = [&] {
      Session s(config);
      char* out = nullptr;
      check(fk_link_suspect(s.get(), code.c_str(), at.c_str(), &out));
      print_json(out);
    };
  });

  // state
  auto* state = app.add_subcommand("state", "Dump the node's decrypted state as JSON");
  state->callback([&] {
    action = [&] {
      Session s(config);
      char* out = nullptr;
      check(fk_state(s.get(), &out));
      print_json(out);
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    action();
  } catch (const Failure&) {
    std::cerr << fk_last_error() << "\n";
    return kExitDomain;
  } catch (const CLI::ValidationError& e) {
    std::cerr << e.what() << "\n";
    return kExitUsage;
  }
  return exit_code;
}
