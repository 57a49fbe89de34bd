#pragma once

#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "gateway/node.hpp"

namespace httplib {
class Server;
}

namespace facekey::gateway {

int http_status(ErrorCode code) noexcept;

// HTTP+JSON front of a Node. Every request maps onto one Node call; errors
// become {"code": <ErrorCode name>, "message": ...} with a matching status.
class HttpService {
public:
  explicit HttpService(Node& node);
  ~HttpService();

  // Binds host:port (port 0 picks a free one) and serves on a worker thread.
  // Throws ConfigError when the address cannot be bound.
  void start(const std::string& host, int port);
  int port() const noexcept { return port_; }
  // stop() may be called from any thread; wait() joins the worker.
  void stop();
  void wait();

private:
  void routes();

  Node& node_;
  std::unique_ptr<httplib::Server> server_;
  std::thread worker_;
  std::mutex join_mutex_;
  int port_ = 0;
};

}  // namespace facekey::gateway
