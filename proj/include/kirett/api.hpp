#pragma once

// HTTP facade over a Runtime. JSON bodies throughout; per-session events are
// served as server-sent events with the event sequence number as the event id.
//
//   400 malformed request        404 unknown session
//   409 state conflict           422 invalid entry, jump target or group

#include <chrono>
#include <memory>
#include <string>
#include <thread>

#include "kirett/runtime.hpp"

namespace kirett {

struct ApiOptions {
  /// How long an idle event stream waits before sending a keep-alive comment.
  std::chrono::milliseconds keepalive{1000};
};

class ApiService {
 public:
  explicit ApiService(std::shared_ptr<Runtime> runtime, ApiOptions options = {});
  ~ApiService();
  ApiService(const ApiService&) = delete;
  ApiService& operator=(const ApiService&) = delete;

  /// Port 0 picks a free port. Returns the bound port or -1.
  int bind(const std::string& host, int port);
  /// Serves until stop(); blocks.
  void listen();
  /// Serves on a background thread.
  void start();
  void stop();

  Runtime& runtime() { return *runtime_; }

 private:
  struct Impl;
  std::shared_ptr<Runtime> runtime_;
  std::unique_ptr<Impl> impl_;
  std::thread thread_;
};

/// Status code for an exception escaping a handler.
int http_status(const std::exception& e);

}  // namespace kirett
