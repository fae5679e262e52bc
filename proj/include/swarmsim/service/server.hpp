#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include "swarmsim/config_io.hpp"

namespace swarmsim::service {

struct ServerOptions {
  std::string address = "127.0.0.1";
  std::uint16_t port = 8080;  // 0 picks a free port
  std::filesystem::path data_dir = "data";  // root for /phase-diagram files
};

/// WebSocket /session plus HTTP /health, /config, /snapshot and
/// /phase-diagram?file=. One simulation loop thread owns the session;
/// network I/O runs on its own thread and talks to the loop through a queue.
class Server {
 public:
  Server(RunConfig config, ServerOptions options);
  ~Server();

  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Port actually bound (useful with port 0).
  std::uint16_t port() const;

  /// Starts the loop and I/O threads and returns.
  void start();
  /// Blocks until SIGINT/SIGTERM or stop().
  void run_until_signal();
  void stop();

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

}  // namespace swarmsim::service
