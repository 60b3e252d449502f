#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "ergo/io.hpp"

namespace httplib {
class Server;
}

namespace ergo {

struct ServerConfig {
  std::filesystem::path data_dir = "data";
  std::string host = "127.0.0.1";
  int port = 8080;
  std::uint64_t seed = 1;  // manifests for unknown subjects derive from this
  int passive_window_ms = 1000;
  int choice_window_ms = 2500;
  int jitter_lo_ms = 1500;  // delay before the right gamble appears
  int jitter_hi_ms = 3000;
  std::optional<std::filesystem::path> static_dir;
};

/// Port from ERGO_PORT and data directory from ERGO_DATA_DIR when set.
ServerConfig server_config_from_env(ServerConfig base = {});

struct Reply {
  int status = 200;
  std::string body;  // JSON
};

class Session;

/// Task state machine behind the HTTP API. Each subject runs two days of a
/// passive session followed by the 312-trial active session. Trial records
/// are appended to <data_dir>/<id>.jsonl and the manifest kept in
/// <data_dir>/<id>.manifest.jsonl, so a restarted server resumes where the
/// subject left off.
class SessionServer {
 public:
  explicit SessionServer(ServerConfig cfg);
  ~SessionServer();

  Reply next_trial(const std::string& id);
  Reply respond(const std::string& id, const std::string& body);
  Reply summary(const std::string& id);

  /// Registers the three routes (and static assets when configured).
  void mount(httplib::Server& http);

  const ServerConfig& config() const { return cfg_; }

 private:
  std::shared_ptr<Session> session(const std::string& id);

  ServerConfig cfg_;
  std::mutex registry_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
};

/// Blocks serving until the process is stopped.
int run_server(const ServerConfig& cfg);

}  // namespace ergo
