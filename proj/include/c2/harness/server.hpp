#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "c2/harness/session.hpp"

namespace c2::harness {

/// A duplex message pipe carrying one JSON document per message.
class Channel {
 public:
  virtual ~Channel() = default;
  virtual void send(const std::string& message) = 0;
  /// Next message, or nullopt when the deadline passed or the peer left
  /// (check closed()). Without a deadline, blocks until either happens.
  virtual std::optional<std::string> receive(std::optional<std::chrono::milliseconds> deadline) = 0;
  virtual bool closed() const = 0;
};

enum class SessionOutcome { Completed, Disconnected };

/// Drives a session over a channel until the episode ends or the peer leaves.
SessionOutcome run_session(Channel& channel, Session& session);

using SessionFactory = std::function<std::unique_ptr<Session>()>;
using LogSink = std::function<void(const std::string&)>;

struct ServerOptions {
  std::string address = "127.0.0.1";
  /// Newline-delimited JSON over TCP; 0 picks a free port, nullopt disables.
  std::optional<unsigned short> tcp_port = 0;
  /// HTTP port offering the WebSocket channel at /ws and, when ui_dir is
  /// set, static files; 0 picks a free port, nullopt disables.
  std::optional<unsigned short> http_port;
  std::string ui_dir;
};

/// Listens on the configured ports and runs one session per connection on
/// its own thread. Destruction stops listening and aborts live sessions.
class SessionServer {
 public:
  SessionServer(ServerOptions options, SessionFactory factory, LogSink log = {});
  ~SessionServer();
  SessionServer(const SessionServer&) = delete;
  SessionServer& operator=(const SessionServer&) = delete;

  unsigned short tcp_port() const;
  unsigned short http_port() const;

  /// Blocks until `count` sessions have completed their episode (0 = forever).
  void wait_for_completed(int count);
  int completed() const;
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Content type for a static file name.
std::string mime_type(const std::string& path);

/// Maps a request target onto a file below `root`; nullopt when the target
/// escapes the root or names no regular file.
std::optional<std::string> resolve_static(const std::string& root, const std::string& target);

}  // namespace c2::harness
