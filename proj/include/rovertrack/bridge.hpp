#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rovertrack/config.hpp"
#include "rovertrack/vecsim.hpp"

namespace rovertrack::bridge {

inline constexpr const char* kProtocolVersion = "1";
inline constexpr std::uint32_t kMaxFrameBytes = 16u * 1024u * 1024u;

/// 4-byte little-endian length followed by the payload.
std::string encode_frame(const std::string& payload);

/// Incremental frame parser. Bytes are fed as they arrive; complete frames
/// (or oversize notices) come out in order.
class FrameDecoder {
 public:
  struct Event {
    enum class Kind { kFrame, kOversize } kind = Kind::kFrame;
    std::string payload;          // kFrame
    std::uint64_t declared = 0;   // kOversize: announced length, skipped
  };

  void feed(const char* data, std::size_t size);
  std::optional<Event> next();
  std::size_t buffered() const { return buf_.size() - pos_; }

 private:
  std::string buf_;
  std::size_t pos_ = 0;
  std::uint64_t skip_ = 0;
};

Json error_message(const std::string& text);

/// Protocol state machine for one client. Pure with respect to transport:
/// every request object yields exactly one reply object.
class Session {
 public:
  explicit Session(RegimeConfig defaults = {});

  Json handle(const Json& request);
  /// Reply for a payload that is not valid JSON.
  Json handle_payload(const std::string& payload);

  bool closed() const { return closed_; }
  bool configured() const { return static_cast<bool>(venv_); }
  VecEnv* vec_env() { return venv_.get(); }
  std::uint64_t requests() const { return requests_; }

 private:
  Json on_hello();
  Json on_configure(const Json& req);
  Json on_reset(const Json& req);
  Json on_step(const Json& req);

  RegimeConfig defaults_;
  RegimeConfig config_;
  std::unique_ptr<VecEnv> venv_;
  bool needs_reset_ = true;
  bool closed_ = false;
  std::uint64_t requests_ = 0;
};

/// Converts a batch into its step_result message.
Json step_result_message(const BatchStep& batch);

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 0;  // 0: ephemeral
  RegimeConfig defaults;
  bool stop_on_close = true;  // a `close` request ends serve()
};

/// Single-session TCP server.
class Server {
 public:
  explicit Server(ServerOptions options);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Bound port (useful with port 0).
  int port() const { return port_; }
  /// Accept loop; returns after a `close` request (if stop_on_close) or stop().
  void serve();
  /// Thread-safe; makes serve() return.
  void stop();

  std::uint64_t sessions() const { return sessions_; }

 private:
  void run_session(int fd);

  ServerOptions options_;
  int listen_fd_ = -1;
  int port_ = 0;
  std::atomic<bool> stopping_{false};
  std::uint64_t sessions_ = 0;
};

/// Blocking client, mainly for tests and tooling.
class Client {
 public:
  Client(const std::string& host, int port);
  ~Client();
  Client(const Client&) = delete;
  Client& operator=(const Client&) = delete;

  Json request(const Json& message);
  /// Sends raw bytes (for fuzzing) without waiting for a reply.
  void send_raw(const std::string& bytes);
  /// Waits for one framed reply.
  Json receive();

 private:
  int fd_ = -1;
  FrameDecoder decoder_;
};

/// Parses "host:port".
std::pair<std::string, int> parse_address(const std::string& address);

}  // namespace rovertrack::bridge
