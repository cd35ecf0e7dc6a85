#include "rovertrack/bridge.hpp"

#include <arpa/inet.h>
#include <cerrno>
#include <cstring>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

namespace rovertrack::bridge {

std::string encode_frame(const std::string& payload) {
  if (payload.size() > kMaxFrameBytes) throw UsageError("bridge: payload exceeds frame limit");
  const auto n = static_cast<std::uint32_t>(payload.size());
  std::string out;
  out.reserve(4 + payload.size());
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((n >> (8 * i)) & 0xFF));
  out += payload;
  return out;
}

void FrameDecoder::feed(const char* data, std::size_t size) {
  if (pos_ > 0 && pos_ >= buf_.size() / 2) {
    buf_.erase(0, pos_);
    pos_ = 0;
  }
  buf_.append(data, size);
}

std::optional<FrameDecoder::Event> FrameDecoder::next() {
  if (skip_ > 0) {
    const std::uint64_t take = std::min<std::uint64_t>(skip_, buf_.size() - pos_);
    pos_ += static_cast<std::size_t>(take);
    skip_ -= take;
    if (skip_ > 0) return std::nullopt;
  }
  if (buf_.size() - pos_ < 4) return std::nullopt;
  std::uint32_t n = 0;
  for (int i = 0; i < 4; ++i) n |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf_[pos_ + static_cast<std::size_t>(i)])) << (8 * i);
  if (n > kMaxFrameBytes) {
    pos_ += 4;
    skip_ = n;
    Event e;
    e.kind = Event::Kind::kOversize;
    e.declared = n;
    // Consume whatever part of the payload is already buffered.
    const std::uint64_t take = std::min<std::uint64_t>(skip_, buf_.size() - pos_);
    pos_ += static_cast<std::size_t>(take);
    skip_ -= take;
    return e;
  }
  if (buf_.size() - pos_ < 4 + static_cast<std::size_t>(n)) return std::nullopt;
  Event e;
  e.payload = buf_.substr(pos_ + 4, n);
  pos_ += 4 + n;
  return e;
}

Json error_message(const std::string& text) {
  Json j;
  j["type"] = "error";
  j["message"] = text;
  return j;
}

// --- session -----------------------------------------------------------------

Session::Session(RegimeConfig defaults) : defaults_(std::move(defaults)), config_(defaults_) {}

Json Session::handle_payload(const std::string& payload) {
  Json req;
  try {
    req = Json::parse(payload);
  } catch (const nlohmann::json::exception& e) {
    ++requests_;
    return error_message(std::string("malformed JSON: ") + e.what());
  }
  return handle(req);
}

Json Session::handle(const Json& req) {
  ++requests_;
  Json reply;
  try {
    if (!req.is_object()) {
      reply = error_message("request must be a JSON object");
    } else if (!req.contains("type") || !req["type"].is_string()) {
      reply = error_message("request lacks a string 'type'");
    } else if (closed_) {
      reply = error_message("session is closed");
    } else {
      const std::string type = req["type"].get<std::string>();
      if (type == "hello") {
        reply = on_hello();
      } else if (type == "configure") {
        reply = on_configure(req);
      } else if (type == "reset") {
        reply = on_reset(req);
      } else if (type == "step") {
        reply = on_step(req);
      } else if (type == "close") {
        closed_ = true;
        venv_.reset();
        reply = Json{{"type", "close"}};
      } else {
        reply = error_message("unknown message type '" + type + "'");
      }
    }
  } catch (const std::exception& e) {
    reply = error_message(e.what());
  }
  if (req.is_object() && req.contains("id")) reply["id"] = req["id"];
  return reply;
}

Json Session::on_hello() {
  Json j;
  j["type"] = "hello";
  j["version"] = kProtocolVersion;
  j["obs_dim"] = kObsDim;
  j["act_dim"] = kActDim;
  return j;
}

Json Session::on_configure(const Json& req) {
  for (const auto& [key, value] : req.items())
    if (key != "type" && key != "id" && key != "config" && key != "n_envs" && key != "seed")
      throw ConfigError("configure: unknown field '" + key + "'");
  Json merged = to_json(defaults_);
  if (req.contains("config")) {
    if (!req["config"].is_object()) throw ConfigError("configure: 'config' must be an object");
    merged.merge_patch(req["config"]);
  }
  if (req.contains("n_envs")) merged["n_envs"] = req["n_envs"];
  if (req.contains("seed")) merged["master_seed"] = req["seed"];
  RegimeConfig cfg = regime_config_from_json(merged);
  venv_ = std::make_unique<VecEnv>(cfg);
  config_ = cfg;
  needs_reset_ = true;
  Json j;
  j["type"] = "configure";
  j["n_envs"] = cfg.n_envs;
  j["config"] = to_json(cfg);
  return j;
}

Json Session::on_reset(const Json& req) {
  if (req.contains("seed")) {
    if (!req["seed"].is_number_unsigned() && !(req["seed"].is_number_integer() && req["seed"].get<std::int64_t>() >= 0))
      throw ConfigError("reset: 'seed' must be a non-negative integer");
    RegimeConfig cfg = config_;
    cfg.master_seed = req["seed"].get<std::uint64_t>();
    venv_ = std::make_unique<VecEnv>(cfg);
    config_ = cfg;
  }
  if (!venv_) throw UsageError("reset before configure");
  const std::vector<double>& obs = venv_->reset();
  needs_reset_ = false;
  Json j;
  j["type"] = "reset";
  j["observations"] = obs;
  return j;
}

Json step_result_message(const BatchStep& b) {
  Json j;
  j["type"] = "step_result";
  j["observations"] = b.observations;
  j["rewards"] = b.rewards;
  Json term = Json::array(), trunc = Json::array(), infos = Json::array();
  for (std::size_t i = 0; i < b.rewards.size(); ++i) {
    term.push_back(b.terminated[i] != 0);
    trunc.push_back(b.truncated[i] != 0);
    const StepInfo& s = b.infos[i];
    Json info;
    info["auto_reset"] = s.auto_reset;
    info["left_extent"] = s.left_extent;
    info["action_non_finite"] = s.action_non_finite;
    info["obs_delay"] = s.obs_delay;
    info["act_delay"] = s.act_delay;
    info["actions_applied"] = s.actions_applied;
    if (s.auto_reset) {
      const auto a = s.final_observation.to_array();
      info["final_observation"] = std::vector<double>(a.begin(), a.end());
    }
    infos.push_back(std::move(info));
  }
  j["terminated"] = std::move(term);
  j["truncated"] = std::move(trunc);
  j["infos"] = std::move(infos);
  return j;
}

Json Session::on_step(const Json& req) {
  if (!venv_) throw UsageError("step before configure");
  if (needs_reset_) throw UsageError("step before reset");
  if (!req.contains("actions") || !req["actions"].is_array()) throw UsageError("step: 'actions' must be an array");
  const Json& a = req["actions"];
  const std::size_t expected = static_cast<std::size_t>(venv_->size()) * kActDim;
  if (a.size() != expected)
    throw UsageError("step: expected " + std::to_string(expected) + " action values, got " + std::to_string(a.size()));
  std::vector<double> actions(expected);
  for (std::size_t i = 0; i < expected; ++i) {
    if (!a[i].is_number()) throw UsageError("step: action " + std::to_string(i) + " is not a number");
    actions[i] = a[i].get<double>();
  }
  return step_result_message(venv_->step(actions));
}

// --- sockets -----------------------------------------------------------------

namespace {

void send_all(int fd, const std::string& bytes) {
  std::size_t sent = 0;
  while (sent < bytes.size()) {
    const ssize_t n = ::send(fd, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw std::runtime_error(std::string("bridge: send failed: ") + std::strerror(errno));
    }
    sent += static_cast<std::size_t>(n);
  }
}

void set_nodelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

sockaddr_in resolve(const std::string& host, int port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  const std::string h = host == "localhost" || host.empty() ? "127.0.0.1" : host;
  if (::inet_pton(AF_INET, h.c_str(), &addr.sin_addr) != 1) {
    addrinfo hints{}, *res = nullptr;
    hints.ai_family = AF_INET;
    if (::getaddrinfo(h.c_str(), nullptr, &hints, &res) != 0 || !res)
      throw ConfigError("bridge: cannot resolve host '" + host + "'");
    addr.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
    ::freeaddrinfo(res);
  }
  return addr;
}

}  // namespace

std::pair<std::string, int> parse_address(const std::string& address) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos) throw ConfigError("bridge: address must be host:port");
  int port = 0;
  try {
    std::size_t used = 0;
    port = std::stoi(address.substr(colon + 1), &used);
    if (used != address.size() - colon - 1) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw ConfigError("bridge: invalid port in '" + address + "'");
  }
  if (port < 0 || port > 65535) throw ConfigError("bridge: port out of range");
  return {address.substr(0, colon), port};
}

Server::Server(ServerOptions options) : options_(std::move(options)) {
  options_.defaults.validate();
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw std::runtime_error("bridge: socket() failed");
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr = resolve(options_.host, options_.port);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    const std::string err = std::strerror(errno);
    ::close(listen_fd_);
    throw std::runtime_error("bridge: bind failed: " + err);
  }
  if (::listen(listen_fd_, 1) != 0) {
    ::close(listen_fd_);
    throw std::runtime_error("bridge: listen failed");
  }
  socklen_t len = sizeof(addr);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

Server::~Server() {
  if (listen_fd_ >= 0) ::close(listen_fd_);
}

void Server::stop() { stopping_ = true; }

void Server::serve() {
  while (!stopping_) {
    pollfd p{listen_fd_, POLLIN, 0};
    const int r = ::poll(&p, 1, 100);
    if (r < 0 && errno != EINTR) throw std::runtime_error("bridge: poll failed");
    if (r <= 0) continue;
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    set_nodelay(fd);
    ++sessions_;
    try {
      run_session(fd);
    } catch (const std::exception&) {
      // A broken connection ends the session; the server keeps accepting.
    }
    ::close(fd);
  }
}

void Server::run_session(int fd) {
  Session session(options_.defaults);
  FrameDecoder decoder;
  std::vector<char> chunk(1 << 16);
  while (!stopping_) {
    pollfd p{fd, POLLIN, 0};
    const int r = ::poll(&p, 1, 100);
    if (r < 0 && errno != EINTR) return;
    if (r <= 0) continue;
    const ssize_t n = ::recv(fd, chunk.data(), chunk.size(), 0);
    if (n == 0) return;  // client went away; the session's environments go with it
    if (n < 0) {
      if (errno == EINTR) continue;
      return;
    }
    decoder.feed(chunk.data(), static_cast<std::size_t>(n));
    while (auto ev = decoder.next()) {
      Json reply;
      if (ev->kind == FrameDecoder::Event::Kind::kOversize)
        reply = error_message("frame of " + std::to_string(ev->declared) + " bytes exceeds the 16 MiB limit");
      else
        reply = session.handle_payload(ev->payload);
      // Error text can echo arbitrary client bytes; replace invalid UTF-8.
      send_all(fd, encode_frame(reply.dump(-1, ' ', false, Json::error_handler_t::replace)));
      if (session.closed()) {
        if (options_.stop_on_close) stopping_ = true;
        return;
      }
    }
  }
}

Client::Client(const std::string& host, int port) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw std::runtime_error("bridge: socket() failed");
  sockaddr_in addr = resolve(host, port);
  if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    const std::string err = std::strerror(errno);
    ::close(fd_);
    throw std::runtime_error("bridge: connect failed: " + err);
  }
  set_nodelay(fd_);
}

Client::~Client() {
  if (fd_ >= 0) ::close(fd_);
}

void Client::send_raw(const std::string& bytes) { send_all(fd_, bytes); }

Json Client::receive() {
  std::vector<char> chunk(1 << 16);
  while (true) {
    if (auto ev = decoder_.next()) {
      if (ev->kind == FrameDecoder::Event::Kind::kOversize) throw std::runtime_error("bridge: oversize reply");
      return Json::parse(ev->payload);
    }
    const ssize_t n = ::recv(fd_, chunk.data(), chunk.size(), 0);
    if (n == 0) throw std::runtime_error("bridge: connection closed by server");
    if (n < 0) {
      if (errno == EINTR) continue;
      throw std::runtime_error(std::string("bridge: recv failed: ") + std::strerror(errno));
    }
    decoder_.feed(chunk.data(), static_cast<std::size_t>(n));
  }
}

Json Client::request(const Json& message) {
  send_all(fd_, encode_frame(message.dump()));
  return receive();
}

}  // namespace rovertrack::bridge
