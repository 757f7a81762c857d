#pragma once

// Multi-session serving gateway.
//
// Start (0x01)   JSON {session_id: 32 hex digits, sample_rate_hz, timeout_ms,
//                confidence_threshold, min_detection_time_ms, silence_db, mode}
// Audio (0x02)   16-byte session id, then PCM s16le at the session's rate
// End   (0x03)   16-byte session id
// Replies: Ack (0x80), FrameResult (0x81), FinalVerdict (0x82) and
// Error (0x83) {code, message, session_id?}, all JSON.

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "amd/detection_session.hpp"
#include "amd/wire.hpp"

namespace amd {

inline nlohmann::json to_json(const FrameResult& r) {
  return {{"frame_index", r.frame_index}, {"end_ms", r.end_ms},           {"probability", r.probability},
          {"confidence", r.confidence},   {"label", to_string(r.label)}, {"silent", r.silent}};
}

inline nlohmann::json to_json(const Verdict& v) {
  return {{"label", to_string(v.label)},
          {"confidence", v.confidence},
          {"elapsed_ms", v.elapsed_ms},
          {"reason", to_string(v.reason)},
          {"frames_processed", v.frames_processed},
          {"frames_skipped_silent", v.frames_skipped_silent}};
}

inline nlohmann::json to_json(const SessionParams& p) {
  return {{"timeout_ms", p.timeout_ms},
          {"confidence_threshold", p.confidence_threshold},
          {"min_detection_time_ms", p.min_detection_time_ms},
          {"silence_db", p.silence.threshold_dbfs}};
}

/// Fills defaults for absent keys and validates; throws BadParams.
inline SessionParams session_params_from_json(const nlohmann::json& j) {
  SessionParams p;
  try {
    p.timeout_ms = j.value("timeout_ms", p.timeout_ms);
    p.confidence_threshold = j.value("confidence_threshold", p.confidence_threshold);
    p.min_detection_time_ms = j.value("min_detection_time_ms", p.min_detection_time_ms);
    p.silence.threshold_dbfs = j.value("silence_db", p.silence.threshold_dbfs);
  } catch (const nlohmann::json::exception& e) {
    throw BadParams(std::string("bad session parameter: ") + e.what());
  }
  p.validate();
  return p;
}

/// Concurrent map of live sessions. Each entry carries its own lock so work
/// on one session never waits for another.
class SessionRegistry {
 public:
  struct Entry {
    std::mutex mutex;
    DetectionSession session;
    bool verdict_sent = false;

    template <typename... Args>
    explicit Entry(Args&&... args) : session(std::forward<Args>(args)...) {}
  };

  std::shared_ptr<Entry> insert(const wire::SessionId& id, std::shared_ptr<Entry> entry) {
    std::lock_guard lock(mutex_);
    if (!sessions_.emplace(id, entry).second) throw DuplicateSession("session " + wire::to_hex(id) + " already exists");
    return entry;
  }

  std::shared_ptr<Entry> find(const wire::SessionId& id) const {
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw UnknownSession("no session " + wire::to_hex(id));
    return it->second;
  }

  void erase(const wire::SessionId& id) {
    std::lock_guard lock(mutex_);
    sessions_.erase(id);
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return sessions_.size();
  }

 private:
  mutable std::mutex mutex_;
  std::map<wire::SessionId, std::shared_ptr<Entry>> sessions_;
};

class Gateway {
 public:
  Gateway(std::shared_ptr<const DetectionModel> model, InferenceMode default_mode = InferenceMode::Cached)
      : model_(std::move(model)), default_mode_(default_mode) {}

  /// Handles one request and returns the replies in order. Never throws for
  /// client errors; those become Error messages.
  std::vector<wire::Message> handle(const wire::Message& m) {
    std::vector<wire::Message> out;
    std::optional<wire::SessionId> id;
    try {
      switch (m.type) {
        case wire::MessageType::Start: out.push_back(handle_start(m.payload)); break;
        case wire::MessageType::Audio:
          id = wire::leading_session_id(m.payload);
          handle_audio(*id, std::span(m.payload).subspan(wire::kSessionIdBytes), out);
          break;
        case wire::MessageType::End:
          id = wire::leading_session_id(m.payload);
          handle_end(*id, out);
          break;
        default: throw BadMessage("message type not accepted by the gateway");
      }
    } catch (const Error& e) {
      out.push_back(error_message(e.code(), e.what(), id));
    } catch (const nlohmann::json::exception& e) {
      out.push_back(error_message("BadParams", e.what(), id));
    }
    return out;
  }

  wire::Message handle_start(std::span<const std::uint8_t> payload) {
    nlohmann::json j = nlohmann::json::parse(payload.begin(), payload.end(), nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw BadMessage("start payload must be a JSON object");
    if (!j.contains("session_id") || !j["session_id"].is_string()) throw BadMessage("start needs a session_id");
    const auto id = wire::session_id_from_hex(j["session_id"].get<std::string>());
    const auto params = session_params_from_json(j);
    const int rate = j.value("sample_rate_hz", kSampleRateHz);
    if (rate != 8000 && rate != 16000) throw BadParams("sample_rate_hz must be 8000 or 16000");
    InferenceMode mode = default_mode_;
    if (j.contains("mode")) {
      const auto s = j["mode"].get<std::string>();
      if (s == "stateful") mode = InferenceMode::Stateful;
      else if (s == "cached") mode = InferenceMode::Cached;
      else throw BadParams("mode must be 'stateful' or 'cached'");
    }
    registry_.insert(id, std::make_shared<SessionRegistry::Entry>(model_, params, mode, rate));
    auto ack = to_json(params);
    ack["session_id"] = wire::to_hex(id);
    ack["sample_rate_hz"] = rate;
    ack["mode"] = to_string(mode);
    return wire::Message::of_text(wire::MessageType::Ack, ack.dump());
  }

  void handle_audio(const wire::SessionId& id, std::span<const std::uint8_t> pcm, std::vector<wire::Message>& out) {
    auto entry = registry_.find(id);
    if (pcm.size() % 2 != 0) throw BadMessage("audio payload must hold whole 16-bit samples");
    std::vector<std::int16_t> samples(pcm.size() / 2);
    for (std::size_t i = 0; i < samples.size(); ++i)
      samples[i] = static_cast<std::int16_t>(static_cast<std::uint16_t>(pcm[2 * i] | (pcm[2 * i + 1] << 8)));
    std::lock_guard lock(entry->mutex);
    if (entry->session.finalized()) throw SessionFinalized("session " + wire::to_hex(id) + " already has a verdict");
    emit(id, *entry, entry->session.push_audio(PcmChunk::from_s16(std::move(samples), entry->session.sample_rate_hz())),
         out);
  }

  void handle_end(const wire::SessionId& id, std::vector<wire::Message>& out) {
    auto entry = registry_.find(id);
    {
      std::lock_guard lock(entry->mutex);
      emit(id, *entry, entry->session.end_stream(), out);
    }
    registry_.erase(id);
  }

  const SessionRegistry& registry() const { return registry_; }
  InferenceMode default_mode() const { return default_mode_; }

 private:
  static wire::Message error_message(const char* code, const std::string& what,
                                     const std::optional<wire::SessionId>& id) {
    nlohmann::json j{{"code", code}, {"message", what}};
    if (id) j["session_id"] = wire::to_hex(*id);
    return wire::Message::of_text(wire::MessageType::Error, j.dump());
  }

  static void emit(const wire::SessionId& id, SessionRegistry::Entry& entry, const SessionOutput& result,
                   std::vector<wire::Message>& out) {
    const auto hex = wire::to_hex(id);
    for (const auto& r : result.frames) {
      auto j = to_json(r);
      j["session_id"] = hex;
      out.push_back(wire::Message::of_text(wire::MessageType::FrameResult, j.dump()));
    }
    if (result.verdict && !entry.verdict_sent) {
      entry.verdict_sent = true;
      auto j = to_json(*result.verdict);
      j["session_id"] = hex;
      out.push_back(wire::Message::of_text(wire::MessageType::FinalVerdict, j.dump()));
    }
  }

  std::shared_ptr<const DetectionModel> model_;
  InferenceMode default_mode_;
  SessionRegistry registry_;
};

namespace net {

inline bool send_all(int fd, std::span<const std::uint8_t> bytes) {
  std::size_t sent = 0;
  while (sent < bytes.size()) {
    const auto n = ::send(fd, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    sent += static_cast<std::size_t>(n);
  }
  return true;
}

/// Splits "host:port"; a bare port binds to 127.0.0.1.
inline sockaddr_in parse_address(const std::string& address) {
  std::string host = "127.0.0.1";
  std::string port = address;
  if (auto colon = address.rfind(':'); colon != std::string::npos) {
    host = address.substr(0, colon);
    port = address.substr(colon + 1);
  }
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  try {
    addr.sin_port = htons(static_cast<std::uint16_t>(std::stoi(port)));
  } catch (const std::exception&) {
    throw BadParams("bad listen address '" + address + "'");
  }
  if (host.empty() || host == "*") host = "0.0.0.0";
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) throw BadParams("bad host '" + host + "'");
  return addr;
}

}  // namespace net

/// TCP front end: one reader thread per connection. Requests on a connection
/// are answered in order; connections proceed independently.
class GatewayServer {
 public:
  explicit GatewayServer(Gateway& gateway) : gateway_(gateway) {}
  ~GatewayServer() { stop(); }

  GatewayServer(const GatewayServer&) = delete;
  GatewayServer& operator=(const GatewayServer&) = delete;

  /// Binds and starts accepting; returns the bound port.
  std::uint16_t start(const std::string& address) {
    auto addr = net::parse_address(address);
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw std::runtime_error("socket() failed");
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 || ::listen(listen_fd_, 64) != 0) {
      ::close(listen_fd_);
      listen_fd_ = -1;
      throw std::runtime_error("cannot listen on " + address + ": " + std::strerror(errno));
    }
    socklen_t len = sizeof(addr);
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    running_ = true;
    acceptor_ = std::thread([this] { accept_loop(); });
    return port_;
  }

  void stop() {
    if (!running_.exchange(false)) return;
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    if (acceptor_.joinable()) acceptor_.join();
    std::vector<std::thread> workers;
    {
      std::lock_guard lock(mutex_);
      for (int fd : connections_) ::shutdown(fd, SHUT_RDWR);
      workers.swap(workers_);
    }
    for (auto& t : workers) t.join();
  }

  std::uint16_t port() const { return port_; }

 private:
  void accept_loop() {
    while (running_) {
      const int fd = ::accept(listen_fd_, nullptr, nullptr);
      if (fd < 0) {
        if (errno == EINTR) continue;
        break;
      }
      int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      std::lock_guard lock(mutex_);
      connections_.push_back(fd);
      workers_.emplace_back([this, fd] { serve(fd); });
    }
  }

  void serve(int fd) {
    wire::Decoder decoder;
    std::vector<std::uint8_t> buf(64 * 1024);
    bool open = true;
    while (open) {
      const auto n = ::recv(fd, buf.data(), buf.size(), 0);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) break;
      decoder.feed(std::span(buf).first(static_cast<std::size_t>(n)));
      std::vector<std::uint8_t> reply;
      try {
        while (auto m = decoder.next())
          for (const auto& r : gateway_.handle(*m)) wire::append(reply, r);
      } catch (const BadMessage& e) {
        // framing is lost; report and drop the connection
        nlohmann::json j{{"code", e.code()}, {"message", e.what()}};
        wire::append(reply, wire::Message::of_text(wire::MessageType::Error, j.dump()));
        open = false;
      }
      if (!reply.empty() && !net::send_all(fd, reply)) break;
    }
    {
      std::lock_guard lock(mutex_);
      std::erase(connections_, fd);
    }
    ::close(fd);
  }

  Gateway& gateway_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> running_{false};
  std::thread acceptor_;
  std::mutex mutex_;
  std::vector<int> connections_;
  std::vector<std::thread> workers_;
};

/// Blocking client used by tests and the CLI.
class GatewayClient {
 public:
  GatewayClient(const std::string& address) {
    auto addr = net::parse_address(address);
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0 || ::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
      if (fd_ >= 0) ::close(fd_);
      throw std::runtime_error("cannot connect to " + address);
    }
  }
  ~GatewayClient() {
    if (fd_ >= 0) ::close(fd_);
  }
  GatewayClient(const GatewayClient&) = delete;
  GatewayClient& operator=(const GatewayClient&) = delete;

  void send(const wire::Message& m) {
    if (!net::send_all(fd_, wire::encode(m))) throw std::runtime_error("send failed");
  }

  /// Blocks for the next message; nullopt once the server closes.
  std::optional<wire::Message> receive() {
    std::vector<std::uint8_t> buf(64 * 1024);
    while (true) {
      if (auto m = decoder_.next()) return m;
      const auto n = ::recv(fd_, buf.data(), buf.size(), 0);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) return std::nullopt;
      decoder_.feed(std::span(buf).first(static_cast<std::size_t>(n)));
    }
  }

 private:
  int fd_ = -1;
  wire::Decoder decoder_;
};

}  // namespace amd
