#pragma once

// Gateway framing: u32 little-endian payload length, one type byte, payload.

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "amd/errors.hpp"

namespace amd::wire {

enum class MessageType : std::uint8_t {
  Start = 0x01,
  Audio = 0x02,
  End = 0x03,
  Ack = 0x80,
  FrameResult = 0x81,
  FinalVerdict = 0x82,
  Error = 0x83,
};

inline constexpr std::size_t kHeaderBytes = 5;
inline constexpr std::uint32_t kMaxPayload = 16u << 20;
inline constexpr std::size_t kSessionIdBytes = 16;

using SessionId = std::array<std::uint8_t, kSessionIdBytes>;

inline bool known_type(std::uint8_t t) {
  switch (static_cast<MessageType>(t)) {
    case MessageType::Start:
    case MessageType::Audio:
    case MessageType::End:
    case MessageType::Ack:
    case MessageType::FrameResult:
    case MessageType::FinalVerdict:
    case MessageType::Error:
      return true;
  }
  return false;
}

struct Message {
  MessageType type = MessageType::Error;
  std::vector<std::uint8_t> payload;

  std::string text() const { return {payload.begin(), payload.end()}; }

  static Message of_text(MessageType t, const std::string& s) { return {t, {s.begin(), s.end()}}; }
  bool operator==(const Message&) const = default;
};

inline void append(std::vector<std::uint8_t>& out, const Message& m) {
  const auto len = static_cast<std::uint32_t>(m.payload.size());
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(len >> (8 * i)));
  out.push_back(static_cast<std::uint8_t>(m.type));
  out.insert(out.end(), m.payload.begin(), m.payload.end());
}

inline std::vector<std::uint8_t> encode(const Message& m) {
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderBytes + m.payload.size());
  append(out, m);
  return out;
}

/// Incremental decoder for a byte stream. Throws BadMessage on unknown types
/// or oversized frames; the stream cannot be resynchronized after that.
class Decoder {
 public:
  void feed(std::span<const std::uint8_t> bytes) { buf_.insert(buf_.end(), bytes.begin(), bytes.end()); }

  std::optional<Message> next() {
    if (buf_.size() - pos_ < kHeaderBytes) return std::nullopt;
    std::uint32_t len = 0;
    for (int i = 0; i < 4; ++i) len |= static_cast<std::uint32_t>(buf_[pos_ + i]) << (8 * i);
    const std::uint8_t type = buf_[pos_ + 4];
    if (!known_type(type)) throw BadMessage("unknown message type " + std::to_string(type));
    if (len > kMaxPayload) throw BadMessage("payload of " + std::to_string(len) + " bytes exceeds limit");
    if (buf_.size() - pos_ - kHeaderBytes < len) return std::nullopt;
    Message m;
    m.type = static_cast<MessageType>(type);
    const auto first = buf_.begin() + static_cast<std::ptrdiff_t>(pos_ + kHeaderBytes);
    m.payload.assign(first, first + len);
    pos_ += kHeaderBytes + len;
    if (pos_ == buf_.size()) {
      buf_.clear();
      pos_ = 0;
    }
    return m;
  }

  std::size_t buffered() const { return buf_.size() - pos_; }

 private:
  std::vector<std::uint8_t> buf_;
  std::size_t pos_ = 0;
};

inline std::string to_hex(const SessionId& id) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s;
  for (auto b : id) {
    s.push_back(digits[b >> 4]);
    s.push_back(digits[b & 0xF]);
  }
  return s;
}

inline SessionId session_id_from_hex(const std::string& hex) {
  if (hex.size() != 2 * kSessionIdBytes) throw BadMessage("session_id must be 32 hex digits");
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw BadMessage("session_id must be 32 hex digits");
  };
  SessionId id{};
  for (std::size_t i = 0; i < kSessionIdBytes; ++i)
    id[i] = static_cast<std::uint8_t>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
  return id;
}

inline SessionId leading_session_id(std::span<const std::uint8_t> payload) {
  if (payload.size() < kSessionIdBytes) throw BadMessage("payload shorter than a session id");
  SessionId id{};
  std::copy_n(payload.begin(), kSessionIdBytes, id.begin());
  return id;
}

inline Message audio_message(const SessionId& id, std::span<const std::int16_t> pcm) {
  Message m{MessageType::Audio, {id.begin(), id.end()}};
  for (auto s : pcm) {
    const auto u = static_cast<std::uint16_t>(s);
    m.payload.push_back(static_cast<std::uint8_t>(u & 0xFF));
    m.payload.push_back(static_cast<std::uint8_t>(u >> 8));
  }
  return m;
}

inline Message end_message(const SessionId& id) { return {MessageType::End, {id.begin(), id.end()}}; }

}  // namespace amd::wire
