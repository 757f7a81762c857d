#pragma once

// Minimal RIFF/WAVE reader and writer: mono 16-bit PCM or 32-bit float.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "amd/audio_frontend.hpp"
#include "amd/errors.hpp"

namespace amd::wav {

namespace detail {

inline std::uint32_t u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}
inline std::uint16_t u16(const std::uint8_t* p) { return static_cast<std::uint16_t>(p[0] | p[1] << 8); }

inline void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
inline void put16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

}  // namespace detail

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

inline PcmChunk parse(const std::vector<std::uint8_t>& b) {
  using detail::u16;
  using detail::u32;
  if (b.size() < 12 || std::memcmp(b.data(), "RIFF", 4) != 0 || std::memcmp(b.data() + 8, "WAVE", 4) != 0)
    throw UnsupportedFormat("not a RIFF/WAVE file");
  std::size_t pos = 12;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  while (pos + 8 <= b.size()) {
    const std::uint32_t size = u32(&b[pos + 4]);
    const std::size_t body = pos + 8;
    if (body + size > b.size()) throw UnsupportedFormat("truncated WAV chunk");
    if (std::memcmp(&b[pos], "fmt ", 4) == 0) {
      if (size < 16) throw UnsupportedFormat("short fmt chunk");
      format = u16(&b[body]);
      channels = u16(&b[body + 2]);
      rate = u32(&b[body + 4]);
      bits = u16(&b[body + 14]);
      if (format == kFormatExtensible && size >= 26) format = u16(&b[body + 24]);
      have_fmt = true;
    } else if (std::memcmp(&b[pos], "data", 4) == 0) {
      if (!have_fmt) throw UnsupportedFormat("data chunk before fmt chunk");
      validate_format(static_cast<int>(rate), channels);
      if (format == kFormatPcm && bits == 16) {
        std::vector<std::int16_t> s(size / 2);
        for (std::size_t i = 0; i < s.size(); ++i) s[i] = static_cast<std::int16_t>(u16(&b[body + 2 * i]));
        return PcmChunk::from_s16(std::move(s), static_cast<int>(rate));
      }
      if (format == kFormatFloat && bits == 32) {
        std::vector<float> s(size / 4);
        std::memcpy(s.data(), &b[body], s.size() * 4);
        return PcmChunk::from_float(std::move(s), static_cast<int>(rate));
      }
      throw UnsupportedFormat("only 16-bit PCM and 32-bit float WAV are supported");
    }
    pos = body + size + (size & 1);
  }
  throw UnsupportedFormat("WAV file has no data chunk");
}

inline PcmChunk read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UnreadableFile("cannot open '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse(bytes);
}

inline std::vector<std::uint8_t> serialize(const PcmChunk& chunk) {
  validate_format(chunk.sample_rate_hz, chunk.channel_count);
  const bool is_float = std::holds_alternative<std::vector<float>>(chunk.samples);
  const std::uint16_t bits = is_float ? 32 : 16;
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(chunk.size() * bits / 8);
  std::vector<std::uint8_t> out;
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  detail::put32(out, 36 + data_bytes);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  detail::put32(out, 16);
  detail::put16(out, is_float ? kFormatFloat : kFormatPcm);
  detail::put16(out, 1);
  detail::put32(out, static_cast<std::uint32_t>(chunk.sample_rate_hz));
  detail::put32(out, static_cast<std::uint32_t>(chunk.sample_rate_hz) * bits / 8);
  detail::put16(out, bits / 8);
  detail::put16(out, bits);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  detail::put32(out, data_bytes);
  if (is_float) {
    const auto& s = std::get<std::vector<float>>(chunk.samples);
    const auto* p = reinterpret_cast<const std::uint8_t*>(s.data());
    out.insert(out.end(), p, p + s.size() * 4);
  } else {
    for (auto v : std::get<std::vector<std::int16_t>>(chunk.samples)) detail::put16(out, static_cast<std::uint16_t>(v));
  }
  return out;
}

inline void write(const std::string& path, const PcmChunk& chunk) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UnreadableFile("cannot write '" + path + "'");
  const auto bytes = serialize(chunk);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace amd::wav
