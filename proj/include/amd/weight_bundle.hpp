#pragma once

// WeightBundle container.
//
//   offset 0   "AMDW"
//   offset 4   version byte 0x01
//   offset 5   u32 little-endian length N of the JSON header
//   offset 9   N bytes UTF-8 JSON: {"tensors":[{"name":..,"shape":[..]},..], "backbone":{..}?}
//   then       float32 little-endian tensors in header order, row-major, no padding
//
// The file must end exactly after the last tensor.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "amd/errors.hpp"

namespace amd {

static_assert(std::endian::native == std::endian::little, "WeightBundle I/O assumes a little-endian host");

inline constexpr char kBundleMagic[4] = {'A', 'M', 'D', 'W'};
inline constexpr std::uint8_t kBundleVersion = 0x01;

struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<float> data;

  std::size_t element_count() const {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
  }
};

class WeightBundle {
 public:
  void add(std::string name, Tensor t) {
    if (t.data.size() != t.element_count())
      throw ShapeError("tensor '" + name + "' data does not match its shape");
    if (tensors_.count(name)) throw FormatError("duplicate tensor '" + name + "'");
    order_.push_back(name);
    tensors_.emplace(std::move(name), std::move(t));
  }

  bool has(const std::string& name) const { return tensors_.count(name) != 0; }

  const Tensor& get(const std::string& name) const {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) throw FormatError("bundle has no tensor '" + name + "'");
    return it->second;
  }

  const std::vector<std::string>& names() const { return order_; }

  /// Graph description for the embedding backbone, if the bundle carries one.
  const std::optional<nlohmann::json>& backbone() const { return backbone_; }
  void set_backbone(nlohmann::json spec) { backbone_ = std::move(spec); }

  /// Merges tensors and backbone description of another bundle into this one.
  void merge(const WeightBundle& other) {
    for (const auto& n : other.order_) add(n, other.get(n));
    if (other.backbone_) {
      if (backbone_) throw FormatError("both bundles describe a backbone");
      backbone_ = other.backbone_;
    }
  }

  std::vector<std::uint8_t> serialize() const {
    nlohmann::json header;
    header["tensors"] = nlohmann::json::array();
    for (const auto& n : order_) header["tensors"].push_back({{"name", n}, {"shape", tensors_.at(n).shape}});
    if (backbone_) header["backbone"] = *backbone_;
    const std::string text = header.dump();
    std::vector<std::uint8_t> out(kBundleMagic, kBundleMagic + 4);
    out.push_back(kBundleVersion);
    const auto len = static_cast<std::uint32_t>(text.size());
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(len >> (8 * i)));
    out.insert(out.end(), text.begin(), text.end());
    for (const auto& n : order_) {
      const auto& d = tensors_.at(n).data;
      const auto* p = reinterpret_cast<const std::uint8_t*>(d.data());
      out.insert(out.end(), p, p + d.size() * sizeof(float));
    }
    return out;
  }

  static WeightBundle parse(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 9 || std::memcmp(bytes.data(), kBundleMagic, 4) != 0)
      throw FormatError("not a weight bundle (bad magic)");
    if (bytes[4] != kBundleVersion)
      throw FormatError("unsupported bundle version " + std::to_string(bytes[4]));
    std::uint32_t len = 0;
    for (int i = 0; i < 4; ++i) len |= static_cast<std::uint32_t>(bytes[5 + i]) << (8 * i);
    if (bytes.size() - 9 < len) throw FormatError("bundle truncated inside header");
    nlohmann::json header;
    try {
      header = nlohmann::json::parse(bytes.begin() + 9, bytes.begin() + 9 + len);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("bundle header is not valid JSON: ") + e.what());
    }
    if (!header.is_object() || !header.contains("tensors") || !header["tensors"].is_array())
      throw FormatError("bundle header lacks a tensor list");

    WeightBundle b;
    std::size_t offset = 9 + len;
    try {
      for (const auto& entry : header["tensors"]) {
        Tensor t;
        t.shape = entry.at("shape").get<std::vector<std::size_t>>();
        const auto name = entry.at("name").get<std::string>();
        const std::size_t bytes_needed = t.element_count() * sizeof(float);
        if (bytes.size() - offset < bytes_needed) throw FormatError("bundle truncated in tensor '" + name + "'");
        t.data.resize(t.element_count());
        std::memcpy(t.data.data(), bytes.data() + offset, bytes_needed);
        offset += bytes_needed;
        b.add(name, std::move(t));
      }
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("malformed tensor entry: ") + e.what());
    }
    if (offset != bytes.size()) throw FormatError("trailing bytes after last tensor");
    if (header.contains("backbone")) b.backbone_ = header["backbone"];
    return b;
  }

  static WeightBundle read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open weight bundle '" + path + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse(bytes);
  }

  void write_file(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write weight bundle '" + path + "'");
    const auto bytes = serialize();
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  }

 private:
  std::vector<std::string> order_;
  std::map<std::string, Tensor> tensors_;
  std::optional<nlohmann::json> backbone_;
};

}  // namespace amd
