#include <gtest/gtest.h>

#include <filesystem>

#include "amd/weight_bundle.hpp"

using namespace amd;

namespace {

WeightBundle sample() {
  WeightBundle b;
  b.add("a", Tensor{{2, 3}, {1, 2, 3, 4, 5, 6}});
  b.add("b", Tensor{{1}, {-0.5f}});
  b.set_backbone({{"input_shape", {96, 64, 1}}, {"layers", nlohmann::json::array()}});
  return b;
}

}  // namespace

TEST(WeightBundle, RoundTrip) {
  const auto bytes = sample().serialize();
  ASSERT_GE(bytes.size(), 9u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "AMDW");
  EXPECT_EQ(bytes[4], 1);
  const auto back = WeightBundle::parse(bytes);
  EXPECT_EQ(back.names(), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(back.get("a").shape, (std::vector<std::size_t>{2, 3}));
  EXPECT_EQ(back.get("a").data, sample().get("a").data);
  EXPECT_EQ(back.get("b").data[0], -0.5f);
  ASSERT_TRUE(back.backbone());
  EXPECT_EQ((*back.backbone())["input_shape"][0], 96);
  EXPECT_EQ(back.serialize(), bytes);
}

TEST(WeightBundle, FileRoundTrip) {
  const auto path = (std::filesystem::temp_directory_path() / "amd_bundle_roundtrip.amdw").string();
  sample().write_file(path);
  EXPECT_EQ(WeightBundle::read_file(path).serialize(), sample().serialize());
  std::filesystem::remove(path);
  EXPECT_THROW(WeightBundle::read_file(path), FormatError);
}

TEST(WeightBundle, RejectsCorruption) {
  const auto good = sample().serialize();

  auto magic = good;
  magic[0] = 'X';
  EXPECT_THROW(WeightBundle::parse(magic), FormatError);

  auto version = good;
  version[4] = 2;
  EXPECT_THROW(WeightBundle::parse(version), FormatError);

  for (std::size_t cut : {std::size_t{3}, std::size_t{12}, good.size() - 1}) {
    std::vector<std::uint8_t> truncated(good.begin(), good.begin() + static_cast<std::ptrdiff_t>(cut));
    EXPECT_THROW(WeightBundle::parse(truncated), FormatError) << cut;
  }

  auto trailing = good;
  trailing.push_back(0);
  EXPECT_THROW(WeightBundle::parse(trailing), FormatError);

  auto header = good;
  header[9] = '!';
  EXPECT_THROW(WeightBundle::parse(header), FormatError);
}

TEST(WeightBundle, LookupAndMerge) {
  auto b = sample();
  EXPECT_TRUE(b.has("a"));
  EXPECT_THROW(b.get("missing"), FormatError);
  EXPECT_THROW(b.add("a", Tensor{{1}, {0}}), FormatError);
  EXPECT_THROW(b.add("c", Tensor{{2}, {0}}), ShapeError);
  WeightBundle other;
  other.add("c", Tensor{{1}, {7}});
  b.merge(other);
  EXPECT_EQ(b.get("c").data[0], 7.0f);
  EXPECT_THROW(b.merge(sample()), FormatError);
}
