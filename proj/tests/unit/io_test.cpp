#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <random>

#include "oracles.hpp"
#include "sscvox/io.hpp"

namespace sscvox {
namespace {

std::uint32_t u32_at(const std::string& s, std::size_t off) {
  std::uint32_t v;
  std::memcpy(&v, s.data() + off, 4);
  return v;
}

float f32_at(const std::string& s, std::size_t off) {
  float v;
  std::memcpy(&v, s.data() + off, 4);
  return v;
}

TEST(Vxl, HeaderLayout) {
  LabelGrid g(GridSpec{{2, 3, 4}, 0.5, Vec3(1, 2, 3)}, 1, 7);
  const std::string bytes = encode_vxl(g, VxlEncoding::kDense);
  ASSERT_EQ(bytes.substr(0, 4), "VXL1");
  EXPECT_EQ(u32_at(bytes, 4), 1u);
  EXPECT_EQ(u32_at(bytes, 8), 2u);
  EXPECT_EQ(u32_at(bytes, 12), 3u);
  EXPECT_EQ(u32_at(bytes, 16), 4u);
  EXPECT_EQ(u32_at(bytes, 20), 0u);  // u8
  EXPECT_EQ(u32_at(bytes, 24), 0u);  // dense
  EXPECT_EQ(f32_at(bytes, 28), 1.0f);
  EXPECT_EQ(f32_at(bytes, 32), 2.0f);
  EXPECT_EQ(f32_at(bytes, 36), 3.0f);
  EXPECT_EQ(f32_at(bytes, 40), 0.5f);
  EXPECT_EQ(bytes.size(), 44u + 24u);
}

TEST(Vxl, RleLayout) {
  LabelGrid g(GridSpec{{1, 1, 5}, 1.0, Vec3::Zero()}, 1, 0);
  g.at(0, 0, 3) = 9;
  g.at(0, 0, 4) = 9;
  const std::string bytes = encode_vxl(g, VxlEncoding::kRle);
  EXPECT_EQ(u32_at(bytes, 24), 1u);
  ASSERT_EQ(bytes.size(), 44u + 10u);
  EXPECT_EQ(static_cast<std::uint8_t>(bytes[44]), 0);
  EXPECT_EQ(u32_at(bytes, 45), 3u);
  EXPECT_EQ(static_cast<std::uint8_t>(bytes[49]), 9);
  EXPECT_EQ(u32_at(bytes, 50), 2u);
}

TEST(Vxl, RoundTripsAllEncodings) {
  std::mt19937_64 rng(3);
  const GridSpec s{{5, 4, 6}, 0.08, Vec3(-1.25, 0.5, 2.0)};
  LabelGrid labels = oracle::random_labels(s, rng, 3, 0.1);
  for (auto enc : {VxlEncoding::kDense, VxlEncoding::kRle}) {
    const AnyGrid back = decode_vxl(encode_vxl(labels, enc));
    ASSERT_TRUE(std::holds_alternative<LabelGrid>(back));
    EXPECT_EQ(std::get<LabelGrid>(back), labels);
  }
  const FloatGrid probs = oracle::random_probs(s, 12, rng);
  const AnyGrid back = decode_vxl(encode_vxl(probs));
  ASSERT_TRUE(std::holds_alternative<FloatGrid>(back));
  EXPECT_EQ(std::get<FloatGrid>(back), probs);
}

TEST(Vxl, RleRunsMayNotCrossChannels) {
  LabelGrid g(GridSpec{{1, 1, 2}, 1.0, Vec3::Zero()}, 2, 4);
  std::string bytes = encode_vxl(g, VxlEncoding::kRle);
  // Two runs of length 2, one per channel; merge them into a single run of 4.
  ASSERT_EQ(bytes.size(), 44u + 10u);
  std::string merged = bytes.substr(0, 44);
  merged.push_back(4);
  merged += std::string("\x04\x00\x00\x00", 4);
  EXPECT_THROW(decode_vxl(merged), ValidationError);
}

TEST(Vxl, RejectsMalformedInput) {
  LabelGrid g(GridSpec{{2, 2, 2}, 1.0, Vec3::Zero()}, 1, 1);
  const std::string good = encode_vxl(g, VxlEncoding::kRle);
  EXPECT_THROW(decode_vxl(good.substr(0, good.size() - 1)), ValidationError);
  EXPECT_THROW(decode_vxl("VXL2" + good.substr(4)), ValidationError);
  EXPECT_THROW(decode_vxl(good + "x"), ValidationError);
  std::string short_run = good;
  short_run[45] = 7;  // run of 7 instead of 8
  EXPECT_THROW(decode_vxl(short_run), ValidationError);
  EXPECT_THROW(decode_vxl(""), ValidationError);
}

TEST(Vxl, VisibilityRoundTripAndValidation) {
  oracle::TempDir dir("vis");
  std::mt19937_64 rng(5);
  const GridSpec s{{3, 3, 3}, 0.1, Vec3::Zero()};
  const VisibilityGrid vis = oracle::random_visibility(s, rng);
  write_vxl(dir.path() / "v.vxl", vis);
  EXPECT_EQ(read_visibility_vxl(dir.path() / "v.vxl"), vis);
  LabelGrid bad(s, 1, 7);
  write_vxl(dir.path() / "bad.vxl", bad);
  EXPECT_THROW(read_visibility_vxl(dir.path() / "bad.vxl"), ValidationError);
}

TEST(Vxl, TypedReadersCheckDtype) {
  oracle::TempDir dir("typed");
  write_vxl(dir.path() / "f.vxl", FloatGrid(GridSpec{}, 1, 0.5f));
  EXPECT_THROW(read_label_vxl(dir.path() / "f.vxl"), ValidationError);
  EXPECT_NO_THROW(read_float_vxl(dir.path() / "f.vxl"));
  EXPECT_THROW(read_float_vxl(dir.path() / "missing.vxl"), IoError);
}

TEST(AtomicWrite, LeavesNoTemporaryFiles) {
  oracle::TempDir dir("atomic");
  atomic_write(dir.path() / "a.bin", "hello");
  atomic_write(dir.path() / "a.bin", "world!");
  EXPECT_EQ(read_file(dir.path() / "a.bin"), "world!");
  int files = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir.path())) {
    (void)e;
    ++files;
  }
  EXPECT_EQ(files, 1);
  EXPECT_THROW(atomic_write(dir.path() / "no" / "such" / "dir.bin", "x"), IoError);
}

TEST(Prb, RoundTripAndLayout) {
  ProbMap2D p(3, 2, 11);
  for (int v = 0; v < 2; ++v)
    for (int u = 0; u < 3; ++u) p.at((u + v) % 11, u, v) = 1.0f;
  const std::string bytes = encode_prb(p);
  EXPECT_EQ(bytes.substr(0, 4), "PRB1");
  EXPECT_EQ(u32_at(bytes, 4), 3u);
  EXPECT_EQ(u32_at(bytes, 8), 2u);
  EXPECT_EQ(u32_at(bytes, 12), 11u);
  EXPECT_EQ(bytes.size(), 16u + 4u * 66u);
  // (channel 1, row 0, column 1) is the second value of plane 1.
  EXPECT_EQ(f32_at(bytes, 16 + 4 * (6 + 1)), 1.0f);
  const ProbMap2D back = decode_prb(bytes);
  EXPECT_EQ(back.values, p.values);
  EXPECT_THROW(decode_prb(bytes.substr(0, bytes.size() - 4)), ValidationError);
}

constexpr const char* kConfig = R"({
  "fx": 500, "fy": 510, "cx": 320, "cy": 240, "width": 640, "height": 480,
  "rotation": [1,0,0, 0,1,0, 0,0,1], "translation": [0.1, 1.2, -0.3],
  "origin": [-2.4, 0, 0]
})";

TEST(Config, Parses) {
  const SceneConfig c = parse_config(kConfig);
  EXPECT_EQ(c.intrinsics.fy, 510);
  EXPECT_EQ(c.intrinsics.width, 640);
  EXPECT_EQ(c.alignment.translation, Vec3(0.1, 1.2, -0.3));
  ASSERT_TRUE(c.origin);
  EXPECT_EQ(c.require_origin(), Vec3(-2.4, 0, 0));
  const SceneConfig again = parse_config(config_to_json(c));
  EXPECT_EQ(again.alignment.rotation, c.alignment.rotation);
  EXPECT_EQ(again.intrinsics.cx, c.intrinsics.cx);
}

TEST(Config, RejectsBadDocuments) {
  EXPECT_THROW(parse_config("{"), ValidationError);
  EXPECT_THROW(parse_config(R"({"fx": 1})"), ValidationError);
  std::string bad_rot = kConfig;
  bad_rot.replace(bad_rot.find("[1,0,0"), 6, "[2,0,0");
  EXPECT_THROW(parse_config(bad_rot), ValidationError);
  std::string no_origin = kConfig;
  no_origin.replace(no_origin.find(",\n  \"origin\""), std::string(",\n  \"origin\": [-2.4, 0, 0]").size(), "");
  const SceneConfig c = parse_config(no_origin);
  EXPECT_FALSE(c.origin);
  EXPECT_THROW(c.require_origin(), ValidationError);
}

TEST(DepthPng, RoundTripsMillimeters) {
  oracle::TempDir dir("png");
  DepthMap d(4, 3, 0.0f);
  d.at(0, 0) = 1.234f;
  d.at(3, 2) = 65.535f;
  d.at(1, 1) = 0.0004f;  // rounds to 0 = invalid
  write_depth_png(dir.path() / "d.png", d);
  const DepthMap back = read_depth_png(dir.path() / "d.png");
  ASSERT_EQ(back.width, 4);
  ASSERT_EQ(back.height, 3);
  EXPECT_FLOAT_EQ(back.at(0, 0), 1.234f);
  EXPECT_FLOAT_EQ(back.at(3, 2), 65.535f);
  EXPECT_EQ(back.at(1, 1), 0.0f);
  EXPECT_EQ(back.at(2, 2), 0.0f);
}

TEST(DepthPng, RejectsNonPng) {
  oracle::TempDir dir("notpng");
  atomic_write(dir.path() / "d.png", "not a png");
  EXPECT_THROW(read_depth_png(dir.path() / "d.png"), ValidationError);
  const std::vector<std::uint8_t> rgb(2 * 2 * 3, 100);
  write_rgb_png(dir.path() / "rgb.png", 2, 2, rgb);
  EXPECT_THROW(read_depth_png(dir.path() / "rgb.png"), ValidationError);
}

}  // namespace
}  // namespace sscvox
