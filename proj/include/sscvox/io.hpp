#pragma once

// File formats: VXL1 voxel volumes, PRB1 2D probability maps, the JSON camera
// config and 16-bit depth PNGs. Every writer goes through atomic_write.
//
// VXL1 layout (little-endian):
//   "VXL1" | u32 channels nx ny nz dtype encoding | f32 origin[3] voxel_size
//   | payload
// dtype 0 = u8, 1 = f32. encoding 0 = dense (channel, x, y, z), 1 = RLE
// (u8 only): (u8 value, u32 run) pairs; runs never cross a channel boundary.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "sscvox/core.hpp"
#include "sscvox/projection.hpp"

namespace sscvox {

enum class VxlDtype : std::uint32_t { kU8 = 0, kF32 = 1 };
enum class VxlEncoding : std::uint32_t { kDense = 0, kRle = 1 };

std::string encode_vxl(const LabelGrid& grid, VxlEncoding encoding = VxlEncoding::kRle);
std::string encode_vxl(const FloatGrid& grid);

using AnyGrid = std::variant<LabelGrid, FloatGrid>;
AnyGrid decode_vxl(std::string_view bytes);

void write_vxl(const std::filesystem::path& path, const LabelGrid& grid,
               VxlEncoding encoding = VxlEncoding::kRle);
void write_vxl(const std::filesystem::path& path, const FloatGrid& grid);
void write_vxl(const std::filesystem::path& path, const VisibilityGrid& grid);

AnyGrid read_vxl(const std::filesystem::path& path);
LabelGrid read_label_vxl(const std::filesystem::path& path);
FloatGrid read_float_vxl(const std::filesystem::path& path);
// Rejects values other than 0, 1, 2, 255.
VisibilityGrid read_visibility_vxl(const std::filesystem::path& path);

LabelGrid to_label_grid(const VisibilityGrid& vis);
VisibilityGrid to_visibility_grid(const LabelGrid& grid);

// PRB1: "PRB1" | u32 width height channels | f32 (channel, row, column).
std::string encode_prb(const ProbMap2D& probs);
ProbMap2D decode_prb(std::string_view bytes);
void write_prb(const std::filesystem::path& path, const ProbMap2D& probs);
ProbMap2D read_prb(const std::filesystem::path& path);

struct SceneConfig {
  CameraIntrinsics intrinsics;
  Alignment alignment;
  std::optional<Vec3> origin;  // grid origin; required by grid-producing commands

  Vec3 require_origin() const;
};

// Keys: fx, fy, cx, cy, width, height, rotation (row-major 9), translation (3),
// optional origin (3).
SceneConfig parse_config(std::string_view json_text);
SceneConfig read_config(const std::filesystem::path& path);
std::string config_to_json(const SceneConfig& config);

// 16-bit single-channel PNG in millimeters; 0 = invalid.
DepthMap read_depth_png(const std::filesystem::path& path);
void write_depth_png(const std::filesystem::path& path, const DepthMap& depth);
void write_rgb_png(const std::filesystem::path& path, int width, int height,
                   std::span<const std::uint8_t> rgb);

std::string read_file(const std::filesystem::path& path);
// Writes to a sibling temporary file and renames it into place.
void atomic_write(const std::filesystem::path& path, std::string_view bytes);

}  // namespace sscvox
