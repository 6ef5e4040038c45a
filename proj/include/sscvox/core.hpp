#pragma once

// Shared vocabulary: grid placement, dense voxel containers, the class table
// and the pinhole camera model.
//
// World frame: X right, Y up, Z forward. X and Z are the horizontal axes.

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sscvox/error.hpp"

namespace sscvox {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

struct Index3 {
  int x = 0;
  int y = 0;
  int z = 0;
  friend bool operator==(const Index3&, const Index3&) = default;
};

// Label value reserved for voxels outside the view or with unknown ground truth.
inline constexpr std::uint8_t kUnknownLabel = 255;
inline constexpr int kNumClasses = 12;
inline constexpr int kNumSemanticClasses = 11;

struct GridSpec {
  std::array<int, 3> dims{1, 1, 1};
  double voxel_size = 1.0;
  Vec3 origin = Vec3::Zero();  // world position of voxel (0,0,0)'s minimum corner

  std::size_t voxel_count() const {
    return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  }
  Vec3 extent() const {
    return Vec3(dims[0], dims[1], dims[2]) * voxel_size;
  }
  bool contains(const Index3& i) const {
    return i.x >= 0 && i.y >= 0 && i.z >= 0 && i.x < dims[0] && i.y < dims[1] &&
           i.z < dims[2];
  }
  void validate() const;

  // Same dims and placement up to f32 round-off (files store f32).
  bool compatible(const GridSpec& other) const;

  // 240x144x240 at 0.02 m: 4.8 m wide, 2.88 m tall, 4.8 m deep.
  static GridSpec high_res(const Vec3& origin = Vec3::Zero());
  // 60x36x60 at 0.08 m over the same volume.
  static GridSpec low_res(const Vec3& origin = Vec3::Zero());
};

std::optional<Index3> world_to_index(const Vec3& p, const GridSpec& spec);

// Throws UsageError when the index is outside the grid.
Vec3 voxel_center(const Index3& i, const GridSpec& spec);

// Dense multi-channel voxel array, element order (channel, x, y, z) with z
// varying fastest.
template <typename T>
class VoxelGrid {
 public:
  using value_type = T;

  VoxelGrid() = default;
  VoxelGrid(const GridSpec& spec, int channels, T fill = T{})
      : spec_(spec), channels_(channels) {
    spec_.validate();
    if (channels < 1) throw UsageError("voxel grid needs at least one channel");
    data_.assign(spec_.voxel_count() * static_cast<std::size_t>(channels), fill);
  }
  VoxelGrid(const GridSpec& spec, int channels, std::vector<T> data)
      : spec_(spec), channels_(channels), data_(std::move(data)) {
    spec_.validate();
    if (channels < 1) throw UsageError("voxel grid needs at least one channel");
    if (data_.size() != spec_.voxel_count() * static_cast<std::size_t>(channels)) {
      throw ValidationError("voxel grid data length does not match dims");
    }
  }

  const GridSpec& spec() const { return spec_; }
  int channels() const { return channels_; }
  int nx() const { return spec_.dims[0]; }
  int ny() const { return spec_.dims[1]; }
  int nz() const { return spec_.dims[2]; }
  std::size_t voxels() const { return spec_.voxel_count(); }
  std::size_t size() const { return data_.size(); }

  std::size_t offset(int c, int x, int y, int z) const {
    return ((static_cast<std::size_t>(c) * nx() + x) * ny() + y) * nz() + z;
  }
  std::size_t offset(int x, int y, int z) const { return offset(0, x, y, z); }

  T& at(int c, int x, int y, int z) { return data_[offset(c, x, y, z)]; }
  const T& at(int c, int x, int y, int z) const { return data_[offset(c, x, y, z)]; }
  T& at(int x, int y, int z) { return data_[offset(0, x, y, z)]; }
  const T& at(int x, int y, int z) const { return data_[offset(0, x, y, z)]; }
  T& at(const Index3& i) { return at(i.x, i.y, i.z); }
  const T& at(const Index3& i) const { return at(i.x, i.y, i.z); }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  std::span<T> channel(int c) {
    return std::span<T>(data_).subspan(static_cast<std::size_t>(c) * voxels(), voxels());
  }
  std::span<const T> channel(int c) const {
    return std::span<const T>(data_).subspan(static_cast<std::size_t>(c) * voxels(),
                                             voxels());
  }

  friend bool operator==(const VoxelGrid& a, const VoxelGrid& b) {
    return a.channels_ == b.channels_ && a.spec_.compatible(b.spec_) &&
           a.data_ == b.data_;
  }

 private:
  GridSpec spec_;
  int channels_ = 0;
  std::vector<T> data_;
};

using LabelGrid = VoxelGrid<std::uint8_t>;
using FloatGrid = VoxelGrid<float>;

enum class Visibility : std::uint8_t {
  kVisibleEmpty = 0,
  kSurface = 1,
  kOccluded = 2,
  kOutsideView = 255,
};

using VisibilityGrid = VoxelGrid<Visibility>;

// True for ground-truth labels that mark an occupied voxel.
constexpr bool is_occupied_label(std::uint8_t label) {
  return label != 0 && label != kUnknownLabel;
}

struct ClassTable {
  std::vector<std::string> names;
  std::vector<double> weights;

  int size() const { return static_cast<int>(names.size()); }
  int index_of(std::string_view name) const;  // throws UsageError if unknown
  double weight(std::string_view name) const { return weights[index_of(name)]; }
  double weight_sum() const;
  void validate() const;
};

// empty, ceiling, floor, wall, window, chair, bed, sofa, table, tvs,
// furniture, objects. Weight 2 for chair, table, tvs and objects.
ClassTable default_class_table();

struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  void validate() const;
};

// Camera-to-world rigid transform: world = rotation * camera + translation.
struct Alignment {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 to_world(const Vec3& camera_point) const {
    return rotation * camera_point + translation;
  }
  Vec3 to_camera(const Vec3& world_point) const {
    return rotation.transpose() * (world_point - translation);
  }
  void validate() const;
};

// Per-pixel depth in meters, row-major; 0 marks an invalid pixel.
struct DepthMap {
  int width = 0;
  int height = 0;
  std::vector<float> values;

  DepthMap() = default;
  DepthMap(int w, int h, float fill = 0.0f)
      : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}

  float& at(int u, int v) { return values[static_cast<std::size_t>(v) * width + u]; }
  float at(int u, int v) const { return values[static_cast<std::size_t>(v) * width + u]; }
  void validate() const;
};

}  // namespace sscvox
