#pragma once

// Depth map to 3D geometry (points, surface voxels, visibility, normals) and
// the projection of 2D class probabilities into a low-resolution prior volume.

#include <cstdint>
#include <span>
#include <vector>

#include "sscvox/core.hpp"

namespace sscvox {

// Per-pixel class probabilities, stored (channel, row, column).
struct ProbMap2D {
  int width = 0;
  int height = 0;
  int channels = kNumSemanticClasses;
  std::vector<float> values;

  ProbMap2D() = default;
  ProbMap2D(int w, int h, int c)
      : width(w), height(h), channels(c),
        values(static_cast<std::size_t>(w) * h * c, 0.0f) {}

  float& at(int c, int u, int v) {
    return values[(static_cast<std::size_t>(c) * height + v) * width + u];
  }
  float at(int c, int u, int v) const {
    return values[(static_cast<std::size_t>(c) * height + v) * width + u];
  }
  // Checks ranges and per-pixel sums (1 +/- 1e-5).
  void validate() const;
};

// Per-pixel logits in the same layout as ProbMap2D.
struct LogitMap2D {
  int width = 0;
  int height = 0;
  int channels = kNumSemanticClasses;
  std::vector<float> values;
};

// Max-subtracted softmax over the channel axis. Throws ValidationError on
// non-finite logits.
ProbMap2D softmax2d(const LogitMap2D& logits);

struct ProjectedPoint {
  Vec3 world;
  int u = 0;
  int v = 0;
};

// Back-projects every valid pixel: camera point ((u-cx)z/fx, -(v-cy)z/fy, z),
// then maps it to the world frame through the alignment.
std::vector<ProjectedPoint> depth_to_points(const DepthMap& depth,
                                            const CameraIntrinsics& k,
                                            const Alignment& a);

struct NormalMap {
  int width = 0;
  int height = 0;
  std::vector<Vec3> normals;        // zero vector where undefined
  std::vector<std::uint8_t> rgb;    // interleaved, round(255 * |n|) per axis
};

struct NormalOptions {
  int window = 5;                    // odd side length of the fitting window
  double max_depth_jump = 0.05;      // neighbors further than this are dropped
  int min_neighbors = 3;
};

// Least-squares plane fit in 3D around each pixel, expressed in the aligned
// frame and oriented toward the camera.
NormalMap compute_normals(const DepthMap& depth, const CameraIntrinsics& k,
                          const Alignment& a, const NormalOptions& opts = {});

// 1 where at least one point falls inside the voxel.
LabelGrid surface_grid(std::span<const ProjectedPoint> points, const GridSpec& spec);

// Classifies every voxel center against the observed depth along its pixel ray.
// margin <= 0 selects one voxel size.
VisibilityGrid visibility(const DepthMap& depth, const CameraIntrinsics& k,
                          const Alignment& a, const GridSpec& spec,
                          double margin = 0.0);

struct PriorDiagnostics {
  std::size_t valid_pixels = 0;
  std::size_t dropped_outside_grid = 0;
  std::size_t occupied_voxels = 0;
};

// 12-channel prior volume (channel 0 = empty). Voxels hit by projected pixels
// hold the mean of their pixels' probabilities with empty = 0; all other voxels
// are (1, 0, ..., 0).
FloatGrid project_priors(const ProbMap2D& probs, const DepthMap& depth,
                         const CameraIntrinsics& k, const Alignment& a,
                         const GridSpec& low, PriorDiagnostics* diagnostics = nullptr);

}  // namespace sscvox
