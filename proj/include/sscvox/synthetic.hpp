#pragma once

// Procedural indoor scenes for tests, demos and toy training: a room of
// floor, ceiling and three walls with furniture boxes, rendered to a depth map
// by ray casting, with noisy 2D class probabilities derived from the true
// class of every pixel.
//
// All geometry is aligned to the low-resolution grid (each box covers whole
// low-res voxels, shrunk by 1 cm per face) so ground truth is unambiguous.

#include <cstdint>
#include <filesystem>

#include "sscvox/io.hpp"
#include "sscvox/net/trainer.hpp"
#include "sscvox/scene.hpp"

namespace sscvox {

// 40x24x40 at 0.12 m and 10x6x10 at 0.48 m: the full 4.8 x 2.88 x 4.8 m volume
// at toy resolution.
SceneGrids toy_grids();

struct SyntheticOptions {
  std::uint64_t seed = 0;
  GridSpec low = toy_grids().low;  // room fills this grid
  int image_width = 80;
  int image_height = 60;
  double focal = 60.0;
  int furniture = 4;
  double prior_strength = 4.0;   // logit margin of the true class
  double prior_noise = 1.0;      // stddev of per-pixel logit noise
  double prior_confusion = 0.1;  // chance a pixel favors a wrong class
};

struct SyntheticScene {
  SceneConfig config;
  DepthMap depth;  // millimeter-quantized
  ProbMap2D probs;
  LabelGrid gt;    // on options.low
};

SyntheticScene make_synthetic_scene(const SyntheticOptions& opts);

net::TrainingScene make_training_scene(const SyntheticScene& scene, const SceneGrids& grids);

// Writes depth.png, intrinsics.json, probs.prb and gt.vxl.
void write_scene_dir(const std::filesystem::path& dir, const SyntheticScene& scene);

}  // namespace sscvox
