#pragma once

// The per-scene preprocessing chain: depth -> surface voxels and visibility at
// high resolution -> F-TSDF, plus prior projection and visibility at low
// resolution.

#include "sscvox/io.hpp"
#include "sscvox/projection.hpp"

namespace sscvox {

struct SceneGrids {
  GridSpec high = GridSpec::high_res();
  GridSpec low = GridSpec::low_res();
  double truncation = 0.24;
};

struct ProcessedScene {
  LabelGrid surface;         // high res
  VisibilityGrid high_vis;
  FloatGrid tsdf;
  FloatGrid priors;          // low res, 12 channels
  VisibilityGrid low_vis;    // low res, margin = one low-res voxel
  PriorDiagnostics diagnostics;
};

ProcessedScene process_scene(const DepthMap& depth, const SceneConfig& config,
                             const ProbMap2D& probs, const SceneGrids& grids);

}  // namespace sscvox
