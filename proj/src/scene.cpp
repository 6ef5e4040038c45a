#include "sscvox/scene.hpp"

#include "sscvox/tsdf.hpp"

namespace sscvox {

ProcessedScene process_scene(const DepthMap& depth, const SceneConfig& config,
                             const ProbMap2D& probs, const SceneGrids& grids) {
  const CameraIntrinsics& k = config.intrinsics;
  const Alignment& a = config.alignment;
  ProcessedScene out;
  const auto points = depth_to_points(depth, k, a);
  out.surface = surface_grid(points, grids.high);
  out.high_vis = visibility(depth, k, a, grids.high);
  out.tsdf = ftsdf_encode(out.surface, out.high_vis, grids.truncation);
  out.priors = project_priors(probs, depth, k, a, grids.low, &out.diagnostics);
  out.low_vis = visibility(depth, k, a, grids.low);
  return out;
}

}  // namespace sscvox
