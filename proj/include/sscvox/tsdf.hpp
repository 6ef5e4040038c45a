#pragma once

#include "sscvox/core.hpp"

namespace sscvox {

inline constexpr double kDefaultTruncation = 0.24;

// Flipped TSDF: value = s * (1 - min(d, t) / t), where d is the Euclidean
// distance from the voxel center to the nearest surface-voxel center and
// s = +1 (visible empty or surface), -1 (occluded), 0 (outside view).
// Surface voxels are exactly 1. Throws ValidationError("empty scene") when the
// surface grid has no voxel set.
FloatGrid ftsdf_encode(const LabelGrid& surface, const VisibilityGrid& vis,
                       double truncation = kDefaultTruncation);

// Squared distance, in voxel units, from every voxel to the nearest nonzero
// voxel of `mask` (exact, separable). Voxels are +inf when the mask is empty.
std::vector<double> squared_distance_transform(const LabelGrid& mask);

}  // namespace sscvox
