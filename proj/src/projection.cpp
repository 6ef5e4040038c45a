#include "sscvox/projection.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace sscvox {

void ProbMap2D::validate() const {
  if (width < 1 || height < 1 || channels < 1 ||
      values.size() != static_cast<std::size_t>(width) * height * channels) {
    throw ValidationError("probability map size mismatch");
  }
  for (int v = 0; v < height; ++v) {
    for (int u = 0; u < width; ++u) {
      double sum = 0.0;
      for (int c = 0; c < channels; ++c) {
        const float p = at(c, u, v);
        if (!(p >= 0.0f && p <= 1.0f)) {
          throw ValidationError("probabilities must lie in [0, 1]");
        }
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-5) {
        throw ValidationError("pixel probabilities do not sum to 1");
      }
    }
  }
}

ProbMap2D softmax2d(const LogitMap2D& logits) {
  const std::size_t pixels = static_cast<std::size_t>(logits.width) * logits.height;
  if (logits.channels < 1 || logits.values.size() != pixels * logits.channels) {
    throw ValidationError("logit map size mismatch");
  }
  ProbMap2D out(logits.width, logits.height, logits.channels);
  std::vector<double> e(logits.channels);
  for (std::size_t p = 0; p < pixels; ++p) {
    double m = -INFINITY;
    for (int c = 0; c < logits.channels; ++c) {
      const float x = logits.values[c * pixels + p];
      if (!std::isfinite(x)) throw ValidationError("non-finite logit");
      m = std::max(m, static_cast<double>(x));
    }
    double sum = 0.0;
    for (int c = 0; c < logits.channels; ++c) {
      e[c] = std::exp(logits.values[c * pixels + p] - m);
      sum += e[c];
    }
    for (int c = 0; c < logits.channels; ++c) {
      out.values[c * pixels + p] = static_cast<float>(e[c] / sum);
    }
  }
  return out;
}

namespace {

Vec3 camera_point(const CameraIntrinsics& k, double u, double v, double z) {
  return Vec3((u - k.cx) * z / k.fx, -(v - k.cy) * z / k.fy, z);
}

}  // namespace

std::vector<ProjectedPoint> depth_to_points(const DepthMap& depth, const CameraIntrinsics& k,
                                            const Alignment& a) {
  k.validate();
  if (depth.width != k.width || depth.height != k.height) {
    throw ValidationError("depth map size does not match the intrinsics");
  }
  std::vector<ProjectedPoint> points;
  points.reserve(depth.values.size());
  for (int v = 0; v < depth.height; ++v) {
    for (int u = 0; u < depth.width; ++u) {
      const float z = depth.at(u, v);
      if (!(z > 0.0f)) continue;
      points.push_back({a.to_world(camera_point(k, u, v, z)), u, v});
    }
  }
  return points;
}

NormalMap compute_normals(const DepthMap& depth, const CameraIntrinsics& k,
                          const Alignment& a, const NormalOptions& opts) {
  k.validate();
  if (depth.width != k.width || depth.height != k.height) {
    throw ValidationError("depth map size does not match the intrinsics");
  }
  if (opts.window < 3 || opts.window % 2 == 0) {
    throw UsageError("normal window must be odd and >= 3");
  }
  const int w = depth.width;
  const int h = depth.height;
  const int r = opts.window / 2;

  // Rotation only: normals are directions.
  std::vector<Vec3> pts(static_cast<std::size_t>(w) * h, Vec3::Zero());
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u)
      if (depth.at(u, v) > 0.0f)
        pts[static_cast<std::size_t>(v) * w + u] = a.rotation * camera_point(k, u, v, depth.at(u, v));

  NormalMap out;
  out.width = w;
  out.height = h;
  out.normals.assign(pts.size(), Vec3::Zero());
  out.rgb.assign(pts.size() * 3, 0);

  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      const float d0 = depth.at(u, v);
      if (!(d0 > 0.0f)) continue;
      Vec3 mean = Vec3::Zero();
      int n = 0;
      for (int dv = -r; dv <= r; ++dv) {
        for (int du = -r; du <= r; ++du) {
          const int uu = u + du, vv = v + dv;
          if (uu < 0 || vv < 0 || uu >= w || vv >= h) continue;
          const float d = depth.at(uu, vv);
          if (!(d > 0.0f) || std::abs(d - d0) > opts.max_depth_jump) continue;
          mean += pts[static_cast<std::size_t>(vv) * w + uu];
          ++n;
        }
      }
      if (n < opts.min_neighbors) continue;
      mean /= n;
      Mat3 cov = Mat3::Zero();
      for (int dv = -r; dv <= r; ++dv) {
        for (int du = -r; du <= r; ++du) {
          const int uu = u + du, vv = v + dv;
          if (uu < 0 || vv < 0 || uu >= w || vv >= h) continue;
          const float d = depth.at(uu, vv);
          if (!(d > 0.0f) || std::abs(d - d0) > opts.max_depth_jump) continue;
          const Vec3 q = pts[static_cast<std::size_t>(vv) * w + uu] - mean;
          cov += q * q.transpose();
        }
      }
      Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
      const auto& ev = es.eigenvalues();  // ascending
      // Collinear neighborhoods have no plane.
      if (ev[1] <= 1e-12 * std::max(1.0, ev[2])) continue;
      Vec3 normal = es.eigenvectors().col(0).normalized();
      const Vec3& p = pts[static_cast<std::size_t>(v) * w + u];
      if (normal.dot(-p) < 0.0) normal = -normal;  // camera sits at the rotated origin
      const std::size_t idx = static_cast<std::size_t>(v) * w + u;
      out.normals[idx] = normal;
      for (int c = 0; c < 3; ++c) {
        out.rgb[idx * 3 + c] =
            static_cast<std::uint8_t>(std::lround(255.0 * std::min(1.0, std::abs(normal[c]))));
      }
    }
  }
  return out;
}

LabelGrid surface_grid(std::span<const ProjectedPoint> points, const GridSpec& spec) {
  LabelGrid grid(spec, 1, 0);
  for (const auto& p : points) {
    if (auto i = world_to_index(p.world, spec)) grid.at(*i) = 1;
  }
  return grid;
}

VisibilityGrid visibility(const DepthMap& depth, const CameraIntrinsics& k, const Alignment& a,
                          const GridSpec& spec, double margin) {
  k.validate();
  if (depth.width != k.width || depth.height != k.height) {
    throw ValidationError("depth map size does not match the intrinsics");
  }
  const double tau = margin > 0.0 ? margin : spec.voxel_size;
  VisibilityGrid vis(spec, 1, Visibility::kOutsideView);
  for (int x = 0; x < spec.dims[0]; ++x) {
    for (int y = 0; y < spec.dims[1]; ++y) {
      for (int z = 0; z < spec.dims[2]; ++z) {
        const Vec3 c = a.to_camera(voxel_center({x, y, z}, spec));
        if (!(c.z() > 0.0)) continue;
        const long u = std::lround(k.fx * c.x() / c.z() + k.cx);
        const long v = std::lround(k.cy - k.fy * c.y() / c.z());
        if (u < 0 || v < 0 || u >= depth.width || v >= depth.height) continue;
        const double observed = depth.at(static_cast<int>(u), static_cast<int>(v));
        if (!(observed > 0.0)) continue;
        Visibility s;
        if (c.z() < observed - tau) {
          s = Visibility::kVisibleEmpty;
        } else if (std::abs(c.z() - observed) <= tau) {
          s = Visibility::kSurface;
        } else {
          s = Visibility::kOccluded;
        }
        vis.at(x, y, z) = s;
      }
    }
  }
  // Voxels holding an observed point are surface regardless of where their
  // center projects; this keeps silhouette voxels out of the free space.
  for (const auto& p : depth_to_points(depth, k, a)) {
    if (auto i = world_to_index(p.world, spec)) vis.at(*i) = Visibility::kSurface;
  }
  return vis;
}

FloatGrid project_priors(const ProbMap2D& probs, const DepthMap& depth,
                         const CameraIntrinsics& k, const Alignment& a, const GridSpec& low,
                         PriorDiagnostics* diagnostics) {
  if (probs.width != depth.width || probs.height != depth.height) {
    throw ValidationError("probability map and depth map resolutions differ");
  }
  if (probs.channels != kNumSemanticClasses) {
    throw ValidationError("probability map must have 11 channels");
  }
  const std::size_t voxels = low.voxel_count();
  std::vector<double> sums(voxels * kNumSemanticClasses, 0.0);
  std::vector<std::uint32_t> counts(voxels, 0);
  PriorDiagnostics diag;

  for (const auto& p : depth_to_points(depth, k, a)) {
    ++diag.valid_pixels;
    const auto i = world_to_index(p.world, low);
    if (!i) {
      ++diag.dropped_outside_grid;
      continue;
    }
    const std::size_t vox =
        (static_cast<std::size_t>(i->x) * low.dims[1] + i->y) * low.dims[2] + i->z;
    ++counts[vox];
    for (int c = 0; c < kNumSemanticClasses; ++c) {
      sums[vox * kNumSemanticClasses + c] += probs.at(c, p.u, p.v);
    }
  }

  FloatGrid out(low, kNumClasses, 0.0f);
  for (std::size_t vox = 0; vox < voxels; ++vox) {
    if (counts[vox] == 0) {
      out.data()[vox] = 1.0f;
      continue;
    }
    ++diag.occupied_voxels;
    for (int c = 0; c < kNumSemanticClasses; ++c) {
      out.data()[(c + 1) * voxels + vox] =
          static_cast<float>(sums[vox * kNumSemanticClasses + c] / counts[vox]);
    }
  }
  if (diagnostics) *diagnostics = diag;
  return out;
}

}  // namespace sscvox
