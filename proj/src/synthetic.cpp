#include "sscvox/synthetic.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace sscvox {
namespace {

constexpr std::uint8_t kCeiling = 1;
constexpr std::uint8_t kFloor = 2;
constexpr std::uint8_t kWall = 3;
constexpr std::uint8_t kWindow = 4;
constexpr double kShrink = 0.01;

struct Box {
  Vec3 lo, hi;
  std::uint8_t label;
};

// Box covering low-res voxels [a, b) per axis.
Box voxel_box(const GridSpec& g, Index3 a, Index3 b, std::uint8_t label) {
  const Vec3 lo = g.origin + Vec3(a.x, a.y, a.z) * g.voxel_size;
  const Vec3 hi = g.origin + Vec3(b.x, b.y, b.z) * g.voxel_size;
  return {lo + Vec3::Constant(kShrink), hi - Vec3::Constant(kShrink), label};
}

// Slab test; returns the entry distance along dir or +inf.
double intersect(const Box& b, const Vec3& origin, const Vec3& dir) {
  double t0 = 0.0, t1 = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    if (std::abs(dir[i]) < 1e-12) {
      if (origin[i] < b.lo[i] || origin[i] > b.hi[i]) return t1;
      continue;
    }
    double a = (b.lo[i] - origin[i]) / dir[i];
    double c = (b.hi[i] - origin[i]) / dir[i];
    if (a > c) std::swap(a, c);
    t0 = std::max(t0, a);
    t1 = std::min(t1, c);
    if (t0 > t1) return std::numeric_limits<double>::infinity();
  }
  return t0 > 0.0 ? t0 : std::numeric_limits<double>::infinity();
}

std::vector<Box> build_room(const GridSpec& low, std::mt19937_64& rng, int furniture) {
  const int nx = low.dims[0], ny = low.dims[1], nz = low.dims[2];
  if (nx < 4 || ny < 3 || nz < 4) throw UsageError("synthetic room needs a low-res grid of at least 4x3x4");
  std::vector<Box> boxes;
  boxes.push_back(voxel_box(low, {0, 0, 0}, {nx, 1, nz}, kFloor));
  boxes.push_back(voxel_box(low, {0, ny - 1, 0}, {nx, ny, nz}, kCeiling));
  boxes.push_back(voxel_box(low, {0, 1, 0}, {1, ny - 1, nz}, kWall));
  boxes.push_back(voxel_box(low, {nx - 1, 1, 0}, {nx, ny - 1, nz}, kWall));

  // Back wall with a window cut into it.
  std::uniform_int_distribution<int> wx(1, nx - 3);
  const int win_x = wx(rng);
  const int win_y = std::min(2, ny - 2);
  for (int x = 1; x < nx - 1; ++x) {
    for (int y = 1; y < ny - 1; ++y) {
      const bool window = (x == win_x || x == win_x + 1) && y == win_y;
      boxes.push_back(voxel_box(low, {x, y, nz - 1}, {x + 1, y + 1, nz}, window ? kWindow : kWall));
    }
  }

  std::vector<std::uint8_t> taken(static_cast<std::size_t>(nx) * nz, 0);
  std::uniform_int_distribution<int> cls(5, 11);
  std::uniform_int_distribution<int> px(1, nx - 2), pz(2, nz - 2), extent(1, 2);
  const int max_height = std::max(1, ny - 3);
  std::uniform_int_distribution<int> height(1, std::min(2, max_height));
  int placed = 0;
  for (int attempt = 0; attempt < 200 && placed < furniture; ++attempt) {
    const int x0 = px(rng), z0 = pz(rng);
    const int x1 = std::min(nx - 1, x0 + extent(rng));
    const int z1 = std::min(nz - 1, z0 + extent(rng));
    bool free = true;
    for (int x = x0 - 1; x <= x1 && free; ++x) {
      for (int z = z0 - 1; z <= z1 && free; ++z) {
        if (x >= 0 && z >= 0 && x < nx && z < nz && taken[x * nz + z]) free = false;
      }
    }
    if (!free) continue;
    for (int x = x0; x < x1; ++x) {
      for (int z = z0; z < z1; ++z) taken[x * nz + z] = 1;
    }
    const auto label = static_cast<std::uint8_t>(cls(rng));
    boxes.push_back(voxel_box(low, {x0, 1, z0}, {x1, 1 + height(rng), z1}, label));
    ++placed;
  }
  return boxes;
}

}  // namespace

SceneGrids toy_grids() {
  SceneGrids g;
  g.high = GridSpec{{40, 24, 40}, 0.12, Vec3::Zero()};
  g.low = GridSpec{{10, 6, 10}, 0.48, Vec3::Zero()};
  g.truncation = 0.24;
  return g;
}

SyntheticScene make_synthetic_scene(const SyntheticOptions& opts) {
  opts.low.validate();
  std::mt19937_64 rng(opts.seed);
  const GridSpec& low = opts.low;
  const std::vector<Box> boxes = build_room(low, rng, opts.furniture);

  SyntheticScene scene;
  CameraIntrinsics& k = scene.config.intrinsics;
  k.width = opts.image_width;
  k.height = opts.image_height;
  k.fx = k.fy = opts.focal;
  k.cx = opts.image_width / 2.0;
  k.cy = opts.image_height / 2.0;
  k.validate();
  const Vec3 extent = low.extent();
  scene.config.alignment.translation = low.origin + Vec3(0.5 * extent.x(), 0.5 * extent.y(), -0.3);
  scene.config.origin = low.origin;
  const Alignment& a = scene.config.alignment;

  scene.gt = LabelGrid(low, 1, 0);
  for (int x = 0; x < low.dims[0]; ++x) {
    for (int y = 0; y < low.dims[1]; ++y) {
      for (int z = 0; z < low.dims[2]; ++z) {
        const Vec3 c = voxel_center({x, y, z}, low);
        for (const Box& b : boxes) {
          if ((c.array() >= b.lo.array()).all() && (c.array() <= b.hi.array()).all()) {
            scene.gt.at(x, y, z) = b.label;
          }
        }
      }
    }
  }

  scene.depth = DepthMap(k.width, k.height);
  scene.probs = ProbMap2D(k.width, k.height, kNumSemanticClasses);
  std::normal_distribution<double> noise(0.0, opts.prior_noise);
  std::bernoulli_distribution confuse(opts.prior_confusion);
  std::uniform_int_distribution<int> wrong(0, kNumSemanticClasses - 2);
  for (int v = 0; v < k.height; ++v) {
    for (int u = 0; u < k.width; ++u) {
      const Vec3 dir_cam((u - k.cx) / k.fx, -(v - k.cy) / k.fy, 1.0);
      const Vec3 dir = a.rotation * dir_cam;
      double best = std::numeric_limits<double>::infinity();
      int label = 0;
      for (const Box& b : boxes) {
        const double t = intersect(b, a.translation, dir);
        if (t < best) {
          best = t;
          label = b.label;
        }
      }
      if (!std::isfinite(best)) continue;
      // Camera-frame z equals t because dir_cam.z = 1.
      scene.depth.at(u, v) = static_cast<float>(std::round(best * 1000.0) / 1000.0);

      std::array<double, kNumSemanticClasses> logits;
      for (double& l : logits) l = noise(rng);
      int favored = label - 1;
      if (confuse(rng)) {
        const int w = wrong(rng);
        favored = w >= label - 1 ? w + 1 : w;
      }
      logits[favored] += opts.prior_strength;
      const double m = *std::max_element(logits.begin(), logits.end());
      double sum = 0.0;
      for (double& l : logits) sum += (l = std::exp(l - m));
      for (int c = 0; c < kNumSemanticClasses; ++c) {
        scene.probs.at(c, u, v) = static_cast<float>(logits[c] / sum);
      }
    }
  }
  return scene;
}

net::TrainingScene make_training_scene(const SyntheticScene& scene, const SceneGrids& grids) {
  ProcessedScene p = process_scene(scene.depth, scene.config, scene.probs, grids);
  return {std::move(p.tsdf), std::move(p.priors), scene.gt, std::move(p.low_vis)};
}

void write_scene_dir(const std::filesystem::path& dir, const SyntheticScene& scene) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  write_depth_png(dir / "depth.png", scene.depth);
  atomic_write(dir / "intrinsics.json", config_to_json(scene.config));
  write_prb(dir / "probs.prb", scene.probs);
  write_vxl(dir / "gt.vxl", scene.gt);
}

}  // namespace sscvox
