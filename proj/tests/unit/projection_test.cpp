#include <gtest/gtest.h>

#include <Eigen/Geometry>

#include <cmath>
#include <random>
#include <set>

#include "oracles.hpp"
#include "sscvox/projection.hpp"
#include "sscvox/synthetic.hpp"

namespace sscvox {
namespace {

// Depth of the plane n.p = c seen through each pixel; 0 where the ray misses.
DepthMap plane_depth(const CameraIntrinsics& k, const Vec3& n, double c) {
  DepthMap d(k.width, k.height);
  for (int v = 0; v < k.height; ++v)
    for (int u = 0; u < k.width; ++u) {
      const Vec3 ray((u - k.cx) / k.fx, -(v - k.cy) / k.fy, 1.0);
      const double denom = n.dot(ray);
      if (std::abs(denom) < 1e-9) continue;
      const double z = c / denom;
      if (z > 0.0) d.at(u, v) = static_cast<float>(z);
    }
  return d;
}

TEST(Softmax, Examples) {
  LogitMap2D l{1, 1, 11, std::vector<float>(11, 0.3f)};
  ProbMap2D p = softmax2d(l);
  for (float v : p.values) EXPECT_NEAR(v, 1.0 / 11.0, 1e-7);

  l.values.assign(11, 0.0f);
  l.values[0] = 1000.0f;
  p = softmax2d(l);
  EXPECT_NEAR(p.values[0], 1.0, 1e-7);
  for (int c = 1; c < 11; ++c) EXPECT_NEAR(p.values[c], 0.0, 1e-7);

  LogitMap2D two{1, 1, 2, {1.0f, 0.0f}};
  p = softmax2d(two);
  EXPECT_NEAR(p.values[0], std::exp(1.0) / (std::exp(1.0) + 1.0), 1e-7);
  EXPECT_NEAR(p.values[0], 0.7311, 1e-4);
  EXPECT_NEAR(p.values[1], 0.2689, 1e-4);

  l.values[3] = std::numeric_limits<float>::infinity();
  EXPECT_THROW(softmax2d(l), ValidationError);
}

TEST(Softmax, SumsToOnePerPixel) {
  std::mt19937_64 rng(2);
  std::normal_distribution<float> n(0.0f, 5.0f);
  LogitMap2D l{7, 5, 11, std::vector<float>(7 * 5 * 11)};
  for (float& v : l.values) v = n(rng);
  EXPECT_NO_THROW(softmax2d(l).validate());
}

TEST(DepthToPoints, Examples) {
  CameraIntrinsics k{500, 500, 320, 240, 640, 480};
  DepthMap d(640, 480);
  d.at(320, 240) = 2.0f;
  d.at(420, 240) = 1.0f;
  const auto pts = depth_to_points(d, k, Alignment{});
  ASSERT_EQ(pts.size(), 2u);  // zero-depth pixels are skipped
  EXPECT_LT((pts[0].world - Vec3(0, 0, 2)).norm(), 1e-12);
  EXPECT_LT((pts[1].world - Vec3(0.2, 0, 1)).norm(), 1e-12);
  EXPECT_EQ(pts[1].u, 420);
}

TEST(DepthToPoints, ImageDownIsWorldDownAndAlignmentApplies) {
  CameraIntrinsics k{100, 100, 50, 50, 100, 100};
  DepthMap d(100, 100);
  d.at(50, 60) = 1.0f;  // below the principal point
  Alignment a;
  a.translation = Vec3(1, 2, 3);
  const auto pts = depth_to_points(d, k, a);
  ASSERT_EQ(pts.size(), 1u);
  EXPECT_LT((pts[0].world - Vec3(1, 2 - 0.1, 4)).norm(), 1e-12);
}

TEST(Normals, FrontoParallelWall) {
  CameraIntrinsics k{40, 40, 16, 12, 32, 24};
  const NormalMap n = compute_normals(plane_depth(k, Vec3(0, 0, 1), 3.0), k, Alignment{});
  for (int i = 0; i < 32 * 24; ++i) {
    ASSERT_NEAR(n.normals[i].norm(), 1.0, 1e-4);
    // Facing the camera, which looks along +Z.
    EXPECT_NEAR(n.normals[i].z(), -1.0, 1e-6);
    EXPECT_EQ(n.rgb[3 * i + 0], 0);
    EXPECT_EQ(n.rgb[3 * i + 1], 0);
    EXPECT_EQ(n.rgb[3 * i + 2], 255);
  }
}

TEST(Normals, HorizontalFloor) {
  CameraIntrinsics k{40, 40, 16, 12, 32, 24};
  // Camera 1.5 m above the floor, pitched down 80 degrees.
  Alignment a;
  a.rotation = Eigen::AngleAxisd(80.0 * M_PI / 180.0, Vec3::UnitX()).toRotationMatrix();
  const Vec3 floor_in_camera = a.rotation.transpose() * Vec3::UnitY();
  const DepthMap d = plane_depth(k, floor_in_camera, -1.5);
  const NormalMap n = compute_normals(d, k, a);
  int checked = 0;
  for (std::size_t i = 0; i < n.normals.size(); ++i) {
    if (n.normals[i].squaredNorm() == 0.0) continue;
    EXPECT_NEAR(n.normals[i].y(), 1.0, 1e-6);
    EXPECT_EQ(n.rgb[3 * i + 1], 255);
    EXPECT_EQ(n.rgb[3 * i + 0], 0);
    ++checked;
  }
  EXPECT_GT(checked, 500);
}

TEST(Normals, RampAtFortyFiveDegreesInXY) {
  CameraIntrinsics k{40, 40, 16, 12, 32, 24};
  // The camera faces a wall; the alignment turns the camera's +Z onto the
  // world diagonal (1,1,0)/sqrt(2), so the wall is a 45-degree ramp in X-Y.
  Alignment a;
  a.rotation = (Eigen::AngleAxisd(M_PI / 4, Vec3::UnitZ()) *
                Eigen::AngleAxisd(M_PI / 2, Vec3::UnitY())).toRotationMatrix();
  ASSERT_LT((a.rotation * Vec3::UnitZ() - Vec3(1, 1, 0).normalized()).norm(), 1e-12);
  const NormalMap n = compute_normals(plane_depth(k, Vec3(0, 0, 1), 2.0), k, a);
  const double h = std::sqrt(0.5);
  for (std::size_t i = 0; i < n.normals.size(); ++i) {
    EXPECT_NEAR(std::abs(n.normals[i].x()), h, 1e-6);
    EXPECT_NEAR(std::abs(n.normals[i].y()), h, 1e-6);
    EXPECT_NEAR(n.normals[i].z(), 0.0, 1e-6);
    EXPECT_EQ(n.rgb[3 * i + 0], 180);
    EXPECT_EQ(n.rgb[3 * i + 1], 180);
    EXPECT_EQ(n.rgb[3 * i + 2], 0);
  }
}

TEST(Normals, ObliquePlaneMatchesAnalyticNormal) {
  CameraIntrinsics k{60, 60, 20, 15, 40, 30};
  const Vec3 normal = Vec3(0.3, -0.4, 1.0).normalized();
  const NormalMap n = compute_normals(plane_depth(k, normal, 2.5), k, Alignment{});
  int defined = 0;
  for (const Vec3& v : n.normals) {
    if (v.squaredNorm() == 0.0) continue;
    ++defined;
    EXPECT_NEAR(v.norm(), 1.0, 1e-4);
    EXPECT_NEAR(std::abs(v.dot(normal)), 1.0, 1e-6);
    EXPECT_LT(v.z(), 0.0);
  }
  EXPECT_GT(defined, 1000);
}

TEST(Normals, InvalidPixelsAreBlack) {
  CameraIntrinsics k{40, 40, 16, 12, 32, 24};
  DepthMap d = plane_depth(k, Vec3(0, 0, 1), 3.0);
  d.at(5, 5) = 0.0f;
  const NormalMap n = compute_normals(d, k, Alignment{});
  const std::size_t i = 5 * 32 + 5;
  EXPECT_EQ(n.normals[i], Vec3::Zero());
  EXPECT_EQ(n.rgb[3 * i], 0);
  EXPECT_EQ(n.rgb[3 * i + 2], 0);
}

TEST(SurfaceGrid, Examples) {
  const GridSpec s{{4, 4, 4}, 0.5, Vec3::Zero()};
  std::vector<ProjectedPoint> pts;
  LabelGrid g = surface_grid(pts, s);
  for (auto v : g.data()) EXPECT_EQ(v, 0);

  pts.push_back({voxel_center({1, 2, 3}, s), 0, 0});
  g = surface_grid(pts, s);
  EXPECT_EQ(g.at(1, 2, 3), 1);
  int total = 0;
  for (auto v : g.data()) total += v;
  EXPECT_EQ(total, 1);

  pts.push_back({voxel_center({1, 2, 3}, s) + Vec3(0.1, -0.1, 0.2), 0, 0});
  pts.push_back({Vec3(10, 10, 10), 0, 0});  // outside the grid
  g = surface_grid(pts, s);
  total = 0;
  for (auto v : g.data()) total += v;
  EXPECT_EQ(total, 1);
}

class SingleWall : public ::testing::Test {
 protected:
  CameraIntrinsics k{10, 10, 5, 5, 11, 11};
  DepthMap depth = DepthMap(11, 11, 3.0f);
  // One column of voxels along the principal ray, centers at z = 0.01 + 0.02 i.
  GridSpec column{{1, 1, 300}, 0.02, Vec3(-0.01, -0.01, 0.0)};
};

TEST_F(SingleWall, VisibilityStates) {
  const VisibilityGrid vis = visibility(depth, k, Alignment{}, column);
  EXPECT_EQ(vis.at(0, 0, 100), Visibility::kVisibleEmpty);  // z = 2.01, 1 m in front
  EXPECT_EQ(vis.at(0, 0, 150), Visibility::kSurface);       // z = 3.01, on the wall
  EXPECT_EQ(vis.at(0, 0, 149), Visibility::kSurface);       // z = 2.99
  EXPECT_EQ(vis.at(0, 0, 200), Visibility::kOccluded);      // z = 4.01, 1 m behind
  EXPECT_EQ(vis.at(0, 0, 147), Visibility::kVisibleEmpty);  // z = 2.95 < 3 - 0.02
}

TEST_F(SingleWall, OutsideViewCases) {
  Alignment a;
  GridSpec s{{3, 1, 2}, 0.5, Vec3(-0.75, -0.25, -1.0)};
  // z centers: -0.75 (behind the camera) and -0.25.
  VisibilityGrid vis = visibility(depth, k, a, s);
  for (auto v : vis.data()) EXPECT_EQ(v, Visibility::kOutsideView);

  // Far off-axis voxel projects outside the image.
  GridSpec side{{1, 1, 1}, 0.1, Vec3(5.0, 0.0, 1.0)};
  EXPECT_EQ(visibility(depth, k, a, side).at(0, 0, 0), Visibility::kOutsideView);

  // Projects onto an invalid pixel.
  DepthMap holes = depth;
  holes.at(5, 5) = 0.0f;
  EXPECT_EQ(visibility(holes, k, a, column).at(0, 0, 100), Visibility::kOutsideView);
}

TEST(Visibility, SurfaceVoxelsNeverVisibleEmpty) {
  SyntheticOptions o;
  o.seed = 4;
  const SyntheticScene scene = make_synthetic_scene(o);
  const GridSpec high = toy_grids().high;
  const auto& k = scene.config.intrinsics;
  const auto& a = scene.config.alignment;
  const auto pts = depth_to_points(scene.depth, k, a);
  const LabelGrid surface = surface_grid(pts, high);
  const VisibilityGrid vis = visibility(scene.depth, k, a, high);
  std::size_t surf = 0;
  for (std::size_t i = 0; i < surface.voxels(); ++i) {
    if (!surface.data()[i]) continue;
    ++surf;
    EXPECT_NE(vis.data()[i], Visibility::kVisibleEmpty);
    EXPECT_NE(vis.data()[i], Visibility::kOutsideView);
  }
  EXPECT_GT(surf, 100u);
  std::set<Visibility> states(vis.data().begin(), vis.data().end());
  EXPECT_EQ(states.size(), 4u);
}

class PriorFixture : public ::testing::Test {
 protected:
  // Two pixels one millimeter apart at 1 m depth, inside one 8 cm voxel.
  CameraIntrinsics k{1000, 1000, 0.5, 0.0, 2, 1};
  GridSpec low{{1, 1, 1}, 0.08, Vec3(-0.04, -0.04, 0.96)};
  DepthMap depth = DepthMap(2, 1, 1.0f);
  ProbMap2D probs = ProbMap2D(2, 1, 11);

  void SetUp() override {
    for (int u = 0; u < 2; ++u) {
      const float p1 = u == 0 ? 0.8f : 0.6f;
      probs.at(0, u, 0) = p1;
      for (int c = 1; c < 11; ++c) probs.at(c, u, 0) = (1.0f - p1) / 10.0f;
    }
  }
};

TEST_F(PriorFixture, AveragesContributingPixels) {
  PriorDiagnostics diag;
  const FloatGrid pri = project_priors(probs, depth, k, Alignment{}, low, &diag);
  EXPECT_EQ(pri.channels(), 12);
  EXPECT_NEAR(pri.at(1, 0, 0, 0), 0.7, 1e-6);
  EXPECT_EQ(pri.at(0, 0, 0, 0), 0.0f);
  EXPECT_NEAR(pri.at(5, 0, 0, 0), 0.03, 1e-6);
  EXPECT_EQ(diag.valid_pixels, 2u);
  EXPECT_EQ(diag.occupied_voxels, 1u);
}

TEST_F(PriorFixture, SinglePixelCopiesItsSoftmax) {
  depth.at(1, 0) = 0.0f;  // invalid depth: excluded
  const FloatGrid pri = project_priors(probs, depth, k, Alignment{}, low);
  EXPECT_NEAR(pri.at(1, 0, 0, 0), 0.8, 1e-7);
  for (int c = 2; c < 12; ++c) EXPECT_NEAR(pri.at(c, 0, 0, 0), 0.02, 1e-7);
  EXPECT_EQ(pri.at(0, 0, 0, 0), 0.0f);
}

TEST_F(PriorFixture, EmptyVoxelsAndDroppedPixels) {
  GridSpec elsewhere{{2, 2, 2}, 0.08, Vec3(5, 5, 5)};
  PriorDiagnostics diag;
  const FloatGrid pri = project_priors(probs, depth, k, Alignment{}, elsewhere, &diag);
  for (std::size_t v = 0; v < pri.voxels(); ++v) {
    EXPECT_EQ(pri.data()[v], 1.0f);
    for (int c = 1; c < 12; ++c) EXPECT_EQ(pri.data()[c * pri.voxels() + v], 0.0f);
  }
  EXPECT_EQ(diag.dropped_outside_grid, 2u);
}

TEST_F(PriorFixture, Errors) {
  ProbMap2D wrong_size(3, 1, 11);
  EXPECT_THROW(project_priors(wrong_size, depth, k, Alignment{}, low), ValidationError);
  ProbMap2D wrong_channels(2, 1, 12);
  EXPECT_THROW(project_priors(wrong_channels, depth, k, Alignment{}, low), ValidationError);
}

TEST(Priors, InvariantsOnSyntheticScene) {
  SyntheticOptions o;
  o.seed = 9;
  const SyntheticScene scene = make_synthetic_scene(o);
  const GridSpec low = toy_grids().low;
  const auto& k = scene.config.intrinsics;
  const auto& a = scene.config.alignment;
  const FloatGrid pri = project_priors(scene.probs, scene.depth, k, a, low);
  std::set<std::size_t> hit;
  for (const auto& p : depth_to_points(scene.depth, k, a)) {
    if (auto i = world_to_index(p.world, low)) hit.insert(pri.offset(i->x, i->y, i->z));
  }
  for (std::size_t v = 0; v < pri.voxels(); ++v) {
    double sum = 0.0;
    for (int c = 0; c < 12; ++c) {
      const float p = pri.data()[c * pri.voxels() + v];
      EXPECT_GE(p, 0.0f);
      EXPECT_LE(p, 1.0f);
      sum += p;
    }
    EXPECT_NEAR(sum, 1.0, 1e-5);
    EXPECT_EQ(pri.data()[v] < 1.0f, hit.count(v) == 1) << "voxel " << v;
  }
}

}  // namespace
}  // namespace sscvox
