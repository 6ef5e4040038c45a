#include "sscvox/tsdf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sscvox {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 1-D squared distance transform of a sampled function (lower envelope of
// parabolas). f and d have length n; v and z are scratch.
void dt1d(const double* f, double* d, int n, std::vector<int>& v, std::vector<double>& z) {
  v.resize(n);
  z.resize(n + 1);
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] == kInf) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      continue;
    }
    double s;
    while (true) {
      const int p = v[k];
      s = ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p));
      if (s <= z[k]) {
        --k;
        if (k < 0) break;
      } else {
        break;
      }
    }
    ++k;
    v[k] = q;
    z[k] = k == 0 ? -kInf : s;
    z[k + 1] = kInf;
  }
  if (k < 0) {
    std::fill(d, d + n, kInf);
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[j + 1] < q) ++j;
    const double diff = q - v[j];
    d[q] = diff * diff + f[v[j]];
  }
}

}  // namespace

std::vector<double> squared_distance_transform(const LabelGrid& mask) {
  const int nx = mask.nx(), ny = mask.ny(), nz = mask.nz();
  const std::size_t n = mask.voxels();
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = mask.data()[i] ? 0.0 : kInf;

  std::vector<int> v;
  std::vector<double> z;
  const int longest = std::max({nx, ny, nz});
  std::vector<double> in(longest), out(longest);

  auto pass = [&](int len, std::size_t stride, auto&& line_starts) {
    for (std::size_t start : line_starts) {
      for (int i = 0; i < len; ++i) in[i] = g[start + i * stride];
      dt1d(in.data(), out.data(), len, v, z);
      for (int i = 0; i < len; ++i) g[start + i * stride] = out[i];
    }
  };

  // Line starting offsets for each axis; layout is (x, y, z) with z fastest.
  std::vector<std::size_t> starts;
  starts.reserve(n);
  for (int x = 0; x < nx; ++x)
    for (int y = 0; y < ny; ++y) starts.push_back((std::size_t(x) * ny + y) * nz);
  pass(nz, 1, starts);

  starts.clear();
  for (int x = 0; x < nx; ++x)
    for (int zz = 0; zz < nz; ++zz) starts.push_back(std::size_t(x) * ny * nz + zz);
  pass(ny, std::size_t(nz), starts);

  starts.clear();
  for (int y = 0; y < ny; ++y)
    for (int zz = 0; zz < nz; ++zz) starts.push_back(std::size_t(y) * nz + zz);
  pass(nx, std::size_t(ny) * nz, starts);

  return g;
}

FloatGrid ftsdf_encode(const LabelGrid& surface, const VisibilityGrid& vis, double truncation) {
  if (!(truncation > 0.0)) throw UsageError("truncation must be positive");
  if (surface.channels() != 1 || vis.channels() != 1 ||
      !surface.spec().compatible(vis.spec())) {
    throw ValidationError("surface and visibility grids must share one spec");
  }
  if (std::none_of(surface.data().begin(), surface.data().end(),
                   [](std::uint8_t s) { return s != 0; })) {
    throw ValidationError("empty scene");
  }
  const std::vector<double> d2 = squared_distance_transform(surface);
  const double voxel = surface.spec().voxel_size;

  FloatGrid out(surface.spec(), 1, 0.0f);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (surface.data()[i]) {
      out.data()[i] = 1.0f;
      continue;
    }
    double sign = 0.0;
    switch (vis.data()[i]) {
      case Visibility::kVisibleEmpty:
      case Visibility::kSurface: sign = 1.0; break;
      case Visibility::kOccluded: sign = -1.0; break;
      case Visibility::kOutsideView: sign = 0.0; break;
    }
    if (sign == 0.0) continue;
    const double d = std::sqrt(d2[i]) * voxel;
    out.data()[i] = static_cast<float>(sign * (1.0 - std::min(d, truncation) / truncation));
  }
  return out;
}

}  // namespace sscvox
