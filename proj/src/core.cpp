#include "sscvox/core.hpp"

#include <Eigen/LU>

#include <cmath>
#include <numeric>

namespace sscvox {

void GridSpec::validate() const {
  for (int d : dims) {
    if (d < 1) throw UsageError("grid dims must all be >= 1");
  }
  if (!(voxel_size > 0.0) || !std::isfinite(voxel_size)) {
    throw UsageError("voxel size must be positive");
  }
  if (!origin.allFinite()) throw UsageError("grid origin must be finite");
}

bool GridSpec::compatible(const GridSpec& other) const {
  constexpr double kTol = 1e-6;
  if (dims != other.dims) return false;
  if (std::abs(voxel_size - other.voxel_size) > kTol * std::max(1.0, voxel_size)) {
    return false;
  }
  return (origin - other.origin).cwiseAbs().maxCoeff() <= 1e-5;
}

GridSpec GridSpec::high_res(const Vec3& origin) {
  return GridSpec{{240, 144, 240}, 0.02, origin};
}

GridSpec GridSpec::low_res(const Vec3& origin) {
  return GridSpec{{60, 36, 60}, 0.08, origin};
}

std::optional<Index3> world_to_index(const Vec3& p, const GridSpec& spec) {
  const Vec3 rel = (p - spec.origin) / spec.voxel_size;
  const Index3 i{static_cast<int>(std::floor(rel.x())),
                 static_cast<int>(std::floor(rel.y())),
                 static_cast<int>(std::floor(rel.z()))};
  // Guard against huge coordinates overflowing the int cast.
  if (rel.minCoeff() < 0.0 || rel.x() >= spec.dims[0] || rel.y() >= spec.dims[1] ||
      rel.z() >= spec.dims[2]) {
    return std::nullopt;
  }
  return i;
}

Vec3 voxel_center(const Index3& i, const GridSpec& spec) {
  if (!spec.contains(i)) throw UsageError("voxel index out of range");
  return spec.origin + (Vec3(i.x, i.y, i.z) + Vec3::Constant(0.5)) * spec.voxel_size;
}

int ClassTable::index_of(std::string_view name) const {
  for (int i = 0; i < size(); ++i) {
    if (names[i] == name) return i;
  }
  throw UsageError("unknown class name: " + std::string(name));
}

double ClassTable::weight_sum() const {
  return std::accumulate(weights.begin(), weights.end(), 0.0);
}

void ClassTable::validate() const {
  if (names.size() != static_cast<std::size_t>(kNumClasses) ||
      weights.size() != names.size()) {
    throw ValidationError("class table must have exactly 12 entries");
  }
  if (names[0] != "empty") throw ValidationError("class 0 must be 'empty'");
  for (double w : weights) {
    if (w != 1.0 && w != 2.0) throw ValidationError("class weights must be 1 or 2");
  }
}

ClassTable default_class_table() {
  ClassTable t;
  t.names = {"empty", "ceiling", "floor", "wall",  "window",    "chair",
             "bed",   "sofa",    "table", "tvs",   "furniture", "objects"};
  t.weights.assign(t.names.size(), 1.0);
  for (const char* rare : {"chair", "table", "tvs", "objects"}) {
    t.weights[t.index_of(rare)] = 2.0;
  }
  return t;
}

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw ValidationError("focal lengths must be positive");
  if (width < 1 || height < 1) throw ValidationError("image size must be positive");
  if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height)) {
    throw ValidationError("principal point outside the image");
  }
}

void Alignment::validate() const {
  if (!rotation.allFinite() || !translation.allFinite()) {
    throw ValidationError("alignment must be finite");
  }
  const double ortho_err = (rotation.transpose() * rotation - Mat3::Identity())
                               .cwiseAbs()
                               .maxCoeff();
  if (ortho_err > 1e-9) throw ValidationError("alignment rotation is not orthonormal");
  if (rotation.determinant() < 0.0) {
    throw ValidationError("alignment rotation must have determinant +1");
  }
}

void DepthMap::validate() const {
  if (width < 1 || height < 1 ||
      values.size() != static_cast<std::size_t>(width) * height) {
    throw ValidationError("depth map size mismatch");
  }
  for (float d : values) {
    if (!std::isfinite(d) || d < 0.0f) {
      throw ValidationError("depth values must be finite and non-negative");
    }
  }
}

}  // namespace sscvox
