#pragma once

// The eight-element augmentation group generated by X flips, Z flips and the
// X<->Z swap, with training-time sampling and test-time ensembling.

#include <array>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "sscvox/core.hpp"

namespace sscvox {

struct AugCode {
  bool flip_x = false;
  bool flip_z = false;
  bool swap_xz = false;

  constexpr int bits() const { return (flip_x ? 1 : 0) | (flip_z ? 2 : 0) | (swap_xz ? 4 : 0); }
  static constexpr AugCode from_bits(int b) { return {(b & 1) != 0, (b & 2) != 0, (b & 4) != 0}; }
  constexpr bool is_identity() const { return !flip_x && !flip_z && !swap_xz; }

  friend constexpr bool operator==(const AugCode&, const AugCode&) = default;

  // "000".."111" as (flip_x, flip_z, swap_xz), or letters from {x, z, s}, or "id".
  static AugCode parse(std::string_view text);
  std::string to_string() const;  // three-digit form
};

inline constexpr AugCode kIdentityCode{};

// All eight codes in bit order.
std::array<AugCode, 8> all_codes();

// Where output voxel (x, y, z) reads from: swap first, then flip X, then flip Z.
// nx and nz are the output grid's extents.
inline Index3 source_index(const AugCode& g, int x, int y, int z, int nx, int nz) {
  int sx = g.flip_x ? nx - 1 - x : x;
  int sz = g.flip_z ? nz - 1 - z : z;
  if (g.swap_xz) std::swap(sx, sz);
  return {sx, y, sz};
}

// out[c, x, y, z] = in[c, source_index(x, y, z)]. Y is never touched. Swapping
// codes require nx == nz.
template <typename T>
VoxelGrid<T> apply(const AugCode& g, const VoxelGrid<T>& in) {
  if (g.is_identity()) return in;
  if (g.swap_xz && in.nx() != in.nz()) {
    throw UsageError("X<->Z swap needs nx == nz");
  }
  VoxelGrid<T> out(in.spec(), in.channels());
  const int nx = in.nx(), ny = in.ny(), nz = in.nz();
  for (int c = 0; c < in.channels(); ++c)
    for (int x = 0; x < nx; ++x)
      for (int y = 0; y < ny; ++y)
        for (int z = 0; z < nz; ++z) {
          const Index3 s = source_index(g, x, y, z, nx, nz);
          out.at(c, x, y, z) = in.at(c, s.x, s.y, s.z);
        }
  return out;
}

// apply(compose(a, b), v) == apply(a, apply(b, v)): b first, then a.
AugCode compose(const AugCode& a, const AugCode& b);
AugCode inverse(const AugCode& g);

// Three independent fair bits.
template <typename Rng>
AugCode sample(Rng& rng) {
  std::bernoulli_distribution coin(0.5);
  AugCode g;
  g.flip_x = coin(rng);
  g.flip_z = coin(rng);
  g.swap_xz = coin(rng);
  return g;
}

// Inputs to one prediction: the F-TSDF volume and the prior volume, in any
// combination the predictor accepts.
struct SceneInputs {
  FloatGrid tsdf;
  FloatGrid priors;
};

using Predictor = std::function<FloatGrid(const SceneInputs&)>;

// Runs the predictor under all eight codes, maps each output back with the
// inverse code and averages them (sum rule), renormalizing channel sums.
FloatGrid tta_ensemble(const Predictor& predict, const SceneInputs& inputs);

}  // namespace sscvox
