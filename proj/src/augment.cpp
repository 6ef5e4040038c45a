#include "sscvox/augment.hpp"

#include <cmath>

namespace sscvox {

AugCode AugCode::parse(std::string_view text) {
  if (text == "id" || text.empty()) return kIdentityCode;
  if (text.size() == 3 && text.find_first_not_of("01") == std::string_view::npos) {
    return {text[0] == '1', text[1] == '1', text[2] == '1'};
  }
  AugCode g;
  for (char ch : text) {
    bool* bit = nullptr;
    switch (ch) {
      case 'x': bit = &g.flip_x; break;
      case 'z': bit = &g.flip_z; break;
      case 's': bit = &g.swap_xz; break;
      default: throw UsageError("bad augmentation code '" + std::string(text) + "'");
    }
    if (*bit) throw UsageError("repeated letter in augmentation code '" + std::string(text) + "'");
    *bit = true;
  }
  return g;
}

std::string AugCode::to_string() const {
  return {flip_x ? '1' : '0', flip_z ? '1' : '0', swap_xz ? '1' : '0'};
}

std::array<AugCode, 8> all_codes() {
  std::array<AugCode, 8> codes;
  for (int b = 0; b < 8; ++b) codes[b] = AugCode::from_bits(b);
  return codes;
}

AugCode compose(const AugCode& a, const AugCode& b) {
  AugCode c;
  c.swap_xz = a.swap_xz != b.swap_xz;
  c.flip_x = a.flip_x != (a.swap_xz ? b.flip_z : b.flip_x);
  c.flip_z = a.flip_z != (a.swap_xz ? b.flip_x : b.flip_z);
  return c;
}

AugCode inverse(const AugCode& g) {
  for (const AugCode& h : all_codes()) {
    if (compose(h, g).is_identity()) return h;
  }
  throw std::logic_error("augmentation group has no inverse");  // unreachable
}

FloatGrid tta_ensemble(const Predictor& predict, const SceneInputs& inputs) {
  for (const FloatGrid* g : {&inputs.tsdf, &inputs.priors}) {
    if (g->size() > 0 && g->nx() != g->nz()) {
      throw UsageError("test-time augmentation needs equal X and Z extents");
    }
  }
  std::vector<double> sum;
  GridSpec out_spec;
  int out_channels = 0;
  for (const AugCode& g : all_codes()) {
    SceneInputs moved;
    if (inputs.tsdf.size() > 0) moved.tsdf = apply(g, inputs.tsdf);
    if (inputs.priors.size() > 0) moved.priors = apply(g, inputs.priors);
    const FloatGrid aligned = apply(inverse(g), predict(moved));
    if (sum.empty()) {
      out_spec = aligned.spec();
      out_channels = aligned.channels();
      sum.assign(aligned.size(), 0.0);
    } else if (aligned.channels() != out_channels || aligned.spec().dims != out_spec.dims) {
      throw ValidationError("predictor outputs disagree in shape across augmentations");
    }
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += aligned.data()[i];
  }

  // Mean of the eight aligned outputs; renormalize only voxels whose mean has
  // drifted off the simplex so normalized inputs pass through bit-exact.
  FloatGrid out(out_spec, out_channels, 0.0f);
  const std::size_t voxels = out.voxels();
  for (std::size_t v = 0; v < voxels; ++v) {
    double total = 0.0;
    for (int c = 0; c < out_channels; ++c) total += sum[c * voxels + v] / 8.0;
    const double norm = (total > 0.0 && std::abs(total - 1.0) > 1e-5) ? total : 1.0;
    for (int c = 0; c < out_channels; ++c) {
      out.data()[c * voxels + v] = static_cast<float>(sum[c * voxels + v] / 8.0 / norm);
    }
  }
  return out;
}

}  // namespace sscvox
