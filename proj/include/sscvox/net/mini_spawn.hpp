#pragma once

// Miniature two-branch fusion network.
//
//   F-TSDF (high res) --BN-DDR/2--BN-DDR/2--> T ---------------------------+
//   priors (low res)  --BN-DDR-------------> P ---------------------------+|
//   concat(T, P) -> enc1 --BN-DDR/2--> enc2 -> bottleneck                 ||
//                   |                              |                      ||
//                   +----- mid-res skip ---- up x2 + conv                 ||
//                                                  |                      ||
//                                    concat -> dec -> concat(dec, T, P) -> head
//                                                               -> 1x1x1 -> softmax
//
// Output is at the prior resolution, one channel per class.

#include <array>
#include <memory>
#include <random>
#include <vector>

#include "sscvox/net/bn_ddr.hpp"

namespace sscvox::net {

struct MiniSpawnConfig {
  std::array<int, 3> output_dims{10, 6, 10};  // low-res (prior) grid; high res is 4x
  int tsdf_channels = 1;
  int prior_channels = kNumClasses;
  int branch_width = 8;   // T and P
  int fused_width = 16;   // encoder level 1 / decoder
  int deep_width = 16;    // encoder level 2
  int classes = kNumClasses;

  std::array<int, 3> input_dims() const {
    return {4 * output_dims[0], 4 * output_dims[1], 4 * output_dims[2]};
  }
  void validate() const;
};

struct MiniSpawnOutput {
  Tensor5 logits;
  Tensor5 probs;
};

class MiniSpawn {
 public:
  explicit MiniSpawn(const MiniSpawnConfig& cfg);

  void init(std::uint64_t seed);

  // tsdf: (N, tsdf_channels, 4D, 4H, 4W); priors: (N, prior_channels, D, H, W).
  MiniSpawnOutput forward(const Tensor5& tsdf, const Tensor5& priors, Mode mode);
  // Takes dLoss/dlogits; accumulates parameter gradients. Returns the gradients
  // of both inputs.
  std::pair<Tensor5, Tensor5> backward(const Tensor5& grad_logits);

  std::vector<Param*> params();
  std::vector<Param*> buffers();
  void zero_grad();
  std::vector<std::uint8_t> relu_masks() const;

  const MiniSpawnConfig& config() const { return cfg_; }

 private:
  MiniSpawnConfig cfg_;
  BnDdrBlock tsdf_down1_, tsdf_down2_, prior_in_;
  BnDdrBlock enc1_, enc2_, bottleneck_;
  Conv3d up_conv_;
  ReLU up_relu_;
  BnDdrBlock dec_, head_;
  Conv3d classifier_;

  Shape5 bottleneck_shape_;
};

}  // namespace sscvox::net
