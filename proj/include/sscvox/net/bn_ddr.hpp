#pragma once

#include <memory>
#include <optional>

#include "sscvox/net/layers.hpp"

namespace sscvox::net {

struct BnDdrConfig {
  int in_channels = 1;
  int out_channels = 1;
  int kernel = 3;  // odd
  int stride = 1;
  int dilation = 1;

  void validate() const;
};

// Batch-normalized dimensional decomposition residual block:
//
//   x -> 1x1x1 conv -> BN -> ReLU
//     -> (k,1,1) conv -> ReLU -> (1,k,1) conv -> ReLU -> (1,1,k) conv
//     -> 1x1x1 conv -> BN -> (+ residual) -> ReLU
//
// The decomposed convolutions carry no normalization between them. Each one
// strides along its own axis. The residual is the input itself, or a strided
// 1x1x1 projection when channels or stride change. Inner width = out_channels.
class BnDdrBlock : public Module {
 public:
  BnDdrBlock(std::string name, const BnDdrConfig& cfg);

  void init(std::mt19937_64& rng);

  Tensor5 forward(const Tensor5& x, Mode mode) override;
  Tensor5 backward(const Tensor5& grad_out) override;
  void collect_params(std::vector<Param*>& out) override;
  void collect_buffers(std::vector<Param*>& out) override;
  void append_relu_masks(std::vector<std::uint8_t>& out) const override;

  const BnDdrConfig& config() const { return cfg_; }
  bool has_projection() const { return projection_ != nullptr; }

  Conv3d& reduce() { return reduce_; }
  BatchNorm3d& reduce_bn() { return reduce_bn_; }
  Conv3d& conv_d() { return conv_d_; }
  Conv3d& conv_h() { return conv_h_; }
  Conv3d& conv_w() { return conv_w_; }
  Conv3d& expand() { return expand_; }
  BatchNorm3d& expand_bn() { return expand_bn_; }
  Conv3d* projection() { return projection_.get(); }

 private:
  BnDdrConfig cfg_;
  Conv3d reduce_;
  BatchNorm3d reduce_bn_;
  ReLU relu_reduce_;
  Conv3d conv_d_;
  ReLU relu_d_;
  Conv3d conv_h_;
  ReLU relu_h_;
  Conv3d conv_w_;
  Conv3d expand_;
  BatchNorm3d expand_bn_;
  std::unique_ptr<Conv3d> projection_;
  ReLU relu_out_;
};

}  // namespace sscvox::net
