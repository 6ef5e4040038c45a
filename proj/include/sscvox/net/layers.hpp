#pragma once

// Layer primitives with explicit forward/backward passes. Each layer caches
// what its backward pass needs from the most recent forward call.

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "sscvox/net/tensor.hpp"

namespace sscvox::net {

enum class Mode { kTrain, kEval };

class Module {
 public:
  virtual ~Module() = default;

  virtual Tensor5 forward(const Tensor5& x, Mode mode) = 0;
  // Accumulates parameter gradients and returns the input gradient.
  virtual Tensor5 backward(const Tensor5& grad_out) = 0;

  virtual void collect_params(std::vector<Param*>& out) = 0;
  // Non-learnable persistent state (running statistics).
  virtual void collect_buffers(std::vector<Param*>&) {}
  // Active/inactive pattern of every ReLU from the last forward call.
  virtual void append_relu_masks(std::vector<std::uint8_t>&) const {}
};

using Triple = std::array<int, 3>;

struct Conv3dConfig {
  int in_channels = 1;
  int out_channels = 1;
  Triple kernel{1, 1, 1};
  Triple stride{1, 1, 1};
  Triple dilation{1, 1, 1};
  Triple padding{0, 0, 0};
  bool bias = true;
};

// Cross-correlation, weights laid out (out, in, kd, kh, kw).
class Conv3d : public Module {
 public:
  Conv3d(std::string name, const Conv3dConfig& cfg);

  // Kaiming-uniform over fan-in; bias zero.
  void init(std::mt19937_64& rng);

  Shape5 output_shape(const Shape5& in) const;
  Tensor5 forward(const Tensor5& x, Mode mode) override;
  Tensor5 backward(const Tensor5& grad_out) override;
  void collect_params(std::vector<Param*>& out) override;

  const Conv3dConfig& config() const { return cfg_; }
  Param& weight() { return weight_; }
  Param& bias() { return bias_; }

 private:
  bool is_pointwise() const;
  void im2col(const Tensor5& x, int n, std::vector<double>& col) const;
  void col2im(const std::vector<double>& col, int n, Tensor5& dx) const;

  Conv3dConfig cfg_;
  Param weight_;
  Param bias_;
  Tensor5 input_;
  Shape5 out_shape_;
};

inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;

// Per-channel normalization over (batch, depth, height, width).
class BatchNorm3d : public Module {
 public:
  BatchNorm3d(std::string name, int channels);

  Tensor5 forward(const Tensor5& x, Mode mode) override;
  Tensor5 backward(const Tensor5& grad_out) override;
  void collect_params(std::vector<Param*>& out) override;
  void collect_buffers(std::vector<Param*>& out) override;

  Param& gamma() { return gamma_; }
  Param& beta() { return beta_; }
  Param& running_mean() { return running_mean_; }
  Param& running_var() { return running_var_; }

 private:
  int channels_;
  Param gamma_, beta_, running_mean_, running_var_;
  Mode last_mode_ = Mode::kEval;
  Tensor5 x_hat_;
  std::vector<double> inv_std_;
};

class ReLU : public Module {
 public:
  Tensor5 forward(const Tensor5& x, Mode mode) override;
  Tensor5 backward(const Tensor5& grad_out) override;
  void collect_params(std::vector<Param*>&) override {}
  void append_relu_masks(std::vector<std::uint8_t>& out) const override;

 private:
  std::vector<std::uint8_t> mask_;
  Shape5 shape_;
};

}  // namespace sscvox::net
