#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sscvox/core.hpp"

namespace sscvox::net {

// (batch, channel, depth, height, width). Voxel grids map x -> depth,
// y -> height, z -> width.
struct Shape5 {
  int n = 0;
  int c = 0;
  int d = 0;
  int h = 0;
  int w = 0;

  std::size_t size() const {
    return static_cast<std::size_t>(n) * c * d * h * w;
  }
  std::size_t spatial() const { return static_cast<std::size_t>(d) * h * w; }
  friend bool operator==(const Shape5&, const Shape5&) = default;
  std::string str() const;
};

class Tensor5 {
 public:
  Tensor5() = default;
  explicit Tensor5(const Shape5& shape, double fill = 0.0)
      : shape_(shape), data_(shape.size(), fill) {}
  Tensor5(const Shape5& shape, std::vector<double> data);

  const Shape5& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::size_t offset(int n, int c, int d, int h, int w) const {
    return (((static_cast<std::size_t>(n) * shape_.c + c) * shape_.d + d) * shape_.h + h) *
               shape_.w + w;
  }
  double& at(int n, int c, int d, int h, int w) { return data_[offset(n, c, d, h, w)]; }
  double at(int n, int c, int d, int h, int w) const { return data_[offset(n, c, d, h, w)]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  double* ptr() { return data_.data(); }
  const double* ptr() const { return data_.data(); }
  // Start of the spatial block of (n, c).
  double* plane(int n, int c) { return data_.data() + offset(n, c, 0, 0, 0); }
  const double* plane(int n, int c) const { return data_.data() + offset(n, c, 0, 0, 0); }

  void fill(double v);
  Tensor5& operator+=(const Tensor5& o);

 private:
  Shape5 shape_;
  std::vector<double> data_;
};

// Learnable tensor (or persistent buffer) with its gradient.
struct Param {
  std::string name;
  Tensor5 value;
  Tensor5 grad;

  Param() = default;
  Param(std::string n, const Shape5& shape)
      : name(std::move(n)), value(shape), grad(shape) {}
  void zero_grad() { grad.fill(0.0); }
};

// Channel-wise concatenation and its adjoint.
Tensor5 concat_channels(const std::vector<const Tensor5*>& parts);
std::vector<Tensor5> split_channels(const Tensor5& grad, const std::vector<int>& channels);

// Nearest-neighbor x2 upsampling on every spatial axis and its adjoint.
Tensor5 upsample_nearest2(const Tensor5& x);
Tensor5 upsample_nearest2_backward(const Tensor5& grad_out, const Shape5& input_shape);

// Softmax across the channel axis at every (n, voxel).
Tensor5 softmax_channels(const Tensor5& logits);

// Batch of single-scene grids: every grid must share dims and channel count.
Tensor5 stack_grids(const std::vector<const FloatGrid*>& grids);
// Item n of the batch as a grid with the given placement.
FloatGrid tensor_to_grid(const Tensor5& t, int n, const GridSpec& spec);

}  // namespace sscvox::net
