#include "sscvox/net/bn_ddr.hpp"

namespace sscvox::net {
namespace {

Conv3dConfig pointwise(int in, int out, bool bias, int stride = 1) {
  Conv3dConfig c;
  c.in_channels = in;
  c.out_channels = out;
  c.stride = {stride, stride, stride};
  c.bias = bias;
  return c;
}

// 1-D convolution along `axis` with stride and dilation on that axis only.
Conv3dConfig axial(int channels, const BnDdrConfig& cfg, int axis, bool bias) {
  Conv3dConfig c;
  c.in_channels = channels;
  c.out_channels = channels;
  c.kernel[axis] = cfg.kernel;
  c.stride[axis] = cfg.stride;
  c.dilation[axis] = cfg.dilation;
  c.padding[axis] = cfg.dilation * (cfg.kernel - 1) / 2;
  c.bias = bias;
  return c;
}

const BnDdrConfig& validated(const BnDdrConfig& cfg) {
  cfg.validate();
  return cfg;
}

}  // namespace

void BnDdrConfig::validate() const {
  if (in_channels < 1 || out_channels < 1) throw UsageError("BN-DDR channels must be >= 1");
  if (kernel < 1 || kernel % 2 == 0) throw UsageError("BN-DDR kernel size must be odd");
  if (stride < 1 || dilation < 1) throw UsageError("BN-DDR stride and dilation must be >= 1");
}

// Convs feeding a BN carry no bias: BN cancels it.
BnDdrBlock::BnDdrBlock(std::string name, const BnDdrConfig& cfg)
    : cfg_(validated(cfg)),
      reduce_(name + ".reduce", pointwise(cfg.in_channels, cfg.out_channels, false)),
      reduce_bn_(name + ".reduce_bn", cfg.out_channels),
      conv_d_(name + ".conv_d", axial(cfg.out_channels, cfg, 0, true)),
      conv_h_(name + ".conv_h", axial(cfg.out_channels, cfg, 1, true)),
      conv_w_(name + ".conv_w", axial(cfg.out_channels, cfg, 2, false)),
      expand_(name + ".expand", pointwise(cfg.out_channels, cfg.out_channels, false)),
      expand_bn_(name + ".expand_bn", cfg.out_channels) {
  if (cfg.in_channels != cfg.out_channels || cfg.stride != 1) {
    projection_ = std::make_unique<Conv3d>(
        name + ".projection", pointwise(cfg.in_channels, cfg.out_channels, true, cfg.stride));
  }
}

void BnDdrBlock::init(std::mt19937_64& rng) {
  for (Conv3d* c : {&reduce_, &conv_d_, &conv_h_, &conv_w_, &expand_}) c->init(rng);
  if (projection_) projection_->init(rng);
}

Tensor5 BnDdrBlock::forward(const Tensor5& x, Mode mode) {
  Tensor5 t = relu_reduce_.forward(reduce_bn_.forward(reduce_.forward(x, mode), mode), mode);
  t = relu_d_.forward(conv_d_.forward(t, mode), mode);
  t = relu_h_.forward(conv_h_.forward(t, mode), mode);
  t = conv_w_.forward(t, mode);
  t = expand_bn_.forward(expand_.forward(t, mode), mode);
  if (projection_) {
    t += projection_->forward(x, mode);
  } else {
    t += x;
  }
  return relu_out_.forward(t, mode);
}

Tensor5 BnDdrBlock::backward(const Tensor5& grad_out) {
  const Tensor5 g = relu_out_.backward(grad_out);
  Tensor5 dx = projection_ ? projection_->backward(g) : g;
  Tensor5 t = expand_.backward(expand_bn_.backward(g));
  t = conv_w_.backward(t);
  t = conv_h_.backward(relu_h_.backward(t));
  t = conv_d_.backward(relu_d_.backward(t));
  t = reduce_.backward(reduce_bn_.backward(relu_reduce_.backward(t)));
  dx += t;
  return dx;
}

void BnDdrBlock::collect_params(std::vector<Param*>& out) {
  reduce_.collect_params(out);
  reduce_bn_.collect_params(out);
  conv_d_.collect_params(out);
  conv_h_.collect_params(out);
  conv_w_.collect_params(out);
  expand_.collect_params(out);
  expand_bn_.collect_params(out);
  if (projection_) projection_->collect_params(out);
}

void BnDdrBlock::collect_buffers(std::vector<Param*>& out) {
  reduce_bn_.collect_buffers(out);
  expand_bn_.collect_buffers(out);
}

void BnDdrBlock::append_relu_masks(std::vector<std::uint8_t>& out) const {
  relu_reduce_.append_relu_masks(out);
  relu_d_.append_relu_masks(out);
  relu_h_.append_relu_masks(out);
  relu_out_.append_relu_masks(out);
}

}  // namespace sscvox::net
