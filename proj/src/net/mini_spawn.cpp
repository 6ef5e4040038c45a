#include "sscvox/net/mini_spawn.hpp"

namespace sscvox::net {
namespace {

BnDdrConfig ddr(int in, int out, int stride = 1) {
  BnDdrConfig c;
  c.in_channels = in;
  c.out_channels = out;
  c.stride = stride;
  return c;
}

Conv3dConfig cube3(int in, int out) {
  Conv3dConfig c;
  c.in_channels = in;
  c.out_channels = out;
  c.kernel = {3, 3, 3};
  c.padding = {1, 1, 1};
  return c;
}

Conv3dConfig pointwise(int in, int out) {
  Conv3dConfig c;
  c.in_channels = in;
  c.out_channels = out;
  return c;
}

const MiniSpawnConfig& validated(const MiniSpawnConfig& cfg) {
  cfg.validate();
  return cfg;
}

}  // namespace

void MiniSpawnConfig::validate() const {
  for (int d : output_dims) {
    if (d < 2 || d % 2 != 0) throw UsageError("MiniSpawn output dims must be even and >= 2");
  }
  if (tsdf_channels < 1 || prior_channels < 1 || branch_width < 1 || fused_width < 1 ||
      deep_width < 1 || classes < 2) {
    throw UsageError("MiniSpawn widths must be positive");
  }
}

MiniSpawn::MiniSpawn(const MiniSpawnConfig& cfg)
    : cfg_(validated(cfg)),
      tsdf_down1_("tsdf_down1", ddr(cfg.tsdf_channels, cfg.branch_width, 2)),
      tsdf_down2_("tsdf_down2", ddr(cfg.branch_width, cfg.branch_width, 2)),
      prior_in_("prior_in", ddr(cfg.prior_channels, cfg.branch_width)),
      enc1_("enc1", ddr(2 * cfg.branch_width, cfg.fused_width)),
      enc2_("enc2", ddr(cfg.fused_width, cfg.deep_width, 2)),
      bottleneck_("bottleneck", ddr(cfg.deep_width, cfg.deep_width)),
      up_conv_("up_conv", cube3(cfg.deep_width, cfg.fused_width)),
      dec_("dec", ddr(2 * cfg.fused_width, cfg.fused_width)),
      head_("head", ddr(cfg.fused_width + 2 * cfg.branch_width, cfg.fused_width)),
      classifier_("classifier", pointwise(cfg.fused_width, cfg.classes)) {}

void MiniSpawn::init(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (BnDdrBlock* b : {&tsdf_down1_, &tsdf_down2_, &prior_in_, &enc1_, &enc2_, &bottleneck_,
                        &dec_, &head_}) {
    b->init(rng);
  }
  up_conv_.init(rng);
  classifier_.init(rng);
}

MiniSpawnOutput MiniSpawn::forward(const Tensor5& tsdf, const Tensor5& priors, Mode mode) {
  const auto in_dims = cfg_.input_dims();
  const Shape5& ts = tsdf.shape();
  const Shape5& ps = priors.shape();
  if (ts.c != cfg_.tsdf_channels || std::array<int, 3>{ts.d, ts.h, ts.w} != in_dims) {
    throw UsageError("MiniSpawn: F-TSDF input has shape " + ts.str());
  }
  if (ps.c != cfg_.prior_channels || ps.n != ts.n ||
      std::array<int, 3>{ps.d, ps.h, ps.w} != cfg_.output_dims) {
    throw UsageError("MiniSpawn: prior input has shape " + ps.str());
  }
  const Tensor5 t = tsdf_down2_.forward(tsdf_down1_.forward(tsdf, mode), mode);
  const Tensor5 p = prior_in_.forward(priors, mode);
  const Tensor5 e1 = enc1_.forward(concat_channels({&t, &p}), mode);
  const Tensor5 e2 = bottleneck_.forward(enc2_.forward(e1, mode), mode);
  bottleneck_shape_ = e2.shape();
  const Tensor5 up = up_relu_.forward(up_conv_.forward(upsample_nearest2(e2), mode), mode);
  const Tensor5 d = dec_.forward(concat_channels({&up, &e1}), mode);
  const Tensor5 h = head_.forward(concat_channels({&d, &t, &p}), mode);
  MiniSpawnOutput out;
  out.logits = classifier_.forward(h, mode);
  out.probs = softmax_channels(out.logits);
  return out;
}

std::pair<Tensor5, Tensor5> MiniSpawn::backward(const Tensor5& grad_logits) {
  const int bw = cfg_.branch_width;
  const int fw = cfg_.fused_width;
  auto head_parts = split_channels(head_.backward(classifier_.backward(grad_logits)), {fw, bw, bw});
  Tensor5& g_t = head_parts[1];
  Tensor5& g_p = head_parts[2];
  auto dec_parts = split_channels(dec_.backward(head_parts[0]), {fw, fw});
  Tensor5 g_e1 = std::move(dec_parts[1]);
  const Tensor5 g_up = up_conv_.backward(up_relu_.backward(dec_parts[0]));
  const Tensor5 g_e2 = upsample_nearest2_backward(g_up, bottleneck_shape_);
  g_e1 += enc2_.backward(bottleneck_.backward(g_e2));
  auto enc_parts = split_channels(enc1_.backward(g_e1), {bw, bw});
  g_t += enc_parts[0];
  g_p += enc_parts[1];
  Tensor5 g_priors = prior_in_.backward(g_p);
  Tensor5 g_tsdf = tsdf_down1_.backward(tsdf_down2_.backward(g_t));
  return {std::move(g_tsdf), std::move(g_priors)};
}

std::vector<Param*> MiniSpawn::params() {
  std::vector<Param*> out;
  for (BnDdrBlock* b : {&tsdf_down1_, &tsdf_down2_, &prior_in_, &enc1_, &enc2_, &bottleneck_}) {
    b->collect_params(out);
  }
  up_conv_.collect_params(out);
  dec_.collect_params(out);
  head_.collect_params(out);
  classifier_.collect_params(out);
  return out;
}

std::vector<Param*> MiniSpawn::buffers() {
  std::vector<Param*> out;
  for (BnDdrBlock* b : {&tsdf_down1_, &tsdf_down2_, &prior_in_, &enc1_, &enc2_, &bottleneck_,
                        &dec_, &head_}) {
    b->collect_buffers(out);
  }
  return out;
}

void MiniSpawn::zero_grad() {
  for (Param* p : params()) p->zero_grad();
}

std::vector<std::uint8_t> MiniSpawn::relu_masks() const {
  std::vector<std::uint8_t> out;
  for (const BnDdrBlock* b : {&tsdf_down1_, &tsdf_down2_, &prior_in_, &enc1_, &enc2_,
                              &bottleneck_}) {
    b->append_relu_masks(out);
  }
  up_relu_.append_relu_masks(out);
  dec_.append_relu_masks(out);
  head_.append_relu_masks(out);
  return out;
}

}  // namespace sscvox::net
