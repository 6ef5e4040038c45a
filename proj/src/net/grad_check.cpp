#include "sscvox/net/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>

#include "sscvox/core.hpp"
#include "sscvox/net/bn_ddr.hpp"
#include "sscvox/net/mini_spawn.hpp"
#include "sscvox/net/trainer.hpp"

namespace sscvox::net {

GradCheckResult check_gradients(const std::function<double()>& objective,
                                const std::vector<GradCheckTarget>& targets,
                                const std::function<std::vector<std::uint8_t>()>& relu_masks) {
  constexpr int kMaxShrink = 4;
  GradCheckResult result;
  objective();
  const std::vector<std::uint8_t> base = relu_masks ? relu_masks() : std::vector<std::uint8_t>{};
  for (const GradCheckTarget& t : targets) {
    auto value = t.param->value.data();
    const auto grad = t.param->grad.data();
    for (std::size_t i = 0; i < value.size(); i += std::max<std::size_t>(1, t.stride)) {
      const double theta = value[i];
      double h = 1e-5 * std::max(1.0, std::abs(theta));
      double plus = 0.0, minus = 0.0;
      for (int attempt = 0;; ++attempt) {
        value[i] = theta + h;
        plus = objective();
        const bool plus_same = !relu_masks || relu_masks() == base;
        value[i] = theta - h;
        minus = objective();
        const bool minus_same = !relu_masks || relu_masks() == base;
        value[i] = theta;
        if ((plus_same && minus_same) || attempt == kMaxShrink) break;
        h /= 10.0;
        ++result.kink_retries;
      }
      const double numeric = (plus - minus) / (2.0 * h);
      const double analytic = grad[i];
      const double err = std::abs(analytic - numeric) /
                         std::max({std::abs(analytic), std::abs(numeric), 1e-8});
      ++result.checked;
      if (err > result.max_rel_error || result.worst.empty()) {
        result.max_rel_error = std::max(result.max_rel_error, err);
        if (err >= result.max_rel_error) {
          result.worst = t.param->name + "[" + std::to_string(i) + "]";
        }
      }
    }
  }
  return result;
}

GradCheckModule parse_grad_check_module(const std::string& name) {
  if (name == "linear") return GradCheckModule::kLinear;
  if (name == "conv3d") return GradCheckModule::kConv3d;
  if (name == "batchnorm") return GradCheckModule::kBatchNorm;
  if (name == "bn_ddr") return GradCheckModule::kBnDdr;
  if (name == "mini_spawn") return GradCheckModule::kMiniSpawn;
  throw UsageError("unknown module '" + name +
                   "' (expected linear, conv3d, batchnorm, bn_ddr or mini_spawn)");
}

std::string to_string(GradCheckModule m) {
  switch (m) {
    case GradCheckModule::kLinear: return "linear";
    case GradCheckModule::kConv3d: return "conv3d";
    case GradCheckModule::kBatchNorm: return "batchnorm";
    case GradCheckModule::kBnDdr: return "bn_ddr";
    case GradCheckModule::kMiniSpawn: return "mini_spawn";
  }
  return "?";
}

namespace {

void fill_uniform(Tensor5& t, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  for (double& v : t.data()) v = u(rng);
}

double dot(const Tensor5& a, const Tensor5& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.data()[i] * b.data()[i];
  return s;
}

void merge(GradCheckResult& into, const GradCheckResult& r) {
  if (r.max_rel_error >= into.max_rel_error) {
    into.max_rel_error = r.max_rel_error;
    into.worst = r.worst;
  }
  into.checked += r.checked;
  into.kink_retries += r.kink_retries;
}

// Checks a single-input module under the objective sum(r * module(x)).
GradCheckResult check_module(Module& m, const Shape5& in_shape, Mode mode, std::mt19937_64& rng) {
  Param input("input", in_shape);
  fill_uniform(input.value, rng, -1.0, 1.0);
  Tensor5 probe = m.forward(input.value, mode);
  fill_uniform(probe, rng, -1.0, 1.0);

  std::vector<Param*> params;
  m.collect_params(params);
  for (Param* p : params) p->zero_grad();
  input.zero_grad();
  m.forward(input.value, mode);
  input.grad = m.backward(probe);

  std::vector<GradCheckTarget> targets;
  for (Param* p : params) targets.push_back({p, 1});
  targets.push_back({&input, 1});
  return check_gradients([&] { return dot(m.forward(input.value, mode), probe); }, targets,
                         [&] {
                           std::vector<std::uint8_t> masks;
                           m.append_relu_masks(masks);
                           return masks;
                         });
}

void randomize_bn(BatchNorm3d& bn, std::mt19937_64& rng) {
  fill_uniform(bn.gamma().value, rng, 0.5, 1.5);
  fill_uniform(bn.beta().value, rng, -0.5, 0.5);
}

void randomize_biases(Conv3d& c, std::mt19937_64& rng) {
  if (c.config().bias) fill_uniform(c.bias().value, rng, -0.2, 0.2);
}

GradCheckResult check_mini_spawn(std::mt19937_64& rng) {
  MiniSpawnConfig cfg;
  cfg.output_dims = {4, 2, 4};
  cfg.branch_width = 3;
  cfg.fused_width = 4;
  cfg.deep_width = 4;
  MiniSpawn net(cfg);
  net.init(rng());
  for (Param* p : net.params()) {
    if (p->name.ends_with(".gamma")) fill_uniform(p->value, rng, 0.5, 1.5);
    if (p->name.ends_with(".beta") || p->name.ends_with(".bias")) fill_uniform(p->value, rng, -0.2, 0.2);
  }
  const auto in = cfg.input_dims();
  const int batch = 2;
  Param tsdf("tsdf", {batch, 1, in[0], in[1], in[2]});
  Param priors("priors", {batch, cfg.prior_channels, cfg.output_dims[0], cfg.output_dims[1],
                          cfg.output_dims[2]});
  fill_uniform(tsdf.value, rng, -1.0, 1.0);
  fill_uniform(priors.value, rng, 0.0, 1.0);

  const GridSpec low{cfg.output_dims, 1.0, Vec3::Zero()};
  std::vector<LabelGrid> labels;
  std::vector<SelectionMask> masks;
  std::uniform_int_distribution<int> cls(0, cfg.classes - 1);
  std::bernoulli_distribution pick(0.7);
  for (int n = 0; n < batch; ++n) {
    LabelGrid l(low, 1, 0);
    SelectionMask m{LabelGrid(low, 1, 0)};
    for (std::size_t v = 0; v < l.size(); ++v) {
      l.data()[v] = static_cast<std::uint8_t>(cls(rng));
      m.bits.data()[v] = pick(rng) ? 1 : 0;
    }
    m.bits.data()[0] = 1;
    labels.push_back(std::move(l));
    masks.push_back(std::move(m));
  }
  std::vector<const LabelGrid*> label_ptrs;
  std::vector<const SelectionMask*> mask_ptrs;
  for (int n = 0; n < batch; ++n) {
    label_ptrs.push_back(&labels[n]);
    mask_ptrs.push_back(&masks[n]);
  }
  const ClassTable table = default_class_table();

  auto objective = [&] {
    const auto out = net.forward(tsdf.value, priors.value, Mode::kTrain);
    return batch_loss(out.probs, label_ptrs, mask_ptrs, table, nullptr);
  };
  net.zero_grad();
  const auto out = net.forward(tsdf.value, priors.value, Mode::kTrain);
  Tensor5 grad;
  batch_loss(out.probs, label_ptrs, mask_ptrs, table, &grad);
  auto [g_tsdf, g_priors] = net.backward(grad);
  tsdf.grad = std::move(g_tsdf);
  priors.grad = std::move(g_priors);

  std::vector<GradCheckTarget> targets;
  for (Param* p : net.params()) targets.push_back({p, 1});
  targets.push_back({&tsdf, 7});
  targets.push_back({&priors, 3});
  return check_gradients(objective, targets, [&] { return net.relu_masks(); });
}

}  // namespace

GradCheckResult grad_check(GradCheckModule module, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  switch (module) {
    case GradCheckModule::kLinear: {
      Conv3dConfig cfg;
      cfg.in_channels = 3;
      cfg.out_channels = 4;
      Conv3d linear("linear", cfg);
      linear.init(rng);
      randomize_biases(linear, rng);
      return check_module(linear, {2, 3, 2, 2, 2}, Mode::kTrain, rng);
    }
    case GradCheckModule::kConv3d: {
      std::vector<Conv3dConfig> configs;
      Conv3dConfig c;
      c.in_channels = 3;
      c.out_channels = 2;
      c.kernel = {3, 3, 3};
      c.padding = {1, 1, 1};
      configs.push_back(c);
      c.kernel = {3, 1, 1};
      c.padding = {1, 0, 0};
      c.stride = {2, 1, 1};
      configs.push_back(c);
      c.kernel = {1, 3, 1};
      c.padding = {0, 2, 0};
      c.stride = {1, 1, 1};
      c.dilation = {1, 2, 1};
      configs.push_back(c);
      c.kernel = {1, 1, 3};
      c.padding = {0, 0, 0};
      c.dilation = {1, 1, 1};
      c.stride = {1, 1, 2};
      c.bias = false;
      configs.push_back(c);
      GradCheckResult total;
      int idx = 0;
      for (const auto& cfg : configs) {
        Conv3d conv("conv" + std::to_string(idx++), cfg);
        conv.init(rng);
        randomize_biases(conv, rng);
        merge(total, check_module(conv, {2, 3, 4, 4, 4}, Mode::kTrain, rng));
      }
      return total;
    }
    case GradCheckModule::kBatchNorm: {
      BatchNorm3d bn("bn", 3);
      randomize_bn(bn, rng);
      GradCheckResult total = check_module(bn, {2, 3, 4, 4, 4}, Mode::kTrain, rng);
      fill_uniform(bn.running_mean().value, rng, -0.5, 0.5);
      fill_uniform(bn.running_var().value, rng, 0.5, 2.0);
      merge(total, check_module(bn, {2, 3, 4, 4, 4}, Mode::kEval, rng));
      return total;
    }
    case GradCheckModule::kBnDdr: {
      GradCheckResult total;
      for (const auto& [in, out, stride] : {std::tuple{4, 4, 1}, std::tuple{4, 6, 2}}) {
        BnDdrConfig cfg;
        cfg.in_channels = in;
        cfg.out_channels = out;
        cfg.stride = stride;
        BnDdrBlock block("bn_ddr", cfg);
        block.init(rng);
        randomize_bn(block.reduce_bn(), rng);
        randomize_bn(block.expand_bn(), rng);
        for (Conv3d* c : {&block.conv_d(), &block.conv_h()}) randomize_biases(*c, rng);
        if (block.projection()) randomize_biases(*block.projection(), rng);
        merge(total, check_module(block, {2, 4, 6, 6, 6}, Mode::kTrain, rng));
      }
      return total;
    }
    case GradCheckModule::kMiniSpawn:
      return check_mini_spawn(rng);
  }
  throw UsageError("unknown grad-check module");
}

}  // namespace sscvox::net
