#include "sscvox/net/layers.hpp"

#include <Eigen/Core>

#include <cmath>

namespace sscvox::net {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMap = Eigen::Map<RowMat>;
using ConstRowMap = Eigen::Map<const RowMat>;

}  // namespace

Conv3d::Conv3d(std::string name, const Conv3dConfig& cfg) : cfg_(cfg) {
  if (cfg.in_channels < 1 || cfg.out_channels < 1) throw UsageError("conv channels must be >= 1");
  for (int i = 0; i < 3; ++i) {
    if (cfg.kernel[i] < 1 || cfg.stride[i] < 1 || cfg.dilation[i] < 1 || cfg.padding[i] < 0) {
      throw UsageError("invalid conv geometry");
    }
  }
  weight_ = Param(name + ".weight", {cfg.out_channels, cfg.in_channels, cfg.kernel[0],
                                     cfg.kernel[1], cfg.kernel[2]});
  if (cfg.bias) bias_ = Param(name + ".bias", {1, cfg.out_channels, 1, 1, 1});
}

void Conv3d::init(std::mt19937_64& rng) {
  const double fan_in =
      static_cast<double>(cfg_.in_channels) * cfg_.kernel[0] * cfg_.kernel[1] * cfg_.kernel[2];
  std::uniform_real_distribution<double> u(-std::sqrt(6.0 / fan_in), std::sqrt(6.0 / fan_in));
  for (double& w : weight_.value.data()) w = u(rng);
  bias_.value.fill(0.0);
}

bool Conv3d::is_pointwise() const {
  return cfg_.kernel == Triple{1, 1, 1} && cfg_.stride == Triple{1, 1, 1} &&
         cfg_.padding == Triple{0, 0, 0};
}

Shape5 Conv3d::output_shape(const Shape5& in) const {
  if (in.c != cfg_.in_channels) {
    throw UsageError(weight_.name + ": expected " + std::to_string(cfg_.in_channels) +
                     " input channels, got " + in.str());
  }
  const int dims[3] = {in.d, in.h, in.w};
  int out[3];
  for (int i = 0; i < 3; ++i) {
    const int span = cfg_.dilation[i] * (cfg_.kernel[i] - 1) + 1;
    const int padded = dims[i] + 2 * cfg_.padding[i];
    if (padded < span) throw UsageError(weight_.name + ": input too small " + in.str());
    out[i] = (padded - span) / cfg_.stride[i] + 1;
  }
  return {in.n, cfg_.out_channels, out[0], out[1], out[2]};
}

void Conv3d::im2col(const Tensor5& x, int n, std::vector<double>& col) const {
  const Shape5& is = x.shape();
  const Shape5& os = out_shape_;
  const std::size_t P = os.spatial();
  const auto [kd, kh, kw] = cfg_.kernel;
  col.assign(static_cast<std::size_t>(cfg_.in_channels) * kd * kh * kw * P, 0.0);
  std::size_t row = 0;
  for (int i = 0; i < cfg_.in_channels; ++i) {
    const double* src = x.plane(n, i);
    for (int a = 0; a < kd; ++a)
      for (int b = 0; b < kh; ++b)
        for (int c = 0; c < kw; ++c, ++row) {
          double* dst = col.data() + row * P;
          for (int od = 0; od < os.d; ++od) {
            const int id = od * cfg_.stride[0] - cfg_.padding[0] + a * cfg_.dilation[0];
            if (id < 0 || id >= is.d) continue;
            for (int oh = 0; oh < os.h; ++oh) {
              const int ih = oh * cfg_.stride[1] - cfg_.padding[1] + b * cfg_.dilation[1];
              if (ih < 0 || ih >= is.h) continue;
              const double* line = src + (static_cast<std::size_t>(id) * is.h + ih) * is.w;
              double* out = dst + (static_cast<std::size_t>(od) * os.h + oh) * os.w;
              for (int ow = 0; ow < os.w; ++ow) {
                const int iw = ow * cfg_.stride[2] - cfg_.padding[2] + c * cfg_.dilation[2];
                if (iw >= 0 && iw < is.w) out[ow] = line[iw];
              }
            }
          }
        }
  }
}

void Conv3d::col2im(const std::vector<double>& col, int n, Tensor5& dx) const {
  const Shape5& is = dx.shape();
  const Shape5& os = out_shape_;
  const std::size_t P = os.spatial();
  const auto [kd, kh, kw] = cfg_.kernel;
  std::size_t row = 0;
  for (int i = 0; i < cfg_.in_channels; ++i) {
    double* dst = dx.plane(n, i);
    for (int a = 0; a < kd; ++a)
      for (int b = 0; b < kh; ++b)
        for (int c = 0; c < kw; ++c, ++row) {
          const double* src = col.data() + row * P;
          for (int od = 0; od < os.d; ++od) {
            const int id = od * cfg_.stride[0] - cfg_.padding[0] + a * cfg_.dilation[0];
            if (id < 0 || id >= is.d) continue;
            for (int oh = 0; oh < os.h; ++oh) {
              const int ih = oh * cfg_.stride[1] - cfg_.padding[1] + b * cfg_.dilation[1];
              if (ih < 0 || ih >= is.h) continue;
              double* line = dst + (static_cast<std::size_t>(id) * is.h + ih) * is.w;
              const double* g = src + (static_cast<std::size_t>(od) * os.h + oh) * os.w;
              for (int ow = 0; ow < os.w; ++ow) {
                const int iw = ow * cfg_.stride[2] - cfg_.padding[2] + c * cfg_.dilation[2];
                if (iw >= 0 && iw < is.w) line[iw] += g[ow];
              }
            }
          }
        }
  }
}

Tensor5 Conv3d::forward(const Tensor5& x, Mode) {
  out_shape_ = output_shape(x.shape());
  input_ = x;
  Tensor5 y(out_shape_);
  const Eigen::Index K = static_cast<Eigen::Index>(weight_.value.size() / cfg_.out_channels);
  const Eigen::Index P = static_cast<Eigen::Index>(out_shape_.spatial());
  ConstRowMap w(weight_.value.ptr(), cfg_.out_channels, K);
  std::vector<double> col;
  for (int n = 0; n < x.shape().n; ++n) {
    RowMap out(y.plane(n, 0), cfg_.out_channels, P);
    if (is_pointwise()) {
      out.noalias() = w * ConstRowMap(x.plane(n, 0), K, P);
    } else {
      im2col(x, n, col);
      out.noalias() = w * ConstRowMap(col.data(), K, P);
    }
    if (cfg_.bias) {
      for (int o = 0; o < cfg_.out_channels; ++o) out.row(o).array() += bias_.value.data()[o];
    }
  }
  return y;
}

Tensor5 Conv3d::backward(const Tensor5& grad_out) {
  if (!(grad_out.shape() == out_shape_)) throw UsageError(weight_.name + ": gradient shape mismatch");
  Tensor5 dx(input_.shape());
  const Eigen::Index K = static_cast<Eigen::Index>(weight_.value.size() / cfg_.out_channels);
  const Eigen::Index P = static_cast<Eigen::Index>(out_shape_.spatial());
  ConstRowMap w(weight_.value.ptr(), cfg_.out_channels, K);
  RowMap dw(weight_.grad.ptr(), cfg_.out_channels, K);
  std::vector<double> col, dcol;
  for (int n = 0; n < input_.shape().n; ++n) {
    ConstRowMap g(grad_out.plane(n, 0), cfg_.out_channels, P);
    if (cfg_.bias) {
      for (int o = 0; o < cfg_.out_channels; ++o) bias_.grad.data()[o] += g.row(o).sum();
    }
    if (is_pointwise()) {
      ConstRowMap xin(input_.plane(n, 0), K, P);
      dw.noalias() += g * xin.transpose();
      RowMap dxin(dx.plane(n, 0), K, P);
      dxin.noalias() += w.transpose() * g;
    } else {
      im2col(input_, n, col);
      dw.noalias() += g * ConstRowMap(col.data(), K, P).transpose();
      dcol.assign(col.size(), 0.0);
      RowMap dc(dcol.data(), K, P);
      dc.noalias() = w.transpose() * g;
      col2im(dcol, n, dx);
    }
  }
  return dx;
}

void Conv3d::collect_params(std::vector<Param*>& out) {
  out.push_back(&weight_);
  if (cfg_.bias) out.push_back(&bias_);
}

BatchNorm3d::BatchNorm3d(std::string name, int channels)
    : channels_(channels),
      gamma_(name + ".gamma", {1, channels, 1, 1, 1}),
      beta_(name + ".beta", {1, channels, 1, 1, 1}),
      running_mean_(name + ".running_mean", {1, channels, 1, 1, 1}),
      running_var_(name + ".running_var", {1, channels, 1, 1, 1}) {
  gamma_.value.fill(1.0);
  running_var_.value.fill(1.0);
}

Tensor5 BatchNorm3d::forward(const Tensor5& x, Mode mode) {
  const Shape5& s = x.shape();
  if (s.c != channels_) throw UsageError(gamma_.name + ": channel mismatch " + s.str());
  const std::size_t sp = s.spatial();
  const std::size_t m = static_cast<std::size_t>(s.n) * sp;
  last_mode_ = mode;
  x_hat_ = Tensor5(s);
  inv_std_.assign(channels_, 0.0);
  Tensor5 y(s);
  for (int c = 0; c < channels_; ++c) {
    double mean, var;
    if (mode == Mode::kTrain) {
      if (m < 2) throw ValidationError(gamma_.name + ": degenerate batch in train mode");
      double sum = 0.0;
      for (int n = 0; n < s.n; ++n) {
        const double* p = x.plane(n, c);
        for (std::size_t i = 0; i < sp; ++i) sum += p[i];
      }
      mean = sum / m;
      double sq = 0.0;
      for (int n = 0; n < s.n; ++n) {
        const double* p = x.plane(n, c);
        for (std::size_t i = 0; i < sp; ++i) sq += (p[i] - mean) * (p[i] - mean);
      }
      var = sq / m;
      double& rm = running_mean_.value.data()[c];
      double& rv = running_var_.value.data()[c];
      rm = (1.0 - kBatchNormMomentum) * rm + kBatchNormMomentum * mean;
      rv = (1.0 - kBatchNormMomentum) * rv + kBatchNormMomentum * var * m / (m - 1);
    } else {
      mean = running_mean_.value.data()[c];
      var = running_var_.value.data()[c];
    }
    const double inv = 1.0 / std::sqrt(var + kBatchNormEps);
    inv_std_[c] = inv;
    const double g = gamma_.value.data()[c];
    const double b = beta_.value.data()[c];
    for (int n = 0; n < s.n; ++n) {
      const double* p = x.plane(n, c);
      double* xh = x_hat_.plane(n, c);
      double* out = y.plane(n, c);
      for (std::size_t i = 0; i < sp; ++i) {
        xh[i] = (p[i] - mean) * inv;
        out[i] = g * xh[i] + b;
      }
    }
  }
  return y;
}

Tensor5 BatchNorm3d::backward(const Tensor5& grad_out) {
  const Shape5& s = x_hat_.shape();
  if (!(grad_out.shape() == s)) throw UsageError(gamma_.name + ": gradient shape mismatch");
  const std::size_t sp = s.spatial();
  const double m = static_cast<double>(s.n) * sp;
  Tensor5 dx(s);
  for (int c = 0; c < channels_; ++c) {
    const double g = gamma_.value.data()[c];
    double sum_dy = 0.0, sum_dy_xh = 0.0;
    for (int n = 0; n < s.n; ++n) {
      const double* dy = grad_out.plane(n, c);
      const double* xh = x_hat_.plane(n, c);
      for (std::size_t i = 0; i < sp; ++i) {
        sum_dy += dy[i];
        sum_dy_xh += dy[i] * xh[i];
      }
    }
    gamma_.grad.data()[c] += sum_dy_xh;
    beta_.grad.data()[c] += sum_dy;
    const double inv = inv_std_[c];
    for (int n = 0; n < s.n; ++n) {
      const double* dy = grad_out.plane(n, c);
      const double* xh = x_hat_.plane(n, c);
      double* out = dx.plane(n, c);
      if (last_mode_ == Mode::kTrain) {
        const double k = g * inv / m;
        for (std::size_t i = 0; i < sp; ++i) {
          out[i] = k * (m * dy[i] - sum_dy - xh[i] * sum_dy_xh);
        }
      } else {
        for (std::size_t i = 0; i < sp; ++i) out[i] = g * inv * dy[i];
      }
    }
  }
  return dx;
}

void BatchNorm3d::collect_params(std::vector<Param*>& out) {
  out.push_back(&gamma_);
  out.push_back(&beta_);
}

void BatchNorm3d::collect_buffers(std::vector<Param*>& out) {
  out.push_back(&running_mean_);
  out.push_back(&running_var_);
}

Tensor5 ReLU::forward(const Tensor5& x, Mode) {
  shape_ = x.shape();
  mask_.resize(x.size());
  Tensor5 y(shape_);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = x.data()[i];
    mask_[i] = v > 0.0;
    y.data()[i] = mask_[i] ? v : 0.0;
  }
  return y;
}

Tensor5 ReLU::backward(const Tensor5& grad_out) {
  if (!(grad_out.shape() == shape_)) throw UsageError("relu: gradient shape mismatch");
  Tensor5 dx(shape_);
  for (std::size_t i = 0; i < dx.size(); ++i) dx.data()[i] = mask_[i] ? grad_out.data()[i] : 0.0;
  return dx;
}

void ReLU::append_relu_masks(std::vector<std::uint8_t>& out) const {
  out.insert(out.end(), mask_.begin(), mask_.end());
}

}  // namespace sscvox::net
