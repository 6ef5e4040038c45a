#include "sscvox/net/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace sscvox::net {

std::string Shape5::str() const {
  return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(d) + "," +
         std::to_string(h) + "," + std::to_string(w) + ")";
}

Tensor5::Tensor5(const Shape5& shape, std::vector<double> data)
    : shape_(shape), data_(std::move(data)) {
  if (data_.size() != shape_.size()) throw UsageError("tensor data does not match shape");
}

void Tensor5::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Tensor5& Tensor5::operator+=(const Tensor5& o) {
  if (!(o.shape_ == shape_)) throw UsageError("tensor shape mismatch in +=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

Tensor5 concat_channels(const std::vector<const Tensor5*>& parts) {
  if (parts.empty()) throw UsageError("nothing to concatenate");
  Shape5 s = parts.front()->shape();
  s.c = 0;
  for (const Tensor5* p : parts) {
    const Shape5& ps = p->shape();
    if (ps.n != s.n || ps.d != s.d || ps.h != s.h || ps.w != s.w) {
      throw UsageError("concat shape mismatch: " + ps.str() + " vs " + s.str());
    }
    s.c += ps.c;
  }
  Tensor5 out(s);
  const std::size_t sp = s.spatial();
  for (int n = 0; n < s.n; ++n) {
    int c0 = 0;
    for (const Tensor5* p : parts) {
      for (int c = 0; c < p->shape().c; ++c) {
        std::copy_n(p->plane(n, c), sp, out.plane(n, c0 + c));
      }
      c0 += p->shape().c;
    }
  }
  return out;
}

std::vector<Tensor5> split_channels(const Tensor5& grad, const std::vector<int>& channels) {
  std::vector<Tensor5> out;
  const Shape5& s = grad.shape();
  const std::size_t sp = s.spatial();
  int c0 = 0;
  for (int ch : channels) {
    Tensor5 part({s.n, ch, s.d, s.h, s.w});
    for (int n = 0; n < s.n; ++n)
      for (int c = 0; c < ch; ++c) std::copy_n(grad.plane(n, c0 + c), sp, part.plane(n, c));
    c0 += ch;
    out.push_back(std::move(part));
  }
  if (c0 != s.c) throw UsageError("split channel counts do not add up");
  return out;
}

Tensor5 upsample_nearest2(const Tensor5& x) {
  const Shape5& s = x.shape();
  Tensor5 out({s.n, s.c, 2 * s.d, 2 * s.h, 2 * s.w});
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int d = 0; d < 2 * s.d; ++d)
        for (int h = 0; h < 2 * s.h; ++h)
          for (int w = 0; w < 2 * s.w; ++w) out.at(n, c, d, h, w) = x.at(n, c, d / 2, h / 2, w / 2);
  return out;
}

Tensor5 upsample_nearest2_backward(const Tensor5& grad_out, const Shape5& s) {
  Tensor5 g(s);
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int d = 0; d < 2 * s.d; ++d)
        for (int h = 0; h < 2 * s.h; ++h)
          for (int w = 0; w < 2 * s.w; ++w) g.at(n, c, d / 2, h / 2, w / 2) += grad_out.at(n, c, d, h, w);
  return g;
}

Tensor5 softmax_channels(const Tensor5& logits) {
  const Shape5& s = logits.shape();
  Tensor5 out(s);
  const std::size_t sp = s.spatial();
  for (int n = 0; n < s.n; ++n) {
    for (std::size_t v = 0; v < sp; ++v) {
      double m = -INFINITY;
      for (int c = 0; c < s.c; ++c) m = std::max(m, logits.plane(n, c)[v]);
      double sum = 0.0;
      for (int c = 0; c < s.c; ++c) {
        const double e = std::exp(logits.plane(n, c)[v] - m);
        out.plane(n, c)[v] = e;
        sum += e;
      }
      for (int c = 0; c < s.c; ++c) out.plane(n, c)[v] /= sum;
    }
  }
  return out;
}

Tensor5 stack_grids(const std::vector<const FloatGrid*>& grids) {
  if (grids.empty()) throw UsageError("empty batch");
  const FloatGrid& g0 = *grids.front();
  Shape5 s{static_cast<int>(grids.size()), g0.channels(), g0.nx(), g0.ny(), g0.nz()};
  Tensor5 t(s);
  for (int n = 0; n < s.n; ++n) {
    const FloatGrid& g = *grids[n];
    if (g.channels() != s.c || g.spec().dims != g0.spec().dims) {
      throw ValidationError("batch grids differ in shape");
    }
    std::copy(g.data().begin(), g.data().end(), t.plane(n, 0));
  }
  return t;
}

FloatGrid tensor_to_grid(const Tensor5& t, int n, const GridSpec& spec) {
  const Shape5& s = t.shape();
  if (spec.dims != std::array<int, 3>{s.d, s.h, s.w}) {
    throw UsageError("grid spec does not match tensor spatial shape");
  }
  std::vector<float> data(static_cast<std::size_t>(s.c) * s.spatial());
  const double* src = t.plane(n, 0);
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<float>(src[i]);
  return FloatGrid(spec, s.c, std::move(data));
}

}  // namespace sscvox::net
