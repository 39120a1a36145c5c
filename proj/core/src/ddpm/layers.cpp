#include "spikeline/ddpm/layers.hpp"

#include <algorithm>
#include <cmath>

#include "spikeline/error.hpp"

namespace spikeline::ddpm {

double silu(double x) { return x / (1.0 + std::exp(-x)); }

double silu_grad(double x) {
  const double s = 1.0 / (1.0 + std::exp(-x));
  return s * (1.0 + x * (1.0 - s));
}

Conv2d::Conv2d(BlockParams& params, const std::string& name,
               std::uint32_t in_channels, std::uint32_t out_channels, bool zero_init)
    : in_(in_channels), out_(out_channels) {
  const Init init = zero_init ? Init::kZero : Init::kUniformFanIn;
  weight_ = params.add(name + ".weight", {out_, in_, 3, 3}, init, in_ * 9);
  bias_ = params.add(name + ".bias", {out_}, init, in_ * 9);
}

Tensor Conv2d::forward(const Tensor& x) const {
  require(x.channels == in_, ErrorCode::kShapeMismatch, "conv input channel mismatch");
  const std::uint32_t h = x.height;
  const std::uint32_t w = x.width;
  Tensor y(out_, h, w);
  const double* wt = weight_->value.data();
  for (std::uint32_t o = 0; o < out_; ++o) {
    double* yo = y.values.data() + std::size_t{o} * y.plane();
    std::fill(yo, yo + y.plane(), bias_->value[o]);
    for (std::uint32_t i = 0; i < in_; ++i) {
      const double* xi = x.values.data() + std::size_t{i} * x.plane();
      const double* k = wt + (std::size_t{o} * in_ + i) * 9;
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          const double kv = k[ky * 3 + kx];
          if (kv == 0.0) continue;
          const int dy = ky - 1;
          const int dx = kx - 1;
          const std::uint32_t y0 = dy < 0 ? 1 : 0;
          const std::uint32_t y1 = dy > 0 ? h - 1 : h;
          const std::uint32_t x0 = dx < 0 ? 1 : 0;
          const std::uint32_t x1 = dx > 0 ? w - 1 : w;
          for (std::uint32_t yy = y0; yy < y1; ++yy) {
            const double* src = xi + std::size_t(yy + dy) * w + dx;
            double* dst = yo + std::size_t{yy} * w;
            for (std::uint32_t xx = x0; xx < x1; ++xx) dst[xx] += kv * src[xx];
          }
        }
      }
    }
  }
  return y;
}

Tensor Conv2d::backward(const Tensor& x, const Tensor& dy) const {
  require(dy.channels == out_ && dy.height == x.height && dy.width == x.width,
          ErrorCode::kShapeMismatch, "conv gradient shape mismatch");
  const std::uint32_t h = x.height;
  const std::uint32_t w = x.width;
  Tensor dx(in_, h, w);
  const double* wt = weight_->value.data();
  double* dw = weight_->grad.data();
  for (std::uint32_t o = 0; o < out_; ++o) {
    const double* go = dy.values.data() + std::size_t{o} * dy.plane();
    double gb = 0.0;
    for (std::size_t n = 0; n < dy.plane(); ++n) gb += go[n];
    bias_->grad[o] += gb;
    for (std::uint32_t i = 0; i < in_; ++i) {
      const double* xi = x.values.data() + std::size_t{i} * x.plane();
      double* gi = dx.values.data() + std::size_t{i} * dx.plane();
      const std::size_t kbase = (std::size_t{o} * in_ + i) * 9;
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          const int dyo = ky - 1;
          const int dxo = kx - 1;
          const std::uint32_t y0 = dyo < 0 ? 1 : 0;
          const std::uint32_t y1 = dyo > 0 ? h - 1 : h;
          const std::uint32_t x0 = dxo < 0 ? 1 : 0;
          const std::uint32_t x1 = dxo > 0 ? w - 1 : w;
          const double kv = wt[kbase + ky * 3 + kx];
          double acc = 0.0;
          for (std::uint32_t yy = y0; yy < y1; ++yy) {
            const std::size_t src = std::size_t(yy + dyo) * w + dxo;
            const double* g = go + std::size_t{yy} * w;
            for (std::uint32_t xx = x0; xx < x1; ++xx) {
              acc += g[xx] * xi[src + xx];
              gi[src + xx] += kv * g[xx];
            }
          }
          dw[kbase + ky * 3 + kx] += acc;
        }
      }
    }
  }
  return dx;
}

Linear::Linear(BlockParams& params, const std::string& name,
               std::uint32_t in_features, std::uint32_t out_features, bool zero_init)
    : in_(in_features), out_(out_features) {
  const Init init = zero_init ? Init::kZero : Init::kUniformFanIn;
  weight_ = params.add(name + ".weight", {out_, in_}, init, in_);
  bias_ = params.add(name + ".bias", {out_}, init, in_);
}

Matrix Linear::forward(const Matrix& x) const {
  require(x.cols == in_, ErrorCode::kShapeMismatch, "linear input width mismatch");
  Matrix y(x.rows, out_);
  const double* wt = weight_->value.data();
  for (std::size_t r = 0; r < x.rows; ++r) {
    const double* xr = x.row(r);
    double* yr = y.row(r);
    for (std::uint32_t o = 0; o < out_; ++o) {
      const double* wo = wt + std::size_t{o} * in_;
      double acc = bias_->value[o];
      for (std::uint32_t i = 0; i < in_; ++i) acc += wo[i] * xr[i];
      yr[o] = acc;
    }
  }
  return y;
}

Matrix Linear::backward(const Matrix& x, const Matrix& dy) const {
  require(dy.rows == x.rows && dy.cols == out_, ErrorCode::kShapeMismatch,
          "linear gradient shape mismatch");
  Matrix dx(x.rows, in_);
  const double* wt = weight_->value.data();
  double* dw = weight_->grad.data();
  for (std::size_t r = 0; r < x.rows; ++r) {
    const double* xr = x.row(r);
    const double* gr = dy.row(r);
    double* dxr = dx.row(r);
    for (std::uint32_t o = 0; o < out_; ++o) {
      const double g = gr[o];
      if (g == 0.0) continue;
      bias_->grad[o] += g;
      const double* wo = wt + std::size_t{o} * in_;
      double* dwo = dw + std::size_t{o} * in_;
      for (std::uint32_t i = 0; i < in_; ++i) {
        dwo[i] += g * xr[i];
        dxr[i] += g * wo[i];
      }
    }
  }
  return dx;
}

AttentionResult attention(const Matrix& q, const Matrix& k, const Matrix& v) {
  require(q.cols == k.cols && k.rows == v.rows && k.rows > 0, ErrorCode::kShapeMismatch,
          "attention dimension mismatch");
  const double scale = 1.0 / std::sqrt(static_cast<double>(q.cols));
  AttentionResult r{Matrix(q.rows, v.cols), Matrix(q.rows, k.rows)};
  for (std::size_t i = 0; i < q.rows; ++i) {
    const double* qi = q.row(i);
    double* wi = r.weights.row(i);
    double top = -INFINITY;
    for (std::size_t j = 0; j < k.rows; ++j) {
      const double* kj = k.row(j);
      double s = 0.0;
      for (std::size_t c = 0; c < q.cols; ++c) s += qi[c] * kj[c];
      wi[j] = s * scale;
      top = std::max(top, wi[j]);
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < k.rows; ++j) {
      wi[j] = std::exp(wi[j] - top);
      sum += wi[j];
    }
    const double inv = 1.0 / sum;
    double* oi = r.output.row(i);
    for (std::size_t j = 0; j < k.rows; ++j) {
      wi[j] *= inv;
      const double* vj = v.row(j);
      for (std::size_t c = 0; c < v.cols; ++c) oi[c] += wi[j] * vj[c];
    }
  }
  return r;
}

AttentionGrads attention_backward(const Matrix& q, const Matrix& k, const Matrix& v,
                                  const Matrix& weights, const Matrix& dout) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(q.cols));
  AttentionGrads g{Matrix(q.rows, q.cols), Matrix(k.rows, k.cols), Matrix(v.rows, v.cols)};
  std::vector<double> dw(k.rows);
  for (std::size_t i = 0; i < q.rows; ++i) {
    const double* wi = weights.row(i);
    const double* gi = dout.row(i);
    double dot = 0.0;
    for (std::size_t j = 0; j < k.rows; ++j) {
      const double* vj = v.row(j);
      double* dvj = g.dv.row(j);
      double s = 0.0;
      for (std::size_t c = 0; c < v.cols; ++c) {
        s += gi[c] * vj[c];
        dvj[c] += wi[j] * gi[c];
      }
      dw[j] = s;
      dot += s * wi[j];
    }
    const double* qi = q.row(i);
    double* dqi = g.dq.row(i);
    for (std::size_t j = 0; j < k.rows; ++j) {
      const double ds = wi[j] * (dw[j] - dot) * scale;
      if (ds == 0.0) continue;
      const double* kj = k.row(j);
      double* dkj = g.dk.row(j);
      for (std::size_t c = 0; c < q.cols; ++c) {
        dqi[c] += ds * kj[c];
        dkj[c] += ds * qi[c];
      }
    }
  }
  return g;
}

}  // namespace spikeline::ddpm
