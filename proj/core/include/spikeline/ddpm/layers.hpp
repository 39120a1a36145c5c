#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spikeline/ddpm/params.hpp"
#include "spikeline/ddpm/tensor.hpp"

// Toy layers with closed-form backward passes. backward() accumulates
// parameter gradients into Param::grad and returns the input gradient; it
// takes the same input that forward() saw.
namespace spikeline::ddpm {

double silu(double x);
double silu_grad(double x);

// 3x3, stride 1, zero padding 1.
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(BlockParams& params, const std::string& name, std::uint32_t in_channels,
         std::uint32_t out_channels, bool zero_init);

  Tensor forward(const Tensor& x) const;
  Tensor backward(const Tensor& x, const Tensor& dy) const;

  std::uint32_t in_channels() const { return in_; }
  std::uint32_t out_channels() const { return out_; }

 private:
  std::uint32_t in_ = 0;
  std::uint32_t out_ = 0;
  Param* weight_ = nullptr;  // [out, in, 3, 3]
  Param* bias_ = nullptr;    // [out]
};

// y = x W^T + b applied to every token row.
class Linear {
 public:
  Linear() = default;
  Linear(BlockParams& params, const std::string& name, std::uint32_t in_features,
         std::uint32_t out_features, bool zero_init = false);

  Matrix forward(const Matrix& x) const;
  Matrix backward(const Matrix& x, const Matrix& dy) const;

  std::uint32_t in_features() const { return in_; }
  std::uint32_t out_features() const { return out_; }

 private:
  std::uint32_t in_ = 0;
  std::uint32_t out_ = 0;
  Param* weight_ = nullptr;  // [out, in]
  Param* bias_ = nullptr;    // [out]
};

// Scaled dot-product attention, softmax(Q K^T / sqrt(d)) V, row-wise.
struct AttentionResult {
  Matrix output;   // [queries, value_dim]
  Matrix weights;  // [queries, keys], rows sum to 1
};

AttentionResult attention(const Matrix& q, const Matrix& k, const Matrix& v);

struct AttentionGrads {
  Matrix dq;
  Matrix dk;
  Matrix dv;
};

AttentionGrads attention_backward(const Matrix& q, const Matrix& k, const Matrix& v,
                                  const Matrix& weights, const Matrix& dout);

}  // namespace spikeline::ddpm
