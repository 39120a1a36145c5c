#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace spikeline::ddpm {

// Channel-major (C, H, W) tensor of doubles.
struct Tensor {
  std::uint32_t channels = 0;
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::vector<double> values;

  Tensor() = default;
  Tensor(std::uint32_t c, std::uint32_t h, std::uint32_t w, double fill = 0.0)
      : channels(c), height(h), width(w),
        values(std::size_t{c} * h * w, fill) {}

  std::size_t size() const { return values.size(); }
  std::size_t plane() const { return std::size_t{height} * width; }
  double& at(std::uint32_t c, std::uint32_t y, std::uint32_t x) {
    return values[(std::size_t{c} * height + y) * width + x];
  }
  double at(std::uint32_t c, std::uint32_t y, std::uint32_t x) const {
    return values[(std::size_t{c} * height + y) * width + x];
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

using LatentTensor = Tensor;

bool same_shape(const Tensor& a, const Tensor& b);
void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

// Row-major matrix; rows are tokens, columns features.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), values(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  const double* row(std::size_t r) const { return values.data() + r * cols; }
  double* row(std::size_t r) { return values.data() + r * cols; }
};

// One token per spatial position (y * W + x), one feature per channel.
Matrix to_tokens(const Tensor& t);
Tensor from_tokens(const Matrix& m, std::uint32_t height, std::uint32_t width);

void add_in_place(std::vector<double>& dst, const std::vector<double>& src);
double squared_norm(const Tensor& t);

}  // namespace spikeline::ddpm
