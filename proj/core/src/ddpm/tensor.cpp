#include "spikeline/ddpm/tensor.hpp"

#include <string>

#include "spikeline/error.hpp"

namespace spikeline::ddpm {

bool same_shape(const Tensor& a, const Tensor& b) {
  return a.channels == b.channels && a.height == b.height && a.width == b.width &&
         a.values.size() == b.values.size();
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (!same_shape(a, b)) {
    fail(ErrorCode::kShapeMismatch,
         std::string(what) + ": shape (" + std::to_string(a.channels) + "," +
             std::to_string(a.height) + "," + std::to_string(a.width) + ") vs (" +
             std::to_string(b.channels) + "," + std::to_string(b.height) + "," +
             std::to_string(b.width) + ")");
  }
}

Matrix to_tokens(const Tensor& t) {
  Matrix m(t.plane(), t.channels);
  for (std::size_t c = 0; c < t.channels; ++c) {
    const double* src = t.values.data() + c * t.plane();
    for (std::size_t n = 0; n < t.plane(); ++n) m(n, c) = src[n];
  }
  return m;
}

Tensor from_tokens(const Matrix& m, std::uint32_t height, std::uint32_t width) {
  require(m.rows == std::size_t{height} * width, ErrorCode::kShapeMismatch,
          "token count does not match spatial size");
  Tensor t(static_cast<std::uint32_t>(m.cols), height, width);
  for (std::size_t c = 0; c < m.cols; ++c) {
    double* dst = t.values.data() + c * t.plane();
    for (std::size_t n = 0; n < m.rows; ++n) dst[n] = m(n, c);
  }
  return t;
}

void add_in_place(std::vector<double>& dst, const std::vector<double>& src) {
  require(dst.size() == src.size(), ErrorCode::kShapeMismatch, "size mismatch in add");
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

double squared_norm(const Tensor& t) {
  double s = 0.0;
  for (double v : t.values) s += v * v;
  return s;
}

}  // namespace spikeline::ddpm
