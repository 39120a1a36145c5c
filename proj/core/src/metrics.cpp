#include "spikeline/metrics.hpp"

#include <cmath>
#include <limits>

#include "spikeline/error.hpp"

namespace spikeline {

namespace {

void check_pair(const GrayImage& a, const GrayImage& b) {
  require(a.width == b.width && a.height == b.height, ErrorCode::kShapeMismatch,
          "images differ in size");
  require(a.values.size() == std::size_t{a.width} * a.height &&
              b.values.size() == a.values.size(),
          ErrorCode::kShapeMismatch, "image buffer does not match dimensions");
}

constexpr int kWindow = 8;
constexpr double kC1 = (0.01 * 255.0) * (0.01 * 255.0);
constexpr double kC2 = (0.03 * 255.0) * (0.03 * 255.0);

}  // namespace

double psnr(const GrayImage& a, const GrayImage& b) {
  check_pair(a, b);
  require(!a.values.empty(), ErrorCode::kEmptyInput, "empty images");
  double sse = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double d = static_cast<double>(a.values[i]) - b.values[i];
    sse += d * d;
  }
  if (sse == 0.0) return std::numeric_limits<double>::infinity();
  const double mse = sse / static_cast<double>(a.values.size());
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

double ssim(const GrayImage& a, const GrayImage& b) {
  check_pair(a, b);
  require(a.width >= kWindow && a.height >= kWindow, ErrorCode::kInvalidArgument,
          "SSIM needs images of at least 8x8");
  const double n = kWindow * kWindow;
  double total = 0.0;
  std::size_t windows = 0;
  for (std::uint32_t y0 = 0; y0 + kWindow <= a.height; ++y0) {
    for (std::uint32_t x0 = 0; x0 + kWindow <= a.width; ++x0) {
      double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
      for (int dy = 0; dy < kWindow; ++dy) {
        for (int dx = 0; dx < kWindow; ++dx) {
          const double va = a.at(x0 + dx, y0 + dy);
          const double vb = b.at(x0 + dx, y0 + dy);
          sa += va;
          sb += vb;
          saa += va * va;
          sbb += vb * vb;
          sab += va * vb;
        }
      }
      const double ma = sa / n;
      const double mb = sb / n;
      const double va = saa / n - ma * ma;
      const double vb = sbb / n - mb * mb;
      const double cov = sab / n - ma * mb;
      total += ((2 * ma * mb + kC1) * (2 * cov + kC2)) /
               ((ma * ma + mb * mb + kC1) * (va + vb + kC2));
      ++windows;
    }
  }
  return total / static_cast<double>(windows);
}

double overexposure_ratio(const EtfiImage& etfi) {
  if (etfi.raw.empty()) return 0.0;
  std::size_t over = 0;
  for (double v : etfi.raw) over += v >= 255.0 ? 1 : 0;
  return static_cast<double>(over) / static_cast<double>(etfi.raw.size());
}

}  // namespace spikeline
