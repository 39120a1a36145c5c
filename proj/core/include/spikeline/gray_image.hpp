#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace spikeline {

// 8-bit grayscale, row-major.
struct GrayImage {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint8_t> values;

  GrayImage() = default;
  GrayImage(std::uint32_t w, std::uint32_t h, std::uint8_t fill = 0)
      : width(w), height(h), values(std::size_t{w} * h, fill) {}
  GrayImage(std::uint32_t w, std::uint32_t h, std::vector<std::uint8_t> v)
      : width(w), height(h), values(std::move(v)) {}

  std::uint8_t& at(std::uint32_t x, std::uint32_t y) {
    return values[std::size_t{y} * width + x];
  }
  std::uint8_t at(std::uint32_t x, std::uint32_t y) const {
    return values[std::size_t{y} * width + x];
  }
  std::size_t size() const { return values.size(); }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

// Round half-up and clip to [0, 255].
std::uint8_t quantize_level(double value);

// Real-valued plane, row-major. Used for resampling before quantization.
struct Plane {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<double> values;
};

Plane to_plane(const GrayImage& image);
GrayImage quantize(const Plane& plane);

// Bilinear interpolation with half-pixel centers and edge clamping. For
// integer upscale ratios every source pixel receives the same total weight,
// so the mean is preserved.
Plane resize_bilinear(const Plane& src, std::uint32_t width, std::uint32_t height);

// Box filter with exact fractional pixel coverage; preserves the mean.
Plane downscale_area(const Plane& src, std::uint32_t width, std::uint32_t height);

}  // namespace spikeline
