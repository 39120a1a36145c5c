#include "spikeline/gray_image.hpp"

#include <algorithm>
#include <cmath>

#include "spikeline/error.hpp"

namespace spikeline {

std::uint8_t quantize_level(double value) {
  if (!(value > 0.0)) return 0;
  if (value >= 255.0) return 255;
  return static_cast<std::uint8_t>(std::floor(value + 0.5));
}

Plane to_plane(const GrayImage& image) {
  Plane plane{image.width, image.height, {}};
  plane.values.assign(image.values.begin(), image.values.end());
  return plane;
}

GrayImage quantize(const Plane& plane) {
  GrayImage image(plane.width, plane.height);
  for (std::size_t i = 0; i < plane.values.size(); ++i) {
    image.values[i] = quantize_level(plane.values[i]);
  }
  return image;
}

namespace {

struct Tap {
  std::uint32_t index;
  double weight;
};

using Taps = std::vector<std::vector<Tap>>;

Taps bilinear_taps(std::uint32_t in, std::uint32_t out) {
  Taps taps(out);
  const double scale = static_cast<double>(in) / out;
  for (std::uint32_t o = 0; o < out; ++o) {
    double src = (o + 0.5) * scale - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in - 1));
    const auto i0 = static_cast<std::uint32_t>(std::floor(src));
    const std::uint32_t i1 = std::min(i0 + 1, in - 1);
    const double frac = src - i0;
    taps[o].push_back({i0, 1.0 - frac});
    if (frac > 0.0) taps[o].push_back({i1, frac});
  }
  return taps;
}

Taps area_taps(std::uint32_t in, std::uint32_t out) {
  Taps taps(out);
  const double scale = static_cast<double>(in) / out;
  for (std::uint32_t o = 0; o < out; ++o) {
    const double lo = o * scale;
    const double hi = (o + 1) * scale;
    const auto first = static_cast<std::uint32_t>(std::floor(lo));
    const auto last = std::min(in, static_cast<std::uint32_t>(std::ceil(hi)));
    for (std::uint32_t i = first; i < last; ++i) {
      const double cover = std::min<double>(hi, i + 1) - std::max<double>(lo, i);
      if (cover > 0.0) taps[o].push_back({i, cover / scale});
    }
  }
  return taps;
}

Plane separable(const Plane& src, std::uint32_t width, std::uint32_t height,
                const Taps& xt, const Taps& yt) {
  Plane rows{width, src.height, std::vector<double>(std::size_t{width} * src.height)};
  for (std::uint32_t y = 0; y < src.height; ++y) {
    const double* in = src.values.data() + std::size_t{y} * src.width;
    double* out = rows.values.data() + std::size_t{y} * width;
    for (std::uint32_t x = 0; x < width; ++x) {
      double acc = 0.0;
      for (const Tap& t : xt[x]) acc += t.weight * in[t.index];
      out[x] = acc;
    }
  }
  Plane dst{width, height, std::vector<double>(std::size_t{width} * height)};
  for (std::uint32_t y = 0; y < height; ++y) {
    double* out = dst.values.data() + std::size_t{y} * width;
    for (const Tap& t : yt[y]) {
      const double* in = rows.values.data() + std::size_t{t.index} * width;
      for (std::uint32_t x = 0; x < width; ++x) out[x] += t.weight * in[x];
    }
  }
  return dst;
}

void check_resize(const Plane& src, std::uint32_t width, std::uint32_t height) {
  require(src.width >= 1 && src.height >= 1 && width >= 1 && height >= 1,
          ErrorCode::kInvalidArgument, "resize needs non-empty dimensions");
  require(src.values.size() == std::size_t{src.width} * src.height,
          ErrorCode::kShapeMismatch, "plane buffer does not match dimensions");
}

}  // namespace

Plane resize_bilinear(const Plane& src, std::uint32_t width, std::uint32_t height) {
  check_resize(src, width, height);
  if (width == src.width && height == src.height) return src;
  return separable(src, width, height, bilinear_taps(src.width, width),
                   bilinear_taps(src.height, height));
}

Plane downscale_area(const Plane& src, std::uint32_t width, std::uint32_t height) {
  check_resize(src, width, height);
  require(width <= src.width && height <= src.height, ErrorCode::kInvalidArgument,
          "downscale_area cannot enlarge");
  if (width == src.width && height == src.height) return src;
  return separable(src, width, height, area_taps(src.width, width),
                   area_taps(src.height, height));
}

}  // namespace spikeline
