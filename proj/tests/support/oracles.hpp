#pragma once

// Slow, independent reference implementations used as test oracles.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "spikeline/gray_image.hpp"
#include "spikeline/isi_etfi.hpp"
#include "spikeline/spike_core.hpp"

namespace oracle {

// Spike steps (1-indexed) of a single pixel under constant charge per step,
// accumulated in long double with the reset-by-subtraction rule.
inline std::vector<int> scalar_spikes(long double charge, long double phi, int steps) {
  std::vector<int> out;
  long double a = 0;
  for (int n = 1; n <= steps; ++n) {
    a += charge;
    if (a >= phi - 1e-12L * phi) {
      out.push_back(n);
      a -= phi;
      if (a < 0) a = 0;
    }
  }
  return out;
}

// Independent bit packing of a 0/1 row-major frame.
inline std::vector<std::uint8_t> pack_frame(const std::vector<int>& bits, std::uint32_t w,
                                            std::uint32_t h) {
  const std::size_t stride = (w + 7) / 8;
  std::vector<std::uint8_t> out(stride * h, 0);
  for (std::uint32_t y = 0; y < h; ++y)
    for (std::uint32_t x = 0; x < w; ++x)
      if (bits[y * w + x]) out[y * stride + x / 8] |= static_cast<std::uint8_t>(1u << (x % 8));
  return out;
}

inline spikeline::SpikeStream random_stream(std::mt19937_64& rng, std::uint32_t w,
                                            std::uint32_t h, std::size_t frames,
                                            double density) {
  spikeline::SensorConfig cfg;
  cfg.width = w;
  cfg.height = h;
  spikeline::SpikeStream s(cfg, frames);
  std::bernoulli_distribution on(density);
  for (std::size_t f = 0; f < frames; ++f)
    for (std::uint32_t y = 0; y < h; ++y)
      for (std::uint32_t x = 0; x < w; ++x)
        if (on(rng)) s.set(f, x, y, true);
  return s;
}

struct BruteIsi {
  std::vector<std::uint32_t> isi;
  std::vector<std::uint8_t> valid;
};

// O(P * F) scan: last spike at or before k, first spike after k.
inline BruteIsi brute_isi(const spikeline::SpikeStream& s, std::int64_t k) {
  BruteIsi out;
  const auto frames = static_cast<std::int64_t>(s.frame_count());
  for (std::uint32_t y = 0; y < s.height(); ++y) {
    for (std::uint32_t x = 0; x < s.width(); ++x) {
      std::int64_t prev = -1, next = -1;
      for (std::int64_t f = 0; f < frames; ++f) {
        if (!s.bit(static_cast<std::size_t>(f), x, y)) continue;
        if (f <= k) prev = f;
        if (f > k && next < 0) next = f;
      }
      const bool ok = prev >= 0 && next >= 0;
      out.isi.push_back(ok ? static_cast<std::uint32_t>(next - prev)
                           : static_cast<std::uint32_t>(frames));
      out.valid.push_back(ok ? 1 : 0);
    }
  }
  return out;
}

inline std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t t = i; t <= j; ++t) r[idx[t]] = avg;
    i = j + 1;
  }
  return r;
}

// Spearman rank correlation with average ranks for ties.
inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

// Smooth synthetic scene: gradient plus a few blobs, no flat regions.
inline spikeline::GrayImage synthetic_scene(std::uint32_t w, std::uint32_t h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double cx = u(rng) * w, cy = u(rng) * h, r = (0.2 + 0.3 * u(rng)) * w;
  const double gx = u(rng), gy = u(rng);
  spikeline::GrayImage img(w, h);
  for (std::uint32_t y = 0; y < h; ++y)
    for (std::uint32_t x = 0; x < w; ++x) {
      const double d = std::hypot(x - cx, y - cy) / r;
      const double v = 40 + 100 * (gx * x / w + gy * y / h) / (gx + gy + 1e-9) +
                       100 * std::exp(-d * d);
      img.at(x, y) = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
    }
  return img;
}

// Wide dynamic range scene (about 10..250): shading ramp, bright and dark
// blobs and a low-frequency texture, like a well-exposed photograph.
inline spikeline::GrayImage natural_scene(std::uint32_t w, std::uint32_t h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  struct Blob { double x, y, r, a; };
  std::vector<Blob> blobs;
  for (int i = 0; i < 4; ++i)
    blobs.push_back({u(rng) * w, u(rng) * h, (0.15 + 0.3 * u(rng)) * w, i % 2 ? -0.6 : 0.8});
  const double fx = 1 + 2 * u(rng), fy = 1 + 2 * u(rng), ph = 6.28 * u(rng);
  const double gx = u(rng) - 0.5, gy = u(rng) - 0.5;
  std::vector<double> f(std::size_t{w} * h);
  for (std::uint32_t y = 0; y < h; ++y)
    for (std::uint32_t x = 0; x < w; ++x) {
      double v = gx * x / w + gy * y / h +
                 0.15 * std::sin(6.28 * (fx * x / w + fy * y / h) + ph);
      for (const Blob& b : blobs) {
        const double d = std::hypot(x - b.x, y - b.y) / b.r;
        v += b.a * std::exp(-d * d);
      }
      f[std::size_t{y} * w + x] = v;
    }
  const auto [lo, hi] = std::minmax_element(f.begin(), f.end());
  const double a = *lo, span = std::max(1e-9, *hi - *lo);
  spikeline::GrayImage img(w, h);
  for (std::size_t i = 0; i < f.size(); ++i)
    img.values[i] = static_cast<std::uint8_t>(std::lround(10 + 240 * (f[i] - a) / span));
  return img;
}

// Minimal (no comments) P5 writer, independent of the library encoder.
inline std::vector<std::uint8_t> pgm_bytes(const spikeline::GrayImage& img) {
  const std::string head = "P5\n" + std::to_string(img.width) + " " +
                           std::to_string(img.height) + "\n255\n";
  std::vector<std::uint8_t> out(head.begin(), head.end());
  out.insert(out.end(), img.values.begin(), img.values.end());
  return out;
}

}  // namespace oracle
