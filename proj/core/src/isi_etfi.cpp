#include "spikeline/isi_etfi.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "spikeline/error.hpp"
#include "spikeline/parallel.hpp"

namespace spikeline {

std::size_t IsiMap::valid_count() const {
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), 1));
}

namespace {

constexpr std::uint32_t kUnset = 0xffffffffu;

// Scans frames in the given order over rows [y0, y1) and records, for each
// pixel, the first frame index at which it spikes. Stops once every pixel in
// the shard is resolved.
template <typename FrameOrder>
void first_hits(const SpikeStream& stream, std::size_t y0, std::size_t y1,
                FrameOrder order, std::size_t frames, std::vector<std::uint32_t>& hit) {
  const std::size_t stride = stream.row_stride();
  const std::uint32_t width = stream.width();
  const std::size_t bytes = (y1 - y0) * stride;
  std::vector<std::uint8_t> pending(bytes, 0xff);
  // Padding bits are never pending.
  if (width % 8 != 0) {
    const auto mask = static_cast<std::uint8_t>((1u << (width % 8)) - 1u);
    for (std::size_t i = stride - 1; i < bytes; i += stride) pending[i] = mask;
  }
  std::size_t remaining = (y1 - y0) * width;
  for (std::size_t n = 0; n < frames && remaining > 0; ++n) {
    const std::uint32_t f = order(n);
    const std::uint8_t* data = stream.data().data() + f * stream.frame_bytes() + y0 * stride;
    for (std::size_t b = 0; b < bytes; ++b) {
      unsigned found = data[b] & pending[b];
      if (found == 0) continue;
      pending[b] = static_cast<std::uint8_t>(pending[b] & ~found);
      const std::size_t row = b / stride;
      const std::size_t x0 = (b % stride) * 8;
      while (found != 0) {
        const int bit = std::countr_zero(found);
        found &= found - 1;
        hit[(y0 + row) * width + x0 + static_cast<std::size_t>(bit)] = f;
        --remaining;
      }
    }
  }
}

EtfiImage quantize_raw(std::vector<double> raw, std::uint32_t width,
                       std::uint32_t height) {
  EtfiImage out;
  out.image = GrayImage(width, height);
  std::size_t over = 0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out.image.values[i] = quantize_level(std::min(raw[i], 255.0));
    if (raw[i] >= 255.0) ++over;
  }
  out.overexposure_ratio = raw.empty() ? 0.0 : static_cast<double>(over) / raw.size();
  out.raw = std::move(raw);
  return out;
}

}  // namespace

IsiMap isi_search(const SpikeStream& stream, std::int64_t k, unsigned workers) {
  const auto frames = static_cast<std::int64_t>(stream.frame_count());
  require(k >= 0 && k < frames, ErrorCode::kOutOfBounds,
          "reference frame " + std::to_string(k) + " outside stream of " +
              std::to_string(frames) + " frames");
  require(frames <= static_cast<std::int64_t>(kUnset) - 1, ErrorCode::kInvalidArgument,
          "stream too long for ISI search");

  const std::size_t pixels = std::size_t{stream.width()} * stream.height();
  IsiMap map{stream.width(), stream.height(), {}, {}, static_cast<std::uint32_t>(frames)};
  std::vector<std::uint32_t> prev(pixels, kUnset);
  std::vector<std::uint32_t> next(pixels, kUnset);
  const auto ref = static_cast<std::uint32_t>(k);
  const auto backward = static_cast<std::size_t>(k) + 1;
  const auto forward = static_cast<std::size_t>(frames - k - 1);

  parallel_for_ranges(stream.height(), workers, [&](std::size_t y0, std::size_t y1) {
    first_hits(stream, y0, y1, [ref](std::size_t n) { return ref - static_cast<std::uint32_t>(n); },
               backward, prev);
    first_hits(stream, y0, y1, [ref](std::size_t n) { return ref + 1 + static_cast<std::uint32_t>(n); },
               forward, next);
  });

  map.isi.resize(pixels);
  map.valid.resize(pixels);
  for (std::size_t i = 0; i < pixels; ++i) {
    const bool ok = prev[i] != kUnset && next[i] != kUnset;
    map.valid[i] = ok ? 1 : 0;
    map.isi[i] = ok ? next[i] - prev[i] : map.fallback;
  }
  return map;
}

EtfiImage etfi(const IsiMap& isi) {
  require(isi.isi.size() == std::size_t{isi.width} * isi.height &&
              isi.valid.size() == isi.isi.size(),
          ErrorCode::kShapeMismatch, "ISI map buffers do not match dimensions");
  std::uint32_t max_isi = 0;
  for (std::size_t i = 0; i < isi.size(); ++i) {
    if (isi.valid[i]) {
      require(isi.isi[i] >= 1, ErrorCode::kInvalidArgument, "ISI must be >= 1");
      max_isi = std::max(max_isi, isi.isi[i]);
    }
  }
  require(max_isi > 0, ErrorCode::kEmptyInput, "ISI map has no valid pixels");

  std::vector<double> raw(isi.size());
  const auto top = static_cast<double>(max_isi);
  for (std::size_t i = 0; i < isi.size(); ++i) {
    raw[i] = top / static_cast<double>(std::max<std::uint32_t>(isi.isi[i], 1));
  }
  return quantize_raw(std::move(raw), isi.width, isi.height);
}

EtfiImage apply_gain(const EtfiImage& etfi, double gain) {
  require(std::isfinite(gain) && gain > 0.0, ErrorCode::kInvalidArgument,
          "gain must be positive");
  std::vector<double> raw(etfi.raw);
  for (double& v : raw) v *= gain;
  return quantize_raw(std::move(raw), etfi.image.width, etfi.image.height);
}

double auto_gain(const EtfiImage& etfi) {
  require(!etfi.raw.empty(), ErrorCode::kEmptyInput, "empty ETFI image");
  std::vector<double> sorted(etfi.raw);
  const auto rank = static_cast<std::size_t>(std::ceil(0.99 * sorted.size()));
  const std::size_t index = std::max<std::size_t>(rank, 1) - 1;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(index),
                   sorted.end());
  const double p99 = sorted[index];
  require(p99 > 0.0, ErrorCode::kInvalidArgument, "99th percentile is zero");
  return 255.0 / p99;
}

EtfiImage apply_auto_gain(const EtfiImage& etfi) {
  return apply_gain(etfi, auto_gain(etfi));
}

}  // namespace spikeline
