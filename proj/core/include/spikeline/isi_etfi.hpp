#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "spikeline/gray_image.hpp"
#include "spikeline/spike_core.hpp"

namespace spikeline {

// Per-pixel inter-spike interval around a reference frame, in frames.
struct IsiMap {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint32_t> isi;
  // 1 where both bounding spikes were found.
  std::vector<std::uint8_t> valid;
  // Value stored at invalid pixels: the window length.
  std::uint32_t fallback = 0;

  std::size_t size() const { return isi.size(); }
  std::uint32_t at(std::uint32_t x, std::uint32_t y) const {
    return isi[std::size_t{y} * width + x];
  }
  std::size_t valid_count() const;
};

struct EtfiImage {
  GrayImage image;
  // Unquantized enhanced intensity, row-major.
  std::vector<double> raw;
  // Fraction of pixels with raw >= 255.
  double overexposure_ratio = 0.0;
};

// Interval containing frame k: t_prev is the last spike at or before k, t_next
// the first spike after k. Pixels missing either bound get the window length
// and valid = 0. k is relative to the first frame of the stream.
IsiMap isi_search(const SpikeStream& stream, std::int64_t k, unsigned workers = 1);

// Enhanced texture: raw = max(ISI) / ISI, the maximum taken over valid
// pixels, so the dimmest valid pixel maps to exactly 1.
EtfiImage etfi(const IsiMap& isi);

EtfiImage apply_gain(const EtfiImage& etfi, double gain);

// Gain that maps the 99th-percentile (nearest-rank) raw value to 255.
double auto_gain(const EtfiImage& etfi);
EtfiImage apply_auto_gain(const EtfiImage& etfi);

}  // namespace spikeline
