#include "spikeline/recon_classic.hpp"

#include <cmath>

#include "spikeline/error.hpp"

namespace spikeline {

double tfi_current(std::uint32_t isi, const SensorConfig& config) {
  return config.threshold_phi / (static_cast<double>(isi) * config.sample_period);
}

GrayImage tfi(const IsiMap& isi, const SensorConfig& config, double gain) {
  require(isi.isi.size() == std::size_t{isi.width} * isi.height,
          ErrorCode::kShapeMismatch, "ISI map buffer does not match dimensions");
  require(std::isfinite(gain) && gain >= 0.0, ErrorCode::kInvalidArgument,
          "gain must be non-negative");
  GrayImage out(isi.width, isi.height);
  for (std::size_t i = 0; i < isi.size(); ++i) {
    require(isi.isi[i] >= 1, ErrorCode::kInvalidArgument, "ISI must be >= 1");
    out.values[i] = quantize_level(gain * tfi_current(isi.isi[i], config));
  }
  return out;
}

double tfi_default_gain(const SensorConfig& config) {
  return 255.0 * config.sample_period / config.threshold_phi;
}

GrayImage tfp(const SpikeStream& stream, std::int64_t k, std::int64_t delta_t,
              double gain) {
  require(std::isfinite(gain) && gain >= 0.0, ErrorCode::kInvalidArgument,
          "gain must be non-negative");
  const SpikeStream window = slice_window(stream, k, delta_t);
  const RateMap rate = firing_rate_map(window);
  GrayImage out(rate.width, rate.height);
  for (std::size_t i = 0; i < rate.rate.size(); ++i) {
    out.values[i] = quantize_level(gain * rate.rate[i]);
  }
  return out;
}

}  // namespace spikeline
