#pragma once

#include <cstdint>

#include "spikeline/gray_image.hpp"
#include "spikeline/isi_etfi.hpp"
#include "spikeline/spike_core.hpp"

namespace spikeline {

// Current estimated from the interval, phi / (ISI * T), in units per second.
double tfi_current(std::uint32_t isi, const SensorConfig& config);

// Texture from ISI: clip(round(gain * phi / (ISI * T))). gain converts units
// per second to gray levels.
GrayImage tfi(const IsiMap& isi, const SensorConfig& config, double gain);

// Gain that maps the largest representable current (one spike per frame) to 255.
double tfi_default_gain(const SensorConfig& config);

// Texture from playback: clip(round(gain * spikes / (2 * delta_t + 1))) over
// the window centred on k.
GrayImage tfp(const SpikeStream& stream, std::int64_t k, std::int64_t delta_t,
              double gain);

}  // namespace spikeline
