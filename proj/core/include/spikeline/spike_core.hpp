#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace spikeline {

// Low-light noise sources applied per pixel and sampling step.
struct NoiseModel {
  bool shot_noise_enabled = false;
  // Poisson scale: photons collected per accumulation unit.
  double photons_per_unit = 1000.0;
  // Constant leakage, accumulation units per second.
  double dark_current = 0.0;
  // Probability that a pixel is hot; membership is fixed per pixel by seed.
  double hot_pixel_fraction = 0.0;
  // Current of a hot pixel, accumulation units per second.
  double hot_pixel_current = 2.0e4;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SensorConfig {
  std::uint32_t width = 1;
  std::uint32_t height = 1;
  double threshold_phi = 1.0;
  // Seconds between readouts; 50 us corresponds to 20 kHz sampling.
  double sample_period = 50e-6;
  // Sampling steps spanned by one luminance video frame.
  std::uint32_t steps_per_frame = 1;
  NoiseModel noise;

  void validate() const;
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * height;
  }
};

// Piecewise-constant input current, one W*H plane per video frame, row-major.
struct LuminanceVideo {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::vector<double>> frames;

  std::size_t frame_count() const { return frames.size(); }

  static LuminanceVideo constant(std::uint32_t width, std::uint32_t height,
                                 double current, std::size_t frame_count = 1);
  static LuminanceVideo still(std::uint32_t width, std::uint32_t height,
                              std::vector<double> currents);
};

// Integrate-and-fire accumulator A(x, t), kept in [0, phi).
struct PixelAccumulator {
  double value = 0.0;

  // Adds one step of charge. Fires when the accumulation reaches phi, then
  // wraps modulo phi so the residual is retained.
  bool step(double charge, double phi) {
    value += charge;
    // Absorbs the rounding drift of repeated decimal charges (0.3 * 10).
    if (value < phi * (1.0 - 1e-12)) return false;
    value -= phi;
    if (value >= phi) value -= phi * static_cast<double>(
                                         static_cast<std::uint64_t>(value / phi));
    if (value < 0.0 || value >= phi) value = 0.0;
    return true;
  }
};

// Non-owning view of one packed spike frame. Rows are LSB-first, padded to a
// whole byte.
class SpikeFrameView {
 public:
  SpikeFrameView(std::span<const std::uint8_t> bytes, std::uint32_t width,
                 std::uint32_t height)
      : bytes_(bytes), width_(width), height_(height),
        stride_((width + 7) / 8) {}

  bool bit(std::uint32_t x, std::uint32_t y) const {
    return (bytes_[static_cast<std::size_t>(y) * stride_ + x / 8] >> (x % 8)) & 1u;
  }
  std::span<const std::uint8_t> bytes() const { return bytes_; }
  std::span<const std::uint8_t> row(std::uint32_t y) const {
    return bytes_.subspan(static_cast<std::size_t>(y) * stride_, stride_);
  }
  std::uint32_t width() const { return width_; }
  std::uint32_t height() const { return height_; }
  std::size_t stride() const { return stride_; }
  std::size_t popcount() const;

 private:
  std::span<const std::uint8_t> bytes_;
  std::uint32_t width_;
  std::uint32_t height_;
  std::size_t stride_;
};

// Ordered binary frames {S_i}. Storage is one contiguous buffer in the same
// packed layout as the .spk payload.
class SpikeStream {
 public:
  SpikeStream() = default;
  SpikeStream(SensorConfig config, std::size_t frame_count,
              std::int64_t start_index = 0);

  const SensorConfig& config() const { return config_; }
  std::uint32_t width() const { return config_.width; }
  std::uint32_t height() const { return config_.height; }
  std::size_t row_stride() const { return (config_.width + 7) / 8; }
  std::size_t frame_bytes() const { return row_stride() * config_.height; }
  std::size_t frame_count() const { return frame_count_; }
  bool empty() const { return frame_count_ == 0; }
  std::int64_t start_index() const { return start_index_; }
  void set_start_index(std::int64_t index) { start_index_ = index; }

  bool bit(std::size_t frame, std::uint32_t x, std::uint32_t y) const {
    return (bits_[frame * frame_bytes() + y * row_stride() + x / 8] >> (x % 8)) & 1u;
  }
  void set(std::size_t frame, std::uint32_t x, std::uint32_t y, bool on);

  SpikeFrameView frame(std::size_t index) const;
  std::span<const std::uint8_t> frame_data(std::size_t index) const;
  std::span<std::uint8_t> mutable_frame_data(std::size_t index);
  std::span<const std::uint8_t> data() const { return bits_; }
  std::span<std::uint8_t> mutable_data() { return bits_; }

  void append_frame(std::span<const std::uint8_t> packed);

  // Identity covers geometry, threshold, period, start index and the spikes.
  // The noise model is simulation provenance and is not compared.
  friend bool operator==(const SpikeStream& a, const SpikeStream& b);

 private:
  SensorConfig config_;
  std::size_t frame_count_ = 0;
  std::int64_t start_index_ = 0;
  std::vector<std::uint8_t> bits_;
};

// Per-pixel spikes per frame, row-major.
struct RateMap {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<double> rate;

  double at(std::uint32_t x, std::uint32_t y) const {
    return rate[static_cast<std::size_t>(y) * width + x];
  }
};

bool is_hot_pixel(const NoiseModel& noise, std::size_t pixel_index);

// Current seen by the accumulator at one step, after noise. The draw is keyed
// by (seed, pixel, step).
double effective_current(const SensorConfig& config, std::size_t pixel_index,
                         std::uint64_t step, double base_current);

SpikeStream simulate_stream(const LuminanceVideo& video,
                            const SensorConfig& config, unsigned workers = 1);

RateMap firing_rate_map(const SpikeStream& stream);

// Frames [k - delta_t, k + delta_t] of the stream, k relative to its first frame.
SpikeStream slice_window(const SpikeStream& stream, std::int64_t k,
                         std::int64_t delta_t);

}  // namespace spikeline
