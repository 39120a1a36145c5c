#include "spikeline/spike_core.hpp"

#include <algorithm>
#include <bit>
#include <cassert>
#include <cmath>
#include <random>
#include <string>

#include "spikeline/counter_rng.hpp"
#include "spikeline/error.hpp"
#include "spikeline/parallel.hpp"

namespace spikeline {

namespace {

constexpr std::uint64_t kHotPixelSalt = 0x486f745069786c73ULL;
constexpr std::uint64_t kShotNoiseSalt = 0x53686f744e6f6973ULL;

}  // namespace

void NoiseModel::validate() const {
  require(hot_pixel_fraction >= 0.0 && hot_pixel_fraction <= 1.0,
          ErrorCode::kInvalidArgument, "hot_pixel_fraction must be in [0, 1]");
  require(!shot_noise_enabled || photons_per_unit > 0.0,
          ErrorCode::kInvalidArgument,
          "photons_per_unit must be positive when shot noise is enabled");
  require(std::isfinite(dark_current) && dark_current >= 0.0,
          ErrorCode::kInvalidArgument, "dark_current must be >= 0");
  require(std::isfinite(hot_pixel_current) && hot_pixel_current >= 0.0,
          ErrorCode::kInvalidArgument, "hot_pixel_current must be >= 0");
}

void SensorConfig::validate() const {
  require(width >= 1 && height >= 1, ErrorCode::kInvalidArgument,
          "sensor resolution must be at least 1x1");
  require(std::isfinite(threshold_phi) && threshold_phi > 0.0,
          ErrorCode::kInvalidArgument, "threshold_phi must be positive");
  require(std::isfinite(sample_period) && sample_period > 0.0,
          ErrorCode::kInvalidArgument, "sample_period must be positive");
  require(steps_per_frame >= 1, ErrorCode::kInvalidArgument,
          "steps_per_frame must be >= 1");
  noise.validate();
}

LuminanceVideo LuminanceVideo::constant(std::uint32_t width,
                                        std::uint32_t height, double current,
                                        std::size_t frame_count) {
  LuminanceVideo video{width, height, {}};
  video.frames.assign(frame_count,
                      std::vector<double>(std::size_t{width} * height, current));
  return video;
}

LuminanceVideo LuminanceVideo::still(std::uint32_t width, std::uint32_t height,
                                     std::vector<double> currents) {
  require(currents.size() == std::size_t{width} * height,
          ErrorCode::kShapeMismatch, "current plane does not match resolution");
  LuminanceVideo video{width, height, {}};
  video.frames.push_back(std::move(currents));
  return video;
}

std::size_t SpikeFrameView::popcount() const {
  std::size_t n = 0;
  for (std::uint8_t b : bytes_) n += static_cast<std::size_t>(std::popcount(b));
  return n;
}

SpikeStream::SpikeStream(SensorConfig config, std::size_t frame_count,
                         std::int64_t start_index)
    : config_(config), frame_count_(frame_count), start_index_(start_index) {
  require(config_.width >= 1 && config_.height >= 1,
          ErrorCode::kInvalidArgument, "stream resolution must be at least 1x1");
  bits_.assign(frame_count_ * frame_bytes(), 0);
}

void SpikeStream::set(std::size_t frame, std::uint32_t x, std::uint32_t y,
                      bool on) {
  std::uint8_t& byte = bits_[frame * frame_bytes() + y * row_stride() + x / 8];
  const auto mask = static_cast<std::uint8_t>(1u << (x % 8));
  byte = on ? static_cast<std::uint8_t>(byte | mask)
            : static_cast<std::uint8_t>(byte & ~mask);
}

SpikeFrameView SpikeStream::frame(std::size_t index) const {
  return SpikeFrameView(frame_data(index), config_.width, config_.height);
}

std::span<const std::uint8_t> SpikeStream::frame_data(std::size_t index) const {
  require(index < frame_count_, ErrorCode::kOutOfBounds, "frame index out of range");
  return std::span<const std::uint8_t>(bits_).subspan(index * frame_bytes(),
                                                      frame_bytes());
}

std::span<std::uint8_t> SpikeStream::mutable_frame_data(std::size_t index) {
  require(index < frame_count_, ErrorCode::kOutOfBounds, "frame index out of range");
  return std::span<std::uint8_t>(bits_).subspan(index * frame_bytes(),
                                                frame_bytes());
}

void SpikeStream::append_frame(std::span<const std::uint8_t> packed) {
  require(packed.size() == frame_bytes(), ErrorCode::kShapeMismatch,
          "packed frame size does not match stream resolution");
  bits_.insert(bits_.end(), packed.begin(), packed.end());
  ++frame_count_;
}

bool operator==(const SpikeStream& a, const SpikeStream& b) {
  return a.config_.width == b.config_.width &&
         a.config_.height == b.config_.height &&
         a.config_.threshold_phi == b.config_.threshold_phi &&
         a.config_.sample_period == b.config_.sample_period &&
         a.frame_count_ == b.frame_count_ && a.start_index_ == b.start_index_ &&
         a.bits_ == b.bits_;
}

bool is_hot_pixel(const NoiseModel& noise, std::size_t pixel_index) {
  if (noise.hot_pixel_fraction <= 0.0) return false;
  CounterRng rng(noise.seed ^ kHotPixelSalt, pixel_index);
  return rng.uniform() < noise.hot_pixel_fraction;
}

namespace {

double noisy_current(const SensorConfig& config, std::size_t pixel_index,
                     std::uint64_t step, double base_current) {
  const NoiseModel& noise = config.noise;
  double current = base_current;
  if (noise.shot_noise_enabled && base_current > 0.0) {
    const double scale = config.sample_period * noise.photons_per_unit;
    CounterRng rng(noise.seed ^ kShotNoiseSalt, pixel_index, step);
    std::poisson_distribution<std::int64_t> photons(base_current * scale);
    current = static_cast<double>(photons(rng)) / scale;
  }
  return current + noise.dark_current;
}

}  // namespace

double effective_current(const SensorConfig& config, std::size_t pixel_index,
                         std::uint64_t step, double base_current) {
  if (is_hot_pixel(config.noise, pixel_index)) return config.noise.hot_pixel_current;
  return noisy_current(config, pixel_index, step, base_current);
}

SpikeStream simulate_stream(const LuminanceVideo& video,
                            const SensorConfig& config, unsigned workers) {
  config.validate();
  require(video.width == config.width && video.height == config.height,
          ErrorCode::kShapeMismatch,
          "video resolution " + std::to_string(video.width) + "x" +
              std::to_string(video.height) + " does not match sensor " +
              std::to_string(config.width) + "x" + std::to_string(config.height));
  require(!video.frames.empty(), ErrorCode::kEmptyInput, "video has no frames");
  const std::size_t pixels = config.pixel_count();
  for (const auto& plane : video.frames) {
    require(plane.size() == pixels, ErrorCode::kShapeMismatch,
            "video frame size does not match resolution");
    for (double v : plane) {
      require(std::isfinite(v), ErrorCode::kNonFinite, "non-finite intensity");
      require(v >= 0.0, ErrorCode::kInvalidArgument, "negative intensity");
    }
  }

  const std::size_t total = video.frame_count() * config.steps_per_frame;
  SpikeStream stream(config, total, 0);
  const NoiseModel& noise = config.noise;
  const bool stochastic = noise.shot_noise_enabled;
  const double phi = config.threshold_phi;
  const double period = config.sample_period;
  const std::uint32_t width = config.width;
  const std::size_t stride = stream.row_stride();
  const std::size_t frame_bytes = stream.frame_bytes();
  std::uint8_t* out = stream.mutable_data().data();

  parallel_for_ranges(config.height, workers, [&](std::size_t y0, std::size_t y1) {
    const std::size_t first = y0 * width;
    const std::size_t count = (y1 - y0) * width;
    std::vector<PixelAccumulator> acc(count);
    std::vector<std::uint8_t> hot(count, 0);
    for (std::size_t i = 0; i < count; ++i) hot[i] = is_hot_pixel(noise, first + i);
    std::vector<double> charge(count);
    // Per-pixel photon distributions; each draw resets the distribution so it
    // depends only on its (seed, pixel, step) key.
    std::vector<std::poisson_distribution<std::int64_t>> photons(stochastic ? count : 0);
    const double photon_scale = period * noise.photons_per_unit;
    const std::uint64_t shot_key = noise.seed ^ kShotNoiseSalt;

    for (std::size_t v = 0; v < video.frame_count(); ++v) {
      const std::vector<double>& plane = video.frames[v];
      // Deterministic per-step charge, reused for every step of this frame.
      for (std::size_t i = 0; i < count; ++i) {
        charge[i] = (hot[i] ? noise.hot_pixel_current
                            : plane[first + i] + noise.dark_current) * period;
        if (stochastic && plane[first + i] > 0.0) {
          photons[i] = std::poisson_distribution<std::int64_t>(plane[first + i] * photon_scale);
        }
      }
      for (std::uint32_t s = 0; s < config.steps_per_frame; ++s) {
        const std::size_t n = v * config.steps_per_frame + s;
        std::uint8_t* frame = out + n * frame_bytes;
        for (std::size_t y = y0; y < y1; ++y) {
          std::uint8_t* row = frame + y * stride;
          const std::size_t base = (y - y0) * width;
          for (std::uint32_t x = 0; x < width; ++x) {
            const std::size_t i = base + x;
            double q = charge[i];
            if (stochastic && !hot[i] && plane[first + i] > 0.0) {
              CounterRng rng(shot_key, first + i, n);
              photons[i].reset();
              q = (static_cast<double>(photons[i](rng)) / photon_scale + noise.dark_current) *
                  period;
            }
            if (acc[i].step(q, phi)) row[x >> 3] |= static_cast<std::uint8_t>(1u << (x & 7));
            assert(acc[i].value >= 0.0 && acc[i].value < phi);
          }
        }
      }
    }
  });
  return stream;
}

RateMap firing_rate_map(const SpikeStream& stream) {
  require(!stream.empty(), ErrorCode::kEmptyInput, "stream has no frames");
  RateMap map{stream.width(), stream.height(), {}};
  std::vector<std::uint32_t> counts(std::size_t{stream.width()} * stream.height(), 0);
  for (std::size_t f = 0; f < stream.frame_count(); ++f) {
    const SpikeFrameView frame = stream.frame(f);
    for (std::uint32_t y = 0; y < stream.height(); ++y) {
      const auto row = frame.row(y);
      for (std::uint32_t x = 0; x < stream.width(); ++x) {
        counts[std::size_t{y} * stream.width() + x] += (row[x >> 3] >> (x & 7)) & 1u;
      }
    }
  }
  map.rate.resize(counts.size());
  const double n = static_cast<double>(stream.frame_count());
  for (std::size_t i = 0; i < counts.size(); ++i) map.rate[i] = counts[i] / n;
  return map;
}

SpikeStream slice_window(const SpikeStream& stream, std::int64_t k,
                         std::int64_t delta_t) {
  require(delta_t >= 0, ErrorCode::kInvalidArgument, "delta_t must be >= 0");
  const auto frames = static_cast<std::int64_t>(stream.frame_count());
  require(k - delta_t >= 0 && k + delta_t < frames, ErrorCode::kOutOfBounds,
          "window [" + std::to_string(k - delta_t) + ", " +
              std::to_string(k + delta_t) + "] outside stream of " +
              std::to_string(frames) + " frames");
  const std::size_t first = static_cast<std::size_t>(k - delta_t);
  const std::size_t count = static_cast<std::size_t>(2 * delta_t + 1);
  SpikeStream out(stream.config(), count, stream.start_index() + k - delta_t);
  auto bytes = stream.data().subspan(first * stream.frame_bytes(),
                                     count * stream.frame_bytes());
  std::copy(bytes.begin(), bytes.end(), out.mutable_data().begin());
  return out;
}

}  // namespace spikeline
