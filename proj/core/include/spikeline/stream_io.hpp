#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "spikeline/gray_image.hpp"
#include "spikeline/spike_core.hpp"

namespace spikeline {

// .spk layout, all integers little-endian:
//
//   offset  size  field
//   0       4     magic "SPK1"
//   4       4     width (u32)
//   8       4     height (u32)
//   12      4     frame_count (u32)
//   16      4     sample_period_ns (u32)
//   20      4     threshold_milli (u32, phi * 1000 rounded)
//   24      8     start_index (i64)
//   32      ...   frame_count * height * ceil(width / 8) payload bytes
//
// Frames follow in temporal order, rows top to bottom. Within a row pixel x
// lives in byte x / 8 at bit x % 8 (LSB = leftmost). Padding bits are zero.
struct SpkFileHeader {
  static constexpr std::size_t kSize = 32;
  static constexpr std::uint8_t kMagic[4] = {'S', 'P', 'K', '1'};

  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint32_t frame_count = 0;
  std::uint32_t sample_period_ns = 0;
  std::uint32_t threshold_milli = 0;
  std::int64_t start_index = 0;

  std::uint64_t payload_bytes() const;
};

std::vector<std::uint8_t> encode_stream(const SpikeStream& stream);

// Total over arbitrary input: returns a stream or throws Error with
// kBadMagic, kTruncated, kDimensionOverflow, kMalformedHeader or
// kTrailingBytes.
SpikeStream decode_stream(std::span<const std::uint8_t> bytes);

// Binary PGM (P5) with maxval 255.
std::vector<std::uint8_t> write_pgm(const GrayImage& image);
GrayImage read_pgm(std::span<const std::uint8_t> bytes);

// Accepts P5 graymaps and P6 pixmaps; color is reduced to Rec.601 luma.
GrayImage read_pnm_as_gray(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path,
                std::span<const std::uint8_t> bytes);

SpikeStream load_spk(const std::filesystem::path& path);
void save_spk(const std::filesystem::path& path, const SpikeStream& stream);
GrayImage load_pgm(const std::filesystem::path& path);
void save_pgm(const std::filesystem::path& path, const GrayImage& image);

}  // namespace spikeline
