#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "spikeline/gray_image.hpp"
#include "spikeline/isi_etfi.hpp"
#include "spikeline/spike_core.hpp"

namespace spikeline {

struct SynthConfig {
  std::uint32_t crop_size = 512;
  double degrade_factor = 2.0;
  std::uint32_t stream_frames = 256;
  // Firing rate of a white (255) pixel with noise off.
  double white_rate = 0.5;
  SensorConfig sensor;
  std::uint64_t seed = 0;
  unsigned workers = 1;

  void validate() const;
};

struct SynthSample {
  EtfiImage etfi;
  GrayImage ground_truth;
};

struct ManifestLine {
  std::string source;
  std::string etfi_path;
  std::string gt_path;
  std::uint64_t seed = 0;
};

struct SampleManifest {
  std::vector<ManifestLine> lines;
};

struct SynthReport {
  SampleManifest manifest;  // full manifest after the run
  std::size_t processed = 0;
  std::size_t resumed = 0;
  std::vector<std::string> skipped;  // "path: reason"
};

// Bilinear degradation: area downscale by factor, bilinear upscale back.
GrayImage degrade_image(const GrayImage& image, double factor);

// Current per gray level so that a white pixel fires at cfg.white_rate.
double current_scale(const SynthConfig& cfg);

// Holds the image static for cfg.stream_frames steps under cfg.sensor noise.
SpikeStream image_to_stream(const GrayImage& image, const SynthConfig& cfg);

// degrade -> simulate -> ISI at the centre frame -> ETFI. The ground truth is
// the input image itself.
SynthSample synth_sample(const GrayImage& image, const SynthConfig& cfg);

// Top-left corner of the seeded random crop.
struct CropOrigin {
  std::uint32_t x = 0;
  std::uint32_t y = 0;
};
CropOrigin random_crop_origin(std::uint32_t width, std::uint32_t height,
                              std::uint32_t crop, std::uint64_t seed);
GrayImage crop_image(const GrayImage& image, CropOrigin origin, std::uint32_t size);

// Per-image seed derived from the run seed and the file name.
std::uint64_t sample_seed(std::uint64_t run_seed, std::string_view file_name);

std::string format_manifest_line(const ManifestLine& line);
ManifestLine parse_manifest_line(std::string_view text);
SampleManifest read_manifest(const std::filesystem::path& path);

// Walks corpus_dir (sorted, non-recursive), writes out_dir/etfi/<stem>.pgm
// and out_dir/gt/<stem>.pgm and appends to out_dir/manifest.tsv. Images that
// already have a manifest line are skipped. Unreadable files are logged and
// skipped.
SynthReport synth_dataset(const std::filesystem::path& corpus_dir,
                          const std::filesystem::path& out_dir, const SynthConfig& cfg,
                          const std::function<void(std::string_view)>& log = {});

}  // namespace spikeline
