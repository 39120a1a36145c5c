#include "spikeline/dataset_synth.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>

#include "spikeline/counter_rng.hpp"
#include "spikeline/error.hpp"
#include "spikeline/parallel.hpp"
#include "spikeline/stream_io.hpp"

namespace spikeline {

namespace fs = std::filesystem;

void SynthConfig::validate() const {
  require(crop_size >= 1, ErrorCode::kInvalidArgument, "crop size must be >= 1");
  require(std::isfinite(degrade_factor) && degrade_factor >= 1.0,
          ErrorCode::kInvalidArgument, "degrade factor must be >= 1");
  require(stream_frames >= 2, ErrorCode::kInvalidArgument, "need at least 2 stream frames");
  require(white_rate > 0.0 && white_rate <= 1.0, ErrorCode::kInvalidArgument,
          "white rate must be in (0, 1]");
  SensorConfig probe = sensor;
  probe.width = probe.height = 1;
  probe.validate();
}

GrayImage degrade_image(const GrayImage& image, double factor) {
  require(std::isfinite(factor) && factor >= 1.0, ErrorCode::kInvalidArgument,
          "degrade factor must be >= 1");
  if (factor == 1.0) return image;
  const auto small = [&](std::uint32_t n) {
    return std::max<std::uint32_t>(1, static_cast<std::uint32_t>(std::lround(n / factor)));
  };
  const GrayImage down =
      quantize(downscale_area(to_plane(image), small(image.width), small(image.height)));
  return quantize(resize_bilinear(to_plane(down), image.width, image.height));
}

double current_scale(const SynthConfig& cfg) {
  return cfg.white_rate * cfg.sensor.threshold_phi / (255.0 * cfg.sensor.sample_period);
}

SpikeStream image_to_stream(const GrayImage& image, const SynthConfig& cfg) {
  cfg.validate();
  SensorConfig sensor = cfg.sensor;
  sensor.width = image.width;
  sensor.height = image.height;
  sensor.steps_per_frame = cfg.stream_frames;
  const double scale = current_scale(cfg);
  std::vector<double> currents(image.values.size());
  for (std::size_t i = 0; i < currents.size(); ++i) currents[i] = image.values[i] * scale;
  return simulate_stream(LuminanceVideo::still(image.width, image.height, std::move(currents)),
                         sensor, cfg.workers);
}

SynthSample synth_sample(const GrayImage& image, const SynthConfig& cfg) {
  const GrayImage degraded = degrade_image(image, cfg.degrade_factor);
  const SpikeStream stream = image_to_stream(degraded, cfg);
  const auto k = static_cast<std::int64_t>(stream.frame_count() / 2);
  return {etfi(isi_search(stream, k, cfg.workers)), image};
}

CropOrigin random_crop_origin(std::uint32_t width, std::uint32_t height, std::uint32_t crop,
                              std::uint64_t seed) {
  require(crop <= width && crop <= height, ErrorCode::kInvalidArgument,
          "image " + std::to_string(width) + "x" + std::to_string(height) +
              " is smaller than crop " + std::to_string(crop));
  CounterRng rng(seed, 0x63726f70ULL);
  const std::uint32_t x = static_cast<std::uint32_t>(rng() % (width - crop + 1));
  const std::uint32_t y = static_cast<std::uint32_t>(rng() % (height - crop + 1));
  return {x, y};
}

GrayImage crop_image(const GrayImage& image, CropOrigin origin, std::uint32_t size) {
  require(origin.x + size <= image.width && origin.y + size <= image.height,
          ErrorCode::kOutOfBounds, "crop outside image");
  GrayImage out(size, size);
  for (std::uint32_t y = 0; y < size; ++y) {
    const auto src = image.values.begin() +
                     static_cast<std::ptrdiff_t>(std::size_t{origin.y + y} * image.width + origin.x);
    std::copy(src, src + size, out.values.begin() + static_cast<std::ptrdiff_t>(std::size_t{y} * size));
  }
  return out;
}

std::uint64_t sample_seed(std::uint64_t run_seed, std::string_view file_name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : file_name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return hash_combine(run_seed, h);
}

std::string format_manifest_line(const ManifestLine& line) {
  return line.source + '\t' + line.etfi_path + '\t' + line.gt_path + '\t' +
         std::to_string(line.seed);
}

ManifestLine parse_manifest_line(std::string_view text) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = text.find('\t', start);
    fields.push_back(text.substr(start, tab == std::string_view::npos ? tab : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  require(fields.size() == 4, ErrorCode::kMalformedHeader, "manifest line needs 4 fields");
  ManifestLine line{std::string(fields[0]), std::string(fields[1]), std::string(fields[2]), 0};
  const auto [ptr, ec] =
      std::from_chars(fields[3].data(), fields[3].data() + fields[3].size(), line.seed);
  require(ec == std::errc() && ptr == fields[3].data() + fields[3].size(),
          ErrorCode::kMalformedHeader, "manifest seed is not an integer");
  return line;
}

SampleManifest read_manifest(const fs::path& path) {
  SampleManifest manifest;
  std::ifstream in(path);
  if (!in) return manifest;
  std::string text;
  while (std::getline(in, text)) {
    if (!text.empty()) manifest.lines.push_back(parse_manifest_line(text));
  }
  return manifest;
}

namespace {

struct Job {
  fs::path source;
  std::string stem;
  std::uint64_t seed = 0;
};

struct Outcome {
  std::optional<SynthSample> sample;
  std::string error;
};

Outcome run_job(const Job& job, const SynthConfig& base) {
  try {
    const GrayImage image = read_pnm_as_gray(read_file(job.source));
    SynthConfig cfg = base;
    cfg.seed = job.seed;
    cfg.sensor.noise.seed = job.seed;
    cfg.workers = 1;
    const GrayImage crop =
        crop_image(image, random_crop_origin(image.width, image.height, cfg.crop_size, job.seed),
                   cfg.crop_size);
    return {synth_sample(crop, cfg), {}};
  } catch (const Error& e) {
    return {std::nullopt, e.what()};
  }
}

}  // namespace

SynthReport synth_dataset(const fs::path& corpus_dir, const fs::path& out_dir,
                          const SynthConfig& cfg,
                          const std::function<void(std::string_view)>& log) {
  cfg.validate();
  std::error_code ec;
  require(fs::is_directory(corpus_dir, ec), ErrorCode::kNotFound,
          "input not found: " + corpus_dir.string());
  fs::create_directories(out_dir / "etfi", ec);
  fs::create_directories(out_dir / "gt", ec);
  require(!ec, ErrorCode::kIoFailure, "cannot create " + out_dir.string());

  const fs::path manifest_path = out_dir / "manifest.tsv";
  SynthReport report;
  report.manifest = read_manifest(manifest_path);
  std::set<std::string> done;
  for (const ManifestLine& line : report.manifest.lines) {
    if (fs::exists(out_dir / line.etfi_path) && fs::exists(out_dir / line.gt_path)) {
      done.insert(line.source);
    }
  }

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(corpus_dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  std::vector<Job> jobs;
  for (const fs::path& file : files) {
    const std::string source = file.string();
    if (done.count(source)) {
      ++report.resumed;
      continue;
    }
    jobs.push_back({file, file.stem().string(), sample_seed(cfg.seed, file.filename().string())});
  }
  if (log && report.resumed > 0) {
    log("resuming: " + std::to_string(report.resumed) + " samples already present");
  }

  std::ofstream manifest(manifest_path, std::ios::app);
  require(static_cast<bool>(manifest), ErrorCode::kIoFailure,
          "cannot open " + manifest_path.string());
  const std::size_t chunk = std::max(1u, cfg.workers);
  for (std::size_t first = 0; first < jobs.size(); first += chunk) {
    const std::size_t last = std::min(jobs.size(), first + chunk);
    std::vector<Outcome> outcomes(last - first);
    parallel_for_ranges(last - first, cfg.workers, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) outcomes[i] = run_job(jobs[first + i], cfg);
    });
    // Outputs and manifest lines are written in corpus order.
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
      const Job& job = jobs[first + i];
      const std::size_t position = report.resumed + first + i + 1;
      if (!outcomes[i].sample) {
        report.skipped.push_back(job.source.string() + ": " + outcomes[i].error);
        if (log) log("skip " + job.source.string() + ": " + outcomes[i].error);
        continue;
      }
      ManifestLine line{job.source.string(), "etfi/" + job.stem + ".pgm",
                        "gt/" + job.stem + ".pgm", job.seed};
      save_pgm(out_dir / line.etfi_path, outcomes[i].sample->etfi.image);
      save_pgm(out_dir / line.gt_path, outcomes[i].sample->ground_truth);
      manifest << format_manifest_line(line) << '\n';
      manifest.flush();
      report.manifest.lines.push_back(std::move(line));
      ++report.processed;
      if (log) {
        log("[" + std::to_string(position) + "/" + std::to_string(files.size()) + "] " +
            job.source.filename().string());
      }
    }
  }
  return report;
}

}  // namespace spikeline
