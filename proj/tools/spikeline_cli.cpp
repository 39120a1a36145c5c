// spikeline command-line front end. Human-readable progress goes to stderr;
// each command prints one JSON report on stdout.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "spikeline/dataset_synth.hpp"
#include "spikeline/ddpm/checkpoint.hpp"
#include "spikeline/ddpm/sampler.hpp"
#include "spikeline/ddpm/trainer.hpp"
#include "spikeline/error.hpp"
#include "spikeline/isi_etfi.hpp"
#include "spikeline/parallel.hpp"
#include "spikeline/recon_classic.hpp"
#include "spikeline/stream_io.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace spikeline;

namespace {

constexpr int kReportVersion = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

json report(const std::string& command) {
  return {{"schema", "spikeline.report"}, {"version", kReportVersion}, {"command", command}};
}

void emit(const json& j) { std::cout << j.dump(2) << '\n'; }

struct SensorFlags {
  double phi = 1.0;
  double period = 50e-6;
  double white_rate = 0.5;
  bool shot_noise = false;
  double photons_per_unit = 1000.0;
  double dark_current = 0.0;
  double hot_fraction = 0.0;
  double hot_current = 2.0e4;

  void add(CLI::App* app) {
    app->add_option("--phi", phi, "firing threshold")->capture_default_str();
    app->add_option("--period", period, "sampling period in seconds")->capture_default_str();
    app->add_option("--white-rate", white_rate, "firing rate of a 255 pixel, spikes per frame")
        ->capture_default_str();
    app->add_flag("--shot-noise", shot_noise, "enable Poisson shot noise");
    app->add_option("--photons-per-unit", photons_per_unit)->capture_default_str();
    app->add_option("--dark-current", dark_current, "units per second")->capture_default_str();
    app->add_option("--hot-fraction", hot_fraction, "probability a pixel is hot")
        ->capture_default_str();
    app->add_option("--hot-current", hot_current)->capture_default_str();
  }

  SensorConfig sensor(std::uint64_t seed) const {
    SensorConfig s;
    s.threshold_phi = phi;
    s.sample_period = period;
    s.noise.shot_noise_enabled = shot_noise;
    s.noise.photons_per_unit = photons_per_unit;
    s.noise.dark_current = dark_current;
    s.noise.hot_pixel_fraction = hot_fraction;
    s.noise.hot_pixel_current = hot_current;
    s.noise.seed = seed;
    return s;
  }
};

std::vector<fs::path> image_inputs(const fs::path& input) {
  std::error_code ec;
  if (!fs::exists(input, ec)) fail(ErrorCode::kNotFound, "input not found: " + input.string());
  if (!fs::is_directory(input, ec)) return {input};
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(input)) {
    const auto ext = e.path().extension().string();
    if (e.is_regular_file() && (ext == ".pgm" || ext == ".ppm")) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  require(!files.empty(), ErrorCode::kNotFound, "input not found: no PGM/PPM in " + input.string());
  return files;
}

// ---- simulate -------------------------------------------------------------

struct SimulateArgs {
  std::string input;
  std::string out;
  std::uint32_t frames = 256;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  SensorFlags sensor;
};

int run_simulate(const SimulateArgs& a) {
  const auto inputs = image_inputs(a.input);
  LuminanceVideo video;
  SynthConfig mapping;
  mapping.white_rate = a.sensor.white_rate;
  mapping.sensor = a.sensor.sensor(a.seed);
  const double scale = current_scale(mapping);
  for (const auto& path : inputs) {
    const GrayImage img = read_pnm_as_gray(read_file(path));
    if (video.frames.empty()) {
      video.width = img.width;
      video.height = img.height;
    }
    require(img.width == video.width && img.height == video.height,
            ErrorCode::kShapeMismatch, "frame size differs: " + path.string());
    std::vector<double> currents(img.size());
    for (std::size_t i = 0; i < currents.size(); ++i) currents[i] = img.values[i] * scale;
    video.frames.push_back(std::move(currents));
  }
  SensorConfig cfg = mapping.sensor;
  cfg.width = video.width;
  cfg.height = video.height;
  cfg.steps_per_frame = a.frames;
  const SpikeStream stream = simulate_stream(video, cfg, a.workers);
  save_spk(a.out, stream);

  const RateMap rate = firing_rate_map(stream);
  double mean = 0.0;
  for (double r : rate.rate) mean += r;
  mean /= static_cast<double>(rate.rate.size());
  std::fprintf(stderr, "simulated %zu frames of %ux%u, mean firing rate %.6f -> %s\n",
               stream.frame_count(), stream.width(), stream.height(), mean, a.out.c_str());
  json j = report("simulate");
  j["frames"] = stream.frame_count();
  j["width"] = stream.width();
  j["height"] = stream.height();
  j["mean_firing_rate"] = mean;
  j["out"] = a.out;
  emit(j);
  return 0;
}

// ---- reconstruct ----------------------------------------------------------

struct ReconstructArgs {
  std::string input;
  std::string out;
  std::string method = "etfi";
  std::optional<std::int64_t> k;
  std::optional<std::int64_t> window;
  std::optional<double> gain;
  bool auto_gain = false;
  unsigned workers = 1;
};

int run_reconstruct(const ReconstructArgs& a) {
  const SpikeStream stream = load_spk(a.input);
  require(!stream.empty(), ErrorCode::kInvalidArgument, "stream has no frames");
  const auto frames = static_cast<std::int64_t>(stream.frame_count());
  const std::int64_t k = a.k.value_or(frames / 2);
  require(k >= 0 && k < frames, ErrorCode::kOutOfBounds,
          "k=" + std::to_string(k) + " outside stream of " + std::to_string(frames) + " frames");

  json j = report("reconstruct");
  j["method"] = a.method;
  j["k"] = k;
  GrayImage image;
  if (a.method == "tfp") {
    const std::int64_t delta = a.window.value_or(std::min(k, frames - 1 - k));
    const double gain = a.gain.value_or(255.0);
    image = tfp(stream, k, delta, gain);
    j["window"] = delta;
    j["gain"] = gain;
  } else {
    // Without --window the interval search covers the whole stream.
    const SpikeStream view = a.window ? slice_window(stream, k, *a.window) : stream;
    const std::int64_t local_k = a.window ? *a.window : k;
    const IsiMap isi = isi_search(view, local_k, a.workers);
    if (a.window) j["window"] = *a.window;
    j["valid_pixels"] = isi.valid_count();
    if (a.method == "tfi") {
      const double gain = a.gain.value_or(tfi_default_gain(stream.config()));
      image = tfi(isi, stream.config(), gain);
      j["gain"] = gain;
    } else if (a.method == "etfi") {
      EtfiImage e = etfi(isi);
      const double gain = a.auto_gain ? auto_gain(e) : a.gain.value_or(1.0);
      e = apply_gain(e, gain);
      image = e.image;
      j["gain"] = gain;
      j["overexposure_ratio"] = e.overexposure_ratio;
      std::fprintf(stderr, "overexposure ratio %.6f\n", e.overexposure_ratio);
    } else {
      fail(ErrorCode::kInvalidArgument, "unknown method " + a.method);
    }
  }
  save_pgm(a.out, image);
  std::fprintf(stderr, "%s at k=%lld -> %s\n", a.method.c_str(), static_cast<long long>(k),
               a.out.c_str());
  j["out"] = a.out;
  emit(j);
  return 0;
}

// ---- ddpm-demo ------------------------------------------------------------

struct DemoArgs {
  std::string cond;
  std::string out;
  std::string denoiser = "oracle";
  std::string checkpoint;
  int steps = 50;
  double cfg_scale = 2.0;
  std::string variance = "beta";
  std::uint32_t latent = 32;
  std::uint64_t seed = 0;
  bool quiet = false;
};

ddpm::ConditionalModel load_model_or_config_error(const std::string& path) {
  try {
    return ddpm::load_checkpoint(path);
  } catch (const Error& e) {
    // A checkpoint is a configuration input of the demo.
    fail(e.code() == ErrorCode::kNotFound ? ErrorCode::kNotFound : ErrorCode::kInvalidArgument,
         "bad checkpoint " + path + ": " + e.what());
  }
}

int run_ddpm_demo(const DemoArgs& a) {
  const GrayImage cond = read_pnm_as_gray(read_file(a.cond));
  ddpm::ScheduleOptions so;
  so.steps = a.steps;
  so.variance = a.variance == "zero" ? ddpm::VarianceMode::kZero : ddpm::VarianceMode::kBeta;
  const ddpm::NoiseSchedule sched = ddpm::make_schedule(so);

  std::optional<ddpm::ConditionalModel> model;
  if (a.denoiser == "checkpoint") {
    require(!a.checkpoint.empty(), ErrorCode::kInvalidArgument,
            "--denoiser checkpoint needs --checkpoint");
    model.emplace(load_model_or_config_error(a.checkpoint));
  } else {
    model.emplace();
  }
  ddpm::SampleOptions opts;
  opts.cfg_scale = a.cfg_scale;
  opts.seed = a.seed;
  opts.latent_width = opts.latent_height = a.latent;
  if (!a.quiet) {
    opts.on_step = [](int t, double norm) { std::fprintf(stderr, "  t=%3d |z|=%.6f\n", t, norm); };
  }

  std::fprintf(stderr, "ddpm-demo steps=%d cfg=%g denoiser=%s latent=%ux%u seed=%llu\n", a.steps,
               a.cfg_scale, a.denoiser.c_str(), a.latent, a.latent,
               static_cast<unsigned long long>(a.seed));
  const std::uint32_t channels = model->config().latent_channels;
  ddpm::SampleResult result;
  if (a.denoiser == "oracle") {
    const ddpm::OracleDenoiser oracle(ddpm::image_to_latent(cond, channels, a.latent, a.latent),
                                      sched);
    result = ddpm::sample(oracle, *model, cond, sched, opts);
  } else {
    const ddpm::NetworkDenoiser net(*model);
    result = ddpm::sample(net, *model, cond, sched, opts);
  }
  save_pgm(a.out, result.image);

  int max_diff = 0;
  for (std::size_t i = 0; i < cond.size(); ++i) {
    max_diff = std::max(max_diff, std::abs(int(result.image.values[i]) - int(cond.values[i])));
  }
  std::fprintf(stderr, "wrote %s (max |out - cond| = %d)\n", a.out.c_str(), max_diff);
  json j = report("ddpm-demo");
  j["steps"] = a.steps;
  j["cfg_scale"] = a.cfg_scale;
  j["denoiser"] = a.denoiser;
  j["seed"] = a.seed;
  j["latent"] = {a.latent, a.latent};
  j["step_norms"] = result.step_norms;
  j["max_abs_diff_to_condition"] = max_diff;
  j["out"] = a.out;
  emit(j);
  return 0;
}

// ---- train ----------------------------------------------------------------

struct TrainArgs {
  std::string cond;
  std::string gt;
  std::string out;
  int iterations = 200;
  int batch = 4;
  double lr = 1e-2;
  std::uint32_t latent = 8;
  std::uint64_t seed = 0;
};

int run_train(const TrainArgs& a) {
  const GrayImage cond = read_pnm_as_gray(read_file(a.cond));
  const GrayImage gt = read_pnm_as_gray(read_file(a.gt));
  ddpm::ConditionalModel model({}, a.seed);
  const std::uint32_t c = model.config().latent_channels;
  const ddpm::NoiseSchedule sched = ddpm::make_schedule(ddpm::ScheduleOptions{});
  ddpm::TrainOptions opts;
  opts.iterations = a.iterations;
  opts.batch = a.batch;
  opts.learning_rate = a.lr;
  opts.seed = a.seed;
  opts.on_iteration = [](int it, double loss) {
    if ((it + 1) % 25 == 0) std::fprintf(stderr, "  iter %4d loss %.6f\n", it + 1, loss);
  };
  const ddpm::TrainReport r =
      ddpm::train_pair(model, ddpm::image_to_latent(cond, c, a.latent, a.latent),
                       ddpm::image_to_latent(gt, c, a.latent, a.latent), sched, opts);
  ddpm::save_checkpoint(a.out, model);
  std::fprintf(stderr, "loss %.6f -> %.6f, checkpoint %s\n", r.initial_loss, r.final_loss,
               a.out.c_str());
  json j = report("train");
  j["iterations"] = a.iterations;
  j["initial_loss"] = r.initial_loss;
  j["final_loss"] = r.final_loss;
  j["out"] = a.out;
  emit(j);
  return 0;
}

// ---- synth ----------------------------------------------------------------

struct SynthArgs {
  std::string corpus;
  std::string out;
  std::uint32_t crop = 512;
  double degrade = 2.0;
  std::uint32_t frames = 256;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  SensorFlags sensor;
};

int run_synth(const SynthArgs& a) {
  SynthConfig cfg;
  cfg.crop_size = a.crop;
  cfg.degrade_factor = a.degrade;
  cfg.stream_frames = a.frames;
  cfg.white_rate = a.sensor.white_rate;
  cfg.sensor = a.sensor.sensor(a.seed);
  cfg.seed = a.seed;
  cfg.workers = a.workers;
  const SynthReport r = synth_dataset(a.corpus, a.out, cfg, [](std::string_view line) {
    std::fprintf(stderr, "%.*s\n", static_cast<int>(line.size()), line.data());
  });
  std::fprintf(stderr, "synth: %zu new, %zu resumed, %zu skipped\n", r.processed, r.resumed,
               r.skipped.size());
  json j = report("synth");
  j["processed"] = r.processed;
  j["resumed"] = r.resumed;
  j["skipped"] = r.skipped;
  j["manifest_lines"] = r.manifest.lines.size();
  j["manifest"] = (fs::path(a.out) / "manifest.tsv").string();
  emit(j);
  return 0;
}

// ---- bench ----------------------------------------------------------------

struct BenchArgs {
  std::string resolution = "256";
  std::uint32_t frames = 2000;
  unsigned workers = 0;
};

std::pair<std::uint32_t, std::uint32_t> parse_resolution(const std::string& text) {
  std::uint32_t w = 0, h = 0;
  char tail = 0;
  if (std::sscanf(text.c_str(), "%ux%u%c", &w, &h, &tail) == 2) return {w, h};
  if (std::sscanf(text.c_str(), "%u%c", &w, &tail) == 1) return {w, w};
  fail(ErrorCode::kInvalidArgument, "bad resolution '" + text + "', expected N or WxH");
}

template <typename Fn>
double seconds(Fn&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int run_bench(const BenchArgs& a) {
  const auto [w, h] = parse_resolution(a.resolution);
  require(w >= 1 && h >= 1, ErrorCode::kInvalidArgument, "resolution must be positive");
  require(a.frames >= 1, ErrorCode::kInvalidArgument, "frames must be >= 1");
  const unsigned workers = a.workers == 0 ? default_workers() : a.workers;

  SensorConfig cfg;
  cfg.width = w;
  cfg.height = h;
  cfg.steps_per_frame = a.frames;
  // Diagonal ramp from 2% to 50% firing rate.
  std::vector<double> currents(std::size_t{w} * h);
  for (std::uint32_t y = 0; y < h; ++y)
    for (std::uint32_t x = 0; x < w; ++x)
      currents[std::size_t{y} * w + x] =
          (0.02 + 0.48 * (x + y) / std::max(1.0, double(w + h - 2))) / cfg.sample_period;
  const LuminanceVideo video = LuminanceVideo::still(w, h, std::move(currents));
  const auto k = static_cast<std::int64_t>(a.frames / 2);
  const double pixel_frames = double(w) * h * a.frames;

  std::fprintf(stderr, "bench %ux%u x %u frames, %u workers\n", w, h, a.frames, workers);
  SpikeStream s1, sn;
  IsiMap i1, in;
  const double t_sim1 = seconds([&] { s1 = simulate_stream(video, cfg, 1); });
  const double t_isi1 = seconds([&] { i1 = isi_search(s1, k, 1); });
  const double t_simn = seconds([&] { sn = simulate_stream(video, cfg, workers); });
  const double t_isin = seconds([&] { in = isi_search(sn, k, workers); });
  const bool identical = s1 == sn && i1.isi == in.isi && i1.valid == in.valid;
  std::fprintf(stderr,
               "simulate   1 worker  %.3f s  %.3e px-frames/s\n"
               "isi_search 1 worker  %.3f s  %.3e px-frames/s\n"
               "simulate   %u workers %.3f s  %.3e px-frames/s\n"
               "isi_search %u workers %.3f s  %.3e px-frames/s\n"
               "multi-worker output %s\n",
               t_sim1, pixel_frames / t_sim1, t_isi1, pixel_frames / t_isi1, workers, t_simn,
               pixel_frames / t_simn, workers, t_isin, pixel_frames / t_isin,
               identical ? "bit-identical" : "DIFFERS");
  json j = report("bench");
  j["width"] = w;
  j["height"] = h;
  j["frames"] = a.frames;
  j["workers"] = workers;
  j["single_worker"] = {{"simulate_seconds", t_sim1},
                       {"simulate_pixel_frames_per_second", pixel_frames / t_sim1},
                       {"isi_search_seconds", t_isi1},
                       {"isi_search_pixel_frames_per_second", pixel_frames / t_isi1}};
  j["multi_worker"] = {{"simulate_seconds", t_simn},
                      {"simulate_pixel_frames_per_second", pixel_frames / t_simn},
                      {"isi_search_seconds", t_isin},
                      {"isi_search_pixel_frames_per_second", pixel_frames / t_isin}};
  j["bit_identical"] = identical;
  emit(j);
  return identical ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spikeline: spike camera simulation, reconstruction and conditional DDPM toolkit"};
  app.require_subcommand(1);
  std::uint64_t seed = 0;
  auto add_seed = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "random seed")->envname("SPIKELINE_SEED")->capture_default_str();
  };
  const auto positive = CLI::Range(1u, 1u << 30);

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "simulate a spike stream from a PGM or a directory of PGMs");
  c_sim->add_option("input", sim.input, "PGM/PPM image or directory of frames")->required();
  c_sim->add_option("--out,-o", sim.out, "output .spk")->required();
  c_sim->add_option("--frames", sim.frames, "sampling steps per input frame")
      ->check(positive)->capture_default_str();
  c_sim->add_option("--workers", sim.workers)->check(positive)->capture_default_str();
  sim.sensor.add(c_sim);
  add_seed(c_sim);

  ReconstructArgs rec;
  auto* c_rec = app.add_subcommand("reconstruct", "reconstruct an image from a .spk stream");
  c_rec->add_option("input", rec.input, "input .spk")->required();
  c_rec->add_option("--out,-o", rec.out, "output .pgm")->required();
  c_rec->add_option("--method", rec.method)
      ->check(CLI::IsMember({"tfi", "tfp", "etfi"}))->capture_default_str();
  c_rec->add_option("--k", rec.k, "reference frame (default: centre)");
  c_rec->add_option("--window", rec.window, "half window delta_t")->check(CLI::NonNegativeNumber);
  auto* gain = c_rec->add_option("--gain", rec.gain)->check(CLI::PositiveNumber);
  c_rec->add_flag("--auto-gain", rec.auto_gain, "map the 99th percentile to 255")->excludes(gain);
  c_rec->add_option("--workers", rec.workers)->check(positive)->capture_default_str();

  DemoArgs demo;
  auto* c_demo = app.add_subcommand("ddpm-demo", "run the conditional DDPM sampling loop");
  c_demo->add_option("--cond", demo.cond, "condition image (ETFI .pgm)")->required();
  c_demo->add_option("--out,-o", demo.out, "output .pgm")->required();
  c_demo->add_option("--denoiser", demo.denoiser)
      ->check(CLI::IsMember({"oracle", "checkpoint"}))->capture_default_str();
  c_demo->add_option("--checkpoint", demo.checkpoint, "model checkpoint for --denoiser checkpoint");
  c_demo->add_option("--steps", demo.steps)->check(CLI::Range(1, 100000))->capture_default_str();
  c_demo->add_option("--cfg-scale", demo.cfg_scale)->capture_default_str();
  c_demo->add_option("--variance", demo.variance)
      ->check(CLI::IsMember({"beta", "zero"}))->capture_default_str();
  c_demo->add_option("--latent", demo.latent, "latent grid size")->check(CLI::Range(1u, 4096u))
      ->capture_default_str();
  c_demo->add_flag("--quiet", demo.quiet, "suppress the per-step trace");
  add_seed(c_demo);

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "fit the toy model to one (ETFI, ground truth) pair");
  c_train->add_option("--cond", train.cond)->required();
  c_train->add_option("--gt", train.gt)->required();
  c_train->add_option("--out,-o", train.out, "output checkpoint")->required();
  c_train->add_option("--iterations", train.iterations)->check(CLI::Range(0, 1 << 24))
      ->capture_default_str();
  c_train->add_option("--batch", train.batch)->check(CLI::Range(1, 4096))->capture_default_str();
  c_train->add_option("--lr", train.lr)->check(CLI::PositiveNumber)->capture_default_str();
  c_train->add_option("--latent", train.latent)->check(CLI::Range(1u, 256u))->capture_default_str();
  add_seed(c_train);

  SynthArgs syn;
  auto* c_syn = app.add_subcommand("synth", "build an (ETFI, ground truth) dataset from a corpus");
  c_syn->add_option("--corpus", syn.corpus)->required();
  c_syn->add_option("--out,-o", syn.out)->required();
  c_syn->add_option("--crop", syn.crop)->check(positive)->capture_default_str();
  c_syn->add_option("--degrade", syn.degrade, "bilinear degradation factor")->capture_default_str();
  c_syn->add_option("--frames", syn.frames, "stream length per image")->check(positive)
      ->capture_default_str();
  c_syn->add_option("--workers", syn.workers)->check(positive)->capture_default_str();
  syn.sensor.add(c_syn);
  add_seed(c_syn);

  BenchArgs bench;
  auto* c_bench = app.add_subcommand("bench", "throughput of simulate and isi_search");
  c_bench->add_option("--resolution", bench.resolution, "N or WxH")->capture_default_str();
  c_bench->add_option("--frames", bench.frames)->check(positive)->capture_default_str();
  c_bench->add_option("--workers", bench.workers, "0 = hardware threads")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*c_sim) {
      sim.seed = seed;
      return run_simulate(sim);
    }
    if (*c_rec) return run_reconstruct(rec);
    if (*c_demo) {
      demo.seed = seed;
      return run_ddpm_demo(demo);
    }
    if (*c_train) {
      train.seed = seed;
      return run_train(train);
    }
    if (*c_syn) {
      syn.seed = seed;
      return run_synth(syn);
    }
    if (*c_bench) return run_bench(bench);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.kind() == ErrorKind::kData ? kExitData : kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  }
  return kExitConfig;
}
