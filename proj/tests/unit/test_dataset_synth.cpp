#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "spikeline/dataset_synth.hpp"
#include "spikeline/error.hpp"
#include "spikeline/stream_io.hpp"

using namespace spikeline;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("spikeline_unit_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

SynthConfig small_config() {
  SynthConfig cfg;
  cfg.crop_size = 24;
  cfg.stream_frames = 128;
  return cfg;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST(Degrade, IdentityAndConstant) {
  const GrayImage img = oracle::synthetic_scene(17, 11, 4);
  EXPECT_EQ(degrade_image(img, 1.0), img);
  const GrayImage flat(13, 9, std::uint8_t{77});
  for (double f : {1.5, 2.0, 3.0, 4.0, 7.0}) EXPECT_EQ(degrade_image(flat, f), flat) << f;
  EXPECT_THROW(degrade_image(img, 0.5), Error);
}

TEST(Degrade, CheckerboardCollapsesToMidGray) {
  GrayImage board(4, 4);
  for (std::uint32_t y = 0; y < 4; ++y)
    for (std::uint32_t x = 0; x < 4; ++x) board.at(x, y) = (x + y) % 2 ? 255 : 0;
  // Each 2x2 cell averages to 127.5, which rounds half-up to 128; the
  // upscale of a constant 2x2 image is constant.
  for (auto v : degrade_image(board, 2.0).values) EXPECT_EQ(v, 128);
}

TEST(ImageToStream, BlackAndWhite) {
  SynthConfig cfg = small_config();
  const SpikeStream black = image_to_stream(GrayImage(5, 5, std::uint8_t{0}), cfg);
  for (auto b : black.data()) EXPECT_EQ(b, 0);
  const SpikeStream white = image_to_stream(GrayImage(5, 5, std::uint8_t{255}), cfg);
  for (double r : firing_rate_map(white).rate) EXPECT_LE(std::abs(r - 0.5), 1.0 / cfg.stream_frames);
}

TEST(SynthSample, ConstantImageGivesUnitEtfi) {
  const SynthSample s = synth_sample(GrayImage(10, 10, std::uint8_t{90}), small_config());
  for (double r : s.etfi.raw) EXPECT_EQ(r, 1.0);
  for (auto v : s.etfi.image.values) EXPECT_EQ(v, 1);
}

TEST(SynthSample, RankOrderFollowsGroundTruth) {
  SynthConfig cfg = small_config();
  cfg.degrade_factor = 1.0;
  cfg.stream_frames = 512;
  const GrayImage gt = oracle::synthetic_scene(32, 32, 8);
  const SynthSample s = synth_sample(gt, cfg);
  std::vector<double> g(gt.values.begin(), gt.values.end());
  EXPECT_GE(oracle::spearman(s.etfi.raw, g), 0.95);
}

TEST(SynthSample, Deterministic) {
  SynthConfig cfg = small_config();
  cfg.sensor.noise.shot_noise_enabled = true;
  cfg.sensor.noise.seed = 4;
  const GrayImage gt = oracle::synthetic_scene(20, 20, 2);
  EXPECT_EQ(synth_sample(gt, cfg).etfi.image, synth_sample(gt, cfg).etfi.image);
}

TEST(Crop, SeededAndBounded) {
  const auto a = random_crop_origin(100, 50, 20, 7);
  EXPECT_EQ(a.x, random_crop_origin(100, 50, 20, 7).x);
  EXPECT_LE(a.x, 80u);
  EXPECT_LE(a.y, 30u);
  EXPECT_THROW(random_crop_origin(10, 50, 20, 7), Error);
  GrayImage img(6, 4);
  for (std::uint32_t i = 0; i < 24; ++i) img.values[i] = static_cast<std::uint8_t>(i);
  const GrayImage c = crop_image(img, {2, 1}, 3);
  EXPECT_EQ(c.values, (std::vector<std::uint8_t>{8, 9, 10, 14, 15, 16, 20, 21, 22}));
}

TEST(Manifest, LineRoundTrip) {
  const ManifestLine line{"/a/b c.pgm", "etfi/b c.pgm", "gt/b c.pgm", 18446744073709551615ULL};
  const ManifestLine back = parse_manifest_line(format_manifest_line(line));
  EXPECT_EQ(back.source, line.source);
  EXPECT_EQ(back.seed, line.seed);
  EXPECT_THROW(parse_manifest_line("only\ttwo"), Error);
}

TEST(SynthDataset, CountsResumeAndSkips) {
  const fs::path corpus = fresh_dir("corpus8");
  for (int i = 0; i < 8; ++i) {
    const auto name = corpus / ("img" + std::to_string(i) + ".pgm");
    if (i == 3) {
      std::ofstream(name) << "not an image";
      continue;
    }
    save_pgm(name, oracle::synthetic_scene(32, 30, i));
  }
  const fs::path out = fresh_dir("out8");
  std::vector<std::string> log;
  SynthConfig cfg = small_config();
  cfg.workers = 3;
  const SynthReport r = synth_dataset(corpus, out, cfg, [&](std::string_view s) { log.emplace_back(s); });
  EXPECT_EQ(r.processed, 7u);
  ASSERT_EQ(r.skipped.size(), 1u);
  EXPECT_NE(r.skipped[0].find("img3.pgm"), std::string::npos);
  EXPECT_EQ(read_manifest(out / "manifest.tsv").lines.size(), 7u);
  for (const auto& l : r.manifest.lines) {
    EXPECT_TRUE(fs::exists(out / l.etfi_path));
    EXPECT_EQ(load_pgm(out / l.gt_path).width, 24u);
  }

  const std::string before = slurp(out / "manifest.tsv");
  const SynthReport again = synth_dataset(corpus, out, cfg);
  EXPECT_EQ(again.processed, 0u);
  EXPECT_EQ(again.resumed, 7u);
  EXPECT_EQ(slurp(out / "manifest.tsv"), before);

  const fs::path serial = fresh_dir("out8_serial");
  cfg.workers = 1;
  synth_dataset(corpus, serial, cfg);
  EXPECT_EQ(slurp(serial / "manifest.tsv"), before);
  for (const auto& l : r.manifest.lines)
    EXPECT_EQ(slurp(serial / l.etfi_path), slurp(out / l.etfi_path));
}

TEST(SynthDataset, MissingCorpus) {
  try {
    synth_dataset("/nonexistent/corpus", fresh_dir("out_missing"), small_config());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotFound);
  }
}
