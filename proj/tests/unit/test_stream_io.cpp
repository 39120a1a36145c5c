#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "oracles.hpp"
#include "spikeline/error.hpp"
#include "spikeline/stream_io.hpp"

using namespace spikeline;

namespace {

SensorConfig sensor(std::uint32_t w, std::uint32_t h) {
  SensorConfig c;
  c.width = w;
  c.height = h;
  return c;
}

std::vector<std::uint8_t> payload(const std::vector<std::uint8_t>& file) {
  return {file.begin() + SpkFileHeader::kSize, file.end()};
}

ErrorCode decode_error(std::span<const std::uint8_t> bytes) {
  try {
    decode_stream(bytes);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "decode succeeded";
  return ErrorCode::kInvalidArgument;
}

}  // namespace

TEST(SpkCodec, LeftmostPixelIsLsb) {
  SpikeStream s(sensor(8, 1), 1);
  s.set(0, 0, 0, true);
  EXPECT_EQ(payload(encode_stream(s)), (std::vector<std::uint8_t>{0x01}));
}

TEST(SpkCodec, RowsArePadded) {
  SpikeStream s(sensor(3, 2), 1);
  for (std::uint32_t y = 0; y < 2; ++y)
    for (std::uint32_t x = 0; x < 3; ++x) s.set(0, x, y, true);
  EXPECT_EQ(payload(encode_stream(s)), (std::vector<std::uint8_t>{0x07, 0x07}));
}

TEST(SpkCodec, EmptyStreamIsHeaderOnly) {
  const auto bytes = encode_stream(SpikeStream(sensor(5, 4), 0));
  ASSERT_EQ(bytes.size(), SpkFileHeader::kSize);
  EXPECT_EQ(bytes[12], 0);
  EXPECT_EQ(decode_stream(bytes).frame_count(), 0u);
}

TEST(SpkCodec, HeaderFields) {
  SensorConfig cfg = sensor(300, 2);
  cfg.threshold_phi = 2.5;
  cfg.sample_period = 25e-6;
  SpikeStream s(cfg, 3, -7);
  const auto b = encode_stream(s);
  EXPECT_EQ(std::string(b.begin(), b.begin() + 4), "SPK1");
  EXPECT_EQ(b[4] | b[5] << 8, 300);
  EXPECT_EQ(b[8], 2);
  EXPECT_EQ(b[12], 3);
  EXPECT_EQ(b[16] | b[17] << 8, 25000);
  EXPECT_EQ(b[20] | b[21] << 8, 2500);
  EXPECT_EQ(b[24], 0xF9);
  EXPECT_EQ(b[31], 0xFF);
  EXPECT_EQ(b.size(), 32u + 3 * 2 * 38);
  const SpikeStream d = decode_stream(b);
  EXPECT_EQ(d.start_index(), -7);
  EXPECT_DOUBLE_EQ(d.config().threshold_phi, 2.5);
  EXPECT_DOUBLE_EQ(d.config().sample_period, 25e-6);
}

TEST(SpkCodec, RoundTripRandomStreams) {
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<std::uint32_t> dim(1, 40);
  std::uniform_int_distribution<std::size_t> frames(0, 12);
  std::uniform_real_distribution<double> density(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const SpikeStream s = oracle::random_stream(rng, dim(rng), dim(rng), frames(rng), density(rng));
    const SpikeStream d = decode_stream(encode_stream(s));
    ASSERT_TRUE(d == s) << "case " << i;
  }
}

TEST(SpkCodec, ErrorsAreSpecific) {
  SpikeStream s(sensor(4, 4), 10);
  auto bytes = encode_stream(s);
  auto bad = bytes;
  bad[3] = '2';
  EXPECT_EQ(decode_error(bad), ErrorCode::kBadMagic);
  auto short_payload = bytes;
  short_payload.resize(bytes.size() - s.frame_bytes());
  EXPECT_EQ(decode_error(short_payload), ErrorCode::kTruncated);
  EXPECT_EQ(decode_error(std::span(bytes).first(20)), ErrorCode::kTruncated);
  EXPECT_EQ(decode_error(std::span(bytes).first(2)), ErrorCode::kTruncated);
  auto extra = bytes;
  extra.push_back(0);
  EXPECT_EQ(decode_error(extra), ErrorCode::kTrailingBytes);
  auto zero_w = bytes;
  zero_w[4] = 0;
  EXPECT_EQ(decode_error(zero_w), ErrorCode::kMalformedHeader);
  auto huge = bytes;
  for (int i = 4; i < 16; ++i) huge[i] = 0xFF;
  EXPECT_EQ(decode_error(huge), ErrorCode::kDimensionOverflow);
  try {
    decode_stream(bad);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kData);
  }
}

TEST(SpkCodec, PaddingBitsIgnoredOnDecode) {
  SpikeStream s(sensor(3, 1), 1);
  auto bytes = encode_stream(s);
  bytes.back() = 0xF8;
  EXPECT_TRUE(decode_stream(bytes) == s);
}

TEST(SpkCodec, FuzzNeverCrashes) {
  std::mt19937_64 rng(7);
  std::vector<std::vector<std::uint8_t>> seeds;
  for (int i = 0; i < 8; ++i) seeds.push_back(encode_stream(oracle::random_stream(rng, 1 + i * 3, 2 + i, i, 0.5)));
  std::uniform_int_distribution<int> byte(0, 255);
  for (int i = 0; i < 5000; ++i) {
    auto b = seeds[i % seeds.size()];
    const int flips = 1 + i % 6;
    for (int f = 0; f < flips && !b.empty(); ++f) b[rng() % b.size()] = static_cast<std::uint8_t>(byte(rng));
    if (i % 3 == 0) b.resize(rng() % (b.size() + 1));
    try {
      const SpikeStream d = decode_stream(b);
      EXPECT_EQ(encode_stream(d).size(), b.size());
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kData);
    }
  }
}

TEST(Pgm, ExactBytes) {
  const GrayImage img(2, 2, std::vector<std::uint8_t>{0, 255, 128, 1});
  const auto bytes = write_pgm(img);
  const std::string head = "P5\n2 2\n255\n";
  ASSERT_EQ(bytes.size(), head.size() + 4);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + head.size()), head);
  EXPECT_EQ(std::vector<std::uint8_t>(bytes.end() - 4, bytes.end()),
            (std::vector<std::uint8_t>{0x00, 0xFF, 0x80, 0x01}));
}

TEST(Pgm, RoundTripRandom) {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 100; ++i) {
    GrayImage img(1 + rng() % 50, 1 + rng() % 50);
    for (auto& v : img.values) v = static_cast<std::uint8_t>(rng());
    EXPECT_EQ(read_pgm(write_pgm(img)), img);
    EXPECT_EQ(read_pgm(oracle::pgm_bytes(img)), img);
  }
}

TEST(Pgm, HeaderComments) {
  const std::string text = "P5 # comment\n# another\n3 1\n255\nabc";
  const GrayImage img = read_pgm(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  EXPECT_EQ(img.values, (std::vector<std::uint8_t>{'a', 'b', 'c'}));
}

TEST(Pgm, Errors) {
  auto parse = [](const std::string& t) {
    return read_pgm(std::span(reinterpret_cast<const std::uint8_t*>(t.data()), t.size()));
  };
  try {
    parse("P5\n1 1\n65535\n\x01\x02");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnsupportedMaxval);
  }
  EXPECT_THROW(parse("P5\n4 4\n255\nab"), Error);
  EXPECT_THROW(parse("P2\n1 1\n255\n1"), Error);
  EXPECT_THROW(parse(""), Error);
}

TEST(Pnm, ColorToLuma) {
  const std::string t = std::string("P6\n2 1\n255\n") + '\xFF' + '\xFF' + '\xFF' + '\xFF' + '\0' + '\0';
  const GrayImage g = read_pnm_as_gray(std::span(reinterpret_cast<const std::uint8_t*>(t.data()), t.size()));
  EXPECT_EQ(g.values[0], 255);
  EXPECT_EQ(g.values[1], 76);  // 0.299 * 255 = 76.2
}

TEST(Files, MissingIsNotFound) {
  try {
    read_file("/nonexistent/nowhere.spk");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotFound);
    EXPECT_NE(std::string(e.what()).find("input not found"), std::string::npos);
  }
}

TEST(Files, SpkRoundTripOnDisk) {
  std::mt19937_64 rng(1);
  const SpikeStream s = oracle::random_stream(rng, 13, 5, 9, 0.3);
  const auto path = std::filesystem::temp_directory_path() / "spikeline_unit_rt.spk";
  save_spk(path, s);
  EXPECT_TRUE(load_spk(path) == s);
  std::filesystem::remove(path);
}
