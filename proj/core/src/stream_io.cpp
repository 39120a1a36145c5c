#include "spikeline/stream_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

#include "spikeline/error.hpp"

namespace spikeline {

namespace {

void put_u32(std::uint8_t* p, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

void put_i64(std::uint8_t* p, std::int64_t value) {
  const auto v = static_cast<std::uint64_t>(value);
  for (int i = 0; i < 8; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return std::uint32_t{p[0]} | std::uint32_t{p[1]} << 8 |
         std::uint32_t{p[2]} << 16 | std::uint32_t{p[3]} << 24;
}

std::int64_t get_i64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return static_cast<std::int64_t>(v);
}

std::uint32_t to_fixed_u32(double value, double scale, const char* what) {
  const double scaled = std::round(value * scale);
  require(scaled >= 1.0 && scaled <= std::numeric_limits<std::uint32_t>::max(),
          ErrorCode::kInvalidArgument,
          std::string(what) + " is not representable in the .spk header");
  return static_cast<std::uint32_t>(scaled);
}

}  // namespace

std::uint64_t SpkFileHeader::payload_bytes() const {
  std::uint64_t row = (std::uint64_t{width} + 7) / 8;
  std::uint64_t total = 0;
  if (__builtin_mul_overflow(row, std::uint64_t{height}, &total) ||
      __builtin_mul_overflow(total, std::uint64_t{frame_count}, &total)) {
    fail(ErrorCode::kDimensionOverflow, "header dimensions overflow");
  }
  return total;
}

std::vector<std::uint8_t> encode_stream(const SpikeStream& stream) {
  require(stream.frame_count() <= std::numeric_limits<std::uint32_t>::max(),
          ErrorCode::kInvalidArgument, "too many frames for .spk");
  const SensorConfig& cfg = stream.config();
  std::vector<std::uint8_t> out(SpkFileHeader::kSize + stream.data().size());
  std::uint8_t* p = out.data();
  std::copy(std::begin(SpkFileHeader::kMagic), std::end(SpkFileHeader::kMagic), p);
  put_u32(p + 4, stream.width());
  put_u32(p + 8, stream.height());
  put_u32(p + 12, static_cast<std::uint32_t>(stream.frame_count()));
  put_u32(p + 16, to_fixed_u32(cfg.sample_period, 1e9, "sample period"));
  put_u32(p + 20, to_fixed_u32(cfg.threshold_phi, 1e3, "threshold"));
  put_i64(p + 24, stream.start_index());
  std::copy(stream.data().begin(), stream.data().end(), p + SpkFileHeader::kSize);
  return out;
}

SpikeStream decode_stream(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) fail(ErrorCode::kTruncated, "missing .spk magic");
  if (!std::equal(bytes.begin(), bytes.begin() + 4, std::begin(SpkFileHeader::kMagic))) {
    fail(ErrorCode::kBadMagic, "bad .spk magic");
  }
  if (bytes.size() < SpkFileHeader::kSize) fail(ErrorCode::kTruncated, "truncated .spk header");

  const std::uint8_t* p = bytes.data();
  SpkFileHeader header;
  header.width = get_u32(p + 4);
  header.height = get_u32(p + 8);
  header.frame_count = get_u32(p + 12);
  header.sample_period_ns = get_u32(p + 16);
  header.threshold_milli = get_u32(p + 20);
  header.start_index = get_i64(p + 24);

  require(header.width >= 1 && header.height >= 1, ErrorCode::kMalformedHeader,
          "zero width or height in .spk header");
  require(header.sample_period_ns >= 1 && header.threshold_milli >= 1,
          ErrorCode::kMalformedHeader, "zero period or threshold in .spk header");

  const std::uint64_t payload = header.payload_bytes();
  const std::uint64_t available = bytes.size() - SpkFileHeader::kSize;
  if (payload > available) {
    fail(ErrorCode::kTruncated, "payload holds " + std::to_string(available) +
                                    " bytes, header needs " + std::to_string(payload));
  }
  if (payload < available) fail(ErrorCode::kTrailingBytes, "trailing bytes after payload");

  SensorConfig cfg;
  cfg.width = header.width;
  cfg.height = header.height;
  cfg.sample_period = header.sample_period_ns / 1e9;
  cfg.threshold_phi = header.threshold_milli / 1e3;
  SpikeStream stream(cfg, header.frame_count, header.start_index);
  const auto body = bytes.subspan(SpkFileHeader::kSize);
  std::copy(body.begin(), body.end(), stream.mutable_data().begin());
  // Padding bits carry no pixels; clear them so equality is layout-exact.
  if (header.width % 8 != 0) {
    const auto mask = static_cast<std::uint8_t>((1u << (header.width % 8)) - 1u);
    const std::size_t stride = stream.row_stride();
    auto data = stream.mutable_data();
    for (std::size_t i = stride - 1; i < data.size(); i += stride) data[i] &= mask;
  }
  return stream;
}

std::vector<std::uint8_t> write_pgm(const GrayImage& image) {
  require(image.values.size() == std::size_t{image.width} * image.height,
          ErrorCode::kShapeMismatch, "image buffer does not match dimensions");
  const std::string header = "P5\n" + std::to_string(image.width) + " " +
                             std::to_string(image.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.values.begin(), image.values.end());
  return out;
}

namespace {

class PnmHeaderReader {
 public:
  explicit PnmHeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint64_t number() {
    skip_space_and_comments();
    if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_])) {
      fail(ErrorCode::kMalformedHeader, "expected a number in PNM header");
    }
    std::uint64_t v = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_++] - '0');
      if (v > std::numeric_limits<std::uint32_t>::max()) {
        fail(ErrorCode::kDimensionOverflow, "PNM header value too large");
      }
    }
    return v;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t raster_offset() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      fail(ErrorCode::kMalformedHeader, "missing separator before raster");
    }
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 2;
};

GrayImage read_pnm(std::span<const std::uint8_t> bytes, bool allow_color) {
  if (bytes.size() < 2 || bytes[0] != 'P' ||
      !(bytes[1] == '5' || (allow_color && bytes[1] == '6'))) {
    fail(ErrorCode::kMalformedHeader,
         allow_color ? "not a binary PGM/PPM file" : "not a binary PGM (P5) file");
  }
  const bool color = bytes[1] == '6';
  PnmHeaderReader reader(bytes);
  const std::uint64_t width = reader.number();
  const std::uint64_t height = reader.number();
  const std::uint64_t maxval = reader.number();
  require(width >= 1 && height >= 1, ErrorCode::kMalformedHeader, "zero PNM dimension");
  if (maxval != 255) {
    fail(ErrorCode::kUnsupportedMaxval,
         "unsupported maxval " + std::to_string(maxval) + " (only 255)");
  }
  const std::size_t offset = reader.raster_offset();
  const std::uint64_t channels = color ? 3 : 1;
  const std::uint64_t need = width * height * channels;
  if (bytes.size() - std::min(offset, bytes.size()) < need) {
    fail(ErrorCode::kTruncated, "truncated PNM raster");
  }
  GrayImage image(static_cast<std::uint32_t>(width), static_cast<std::uint32_t>(height));
  const std::uint8_t* raster = bytes.data() + offset;
  if (!color) {
    std::copy(raster, raster + need, image.values.begin());
  } else {
    for (std::size_t i = 0; i < image.values.size(); ++i) {
      const double luma = 0.299 * raster[3 * i] + 0.587 * raster[3 * i + 1] +
                          0.114 * raster[3 * i + 2];
      image.values[i] = quantize_level(luma);
    }
  }
  return image;
}

}  // namespace

GrayImage read_pgm(std::span<const std::uint8_t> bytes) { return read_pnm(bytes, false); }

GrayImage read_pnm_as_gray(std::span<const std::uint8_t> bytes) {
  return read_pnm(bytes, true);
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    fail(ErrorCode::kNotFound, "input not found: " + path.string());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIoFailure, "cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIoFailure, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::kIoFailure, "write failed for " + path.string());
}

SpikeStream load_spk(const std::filesystem::path& path) {
  return decode_stream(read_file(path));
}

void save_spk(const std::filesystem::path& path, const SpikeStream& stream) {
  write_file(path, encode_stream(stream));
}

GrayImage load_pgm(const std::filesystem::path& path) { return read_pgm(read_file(path)); }

void save_pgm(const std::filesystem::path& path, const GrayImage& image) {
  write_file(path, write_pgm(image));
}

}  // namespace spikeline
