#include "spikeline/ddpm/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <map>
#include <string>

#include "spikeline/error.hpp"
#include "spikeline/stream_io.hpp"

namespace spikeline::ddpm {

namespace {

constexpr char kMagic[4] = {'S', 'L', 'C', 'K'};
constexpr const char* kConfigRecord = "meta.config";

class Writer {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    out_.insert(out_.end(), p, p + n);
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

  void record(const std::string& name, const std::vector<std::uint32_t>& shape,
              const std::vector<double>& values) {
    u32(static_cast<std::uint32_t>(name.size()));
    bytes(name.data(), name.size());
    u32(static_cast<std::uint32_t>(shape.size()));
    for (auto d : shape) u32(d);
    for (double v : values) f64(v);
  }

  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  void need(std::uint64_t n) const {
    if (n > in_.size() - pos_) fail(ErrorCode::kTruncated, "truncated checkpoint");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | in_[pos_ + i];
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | in_[pos_ + i];
    pos_ += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str(std::uint32_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

struct Record {
  std::vector<std::uint32_t> shape;
  std::vector<double> values;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const ConditionalModel& model) {
  Writer w;
  w.bytes(kMagic, 4);
  w.u32(kCheckpointVersion);
  w.u64(model.params().init_seed());
  const auto params = model.params().all();
  w.u32(static_cast<std::uint32_t>(params.size() + 1));
  const std::vector<double> config = model.config().to_record();
  w.record(kConfigRecord, {static_cast<std::uint32_t>(config.size())}, config);
  for (const auto& p : params) w.record(p->name, p->shape, p->value);
  return w.take();
}

ConditionalModel decode_checkpoint(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  r.need(4);
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) fail(ErrorCode::kBadMagic, "not a checkpoint");
  r.str(4);
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    fail(ErrorCode::kUnsupportedVersion,
         "unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint64_t seed = r.u64();
  const std::uint32_t count = r.u32();

  std::map<std::string, Record> records;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = r.u32();
    require(name_len <= 4096, ErrorCode::kMalformedHeader, "record name too long");
    std::string name = r.str(name_len);
    const std::uint32_t rank = r.u32();
    require(rank <= 8, ErrorCode::kMalformedHeader, "record rank too large");
    Record rec;
    std::uint64_t n = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      rec.shape.push_back(r.u32());
      if (__builtin_mul_overflow(n, std::uint64_t{rec.shape.back()}, &n)) {
        fail(ErrorCode::kDimensionOverflow, "record dimensions overflow");
      }
    }
    if (n > std::uint64_t{1} << 60) fail(ErrorCode::kDimensionOverflow, "record too large");
    r.need(n * 8);
    rec.values.resize(n);
    for (double& v : rec.values) v = r.f64();
    require(records.emplace(std::move(name), std::move(rec)).second,
            ErrorCode::kMalformedHeader, "duplicate checkpoint record");
  }
  require(r.done(), ErrorCode::kTrailingBytes, "trailing bytes after checkpoint");

  const auto cfg = records.find(kConfigRecord);
  require(cfg != records.end(), ErrorCode::kMalformedHeader, "checkpoint lacks meta.config");
  ConditionalModel model(ModelConfig::from_record(cfg->second.values), seed);
  require(records.size() == model.params().all().size() + 1, ErrorCode::kMalformedHeader,
          "checkpoint records do not match the model layout");
  for (const auto& p : model.params().all()) {
    const auto it = records.find(p->name);
    require(it != records.end(), ErrorCode::kMalformedHeader,
            "checkpoint lacks parameter " + p->name);
    require(it->second.shape == p->shape, ErrorCode::kMalformedHeader,
            "shape mismatch for parameter " + p->name);
    p->value = it->second.values;
  }
  return model;
}

void save_checkpoint(const std::filesystem::path& path, const ConditionalModel& model) {
  write_file(path, encode_checkpoint(model));
}

ConditionalModel load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(path));
}

}  // namespace spikeline::ddpm
