#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace spikeline::ddpm {

struct Param {
  std::string name;
  std::vector<std::uint32_t> shape;
  std::vector<double> value;
  std::vector<double> grad;
  // Zero-initialized output projections keep this flag so tests and tools
  // can find them.
  bool zero_init = false;

  std::size_t size() const { return value.size(); }
};

enum class Init {
  kZero,
  kUniformFanIn,  // U(-1/sqrt(fan_in), 1/sqrt(fan_in))
};

// Named weights for every block. Params are heap-allocated so the pointers
// handed to layers stay valid when the store moves.
class BlockParams {
 public:
  explicit BlockParams(std::uint64_t init_seed = 0) : init_seed_(init_seed) {}
  BlockParams(BlockParams&&) noexcept = default;
  BlockParams& operator=(BlockParams&&) noexcept = default;
  BlockParams(const BlockParams&) = delete;
  BlockParams& operator=(const BlockParams&) = delete;

  Param* add(std::string name, std::vector<std::uint32_t> shape, Init init,
             std::uint32_t fan_in = 1);

  Param* find(std::string_view name);
  const Param* find(std::string_view name) const;
  std::span<const std::unique_ptr<Param>> all() const { return params_; }

  std::uint64_t init_seed() const { return init_seed_; }
  std::size_t parameter_count() const;
  void zero_grad();

  // Overwrites every value with U(-scale, scale) draws keyed by (seed, name).
  void randomize(std::uint64_t seed, double scale);

 private:
  std::uint64_t init_seed_;
  std::vector<std::unique_ptr<Param>> params_;
};

}  // namespace spikeline::ddpm
