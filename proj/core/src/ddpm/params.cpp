#include "spikeline/ddpm/params.hpp"

#include <algorithm>
#include <cmath>

#include "spikeline/counter_rng.hpp"
#include "spikeline/error.hpp"

namespace spikeline::ddpm {

namespace {

std::uint64_t name_key(std::string_view name) {
  // FNV-1a; std::hash is not stable across standard libraries.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

void fill_uniform(Param& p, std::uint64_t seed, double scale) {
  CounterRng rng(seed, name_key(p.name));
  for (double& v : p.value) v = (2.0 * rng.uniform() - 1.0) * scale;
}

}  // namespace

Param* BlockParams::add(std::string name, std::vector<std::uint32_t> shape,
                        Init init, std::uint32_t fan_in) {
  require(find(name) == nullptr, ErrorCode::kInvalidArgument,
          "duplicate parameter " + name);
  auto p = std::make_unique<Param>();
  p->name = std::move(name);
  p->shape = std::move(shape);
  std::size_t n = 1;
  for (auto d : p->shape) n *= d;
  p->value.assign(n, 0.0);
  p->grad.assign(n, 0.0);
  p->zero_init = init == Init::kZero;
  if (init == Init::kUniformFanIn) {
    fill_uniform(*p, init_seed_, 1.0 / std::sqrt(static_cast<double>(std::max(1u, fan_in))));
  }
  params_.push_back(std::move(p));
  return params_.back().get();
}

Param* BlockParams::find(std::string_view name) {
  for (auto& p : params_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

const Param* BlockParams::find(std::string_view name) const {
  for (const auto& p : params_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

std::size_t BlockParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->size();
  return n;
}

void BlockParams::zero_grad() {
  for (auto& p : params_) std::fill(p->grad.begin(), p->grad.end(), 0.0);
}

void BlockParams::randomize(std::uint64_t seed, double scale) {
  for (auto& p : params_) fill_uniform(*p, seed, scale);
}

}  // namespace spikeline::ddpm
