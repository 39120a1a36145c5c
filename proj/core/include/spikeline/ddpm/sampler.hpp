#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "spikeline/ddpm/blocks.hpp"
#include "spikeline/ddpm/schedule.hpp"
#include "spikeline/ddpm/tensor.hpp"
#include "spikeline/gray_image.hpp"
#include "spikeline/isi_etfi.hpp"

namespace spikeline::ddpm {

struct DenoiserInput {
  const Tensor& fused;   // F_fuse
  const Tensor& latent;  // z_t before fusion
  int t;
  const ConditionFeatures& condition;
  bool conditional;      // false on the unconditional guidance branch
};

// Noise predictor contract: shape-preserving and deterministic.
class Denoiser {
 public:
  virtual ~Denoiser() = default;
  virtual Tensor predict(const DenoiserInput& input) const = 0;
};

// Returns the exact noise that explains z_t for a fixed clean target:
// (z_t - sqrt(abar_t) target) / sqrt(1 - abar_t).
class OracleDenoiser final : public Denoiser {
 public:
  OracleDenoiser(Tensor target, const NoiseSchedule& sched)
      : target_(std::move(target)), sched_(sched) {}
  Tensor predict(const DenoiserInput& input) const override;

 private:
  Tensor target_;
  const NoiseSchedule& sched_;
};

// The built-in NoisePredictor of a model.
class NetworkDenoiser final : public Denoiser {
 public:
  explicit NetworkDenoiser(const ConditionalModel& model) : model_(model) {}
  Tensor predict(const DenoiserInput& input) const override;

 private:
  const ConditionalModel& model_;
};

struct SampleOptions {
  double cfg_scale = 2.0;
  // When false only the conditional branch runs.
  bool guidance = true;
  std::uint64_t seed = 0;
  std::uint32_t latent_width = 32;
  std::uint32_t latent_height = 32;
  // Called after each reverse step with t and ||z_{t-1}||_2.
  std::function<void(int, double)> on_step;
};

struct SampleResult {
  GrayImage image;  // at the condition's resolution
  Tensor latent;    // final z_0
  std::vector<double> step_norms;
};

// Gray levels map affinely onto [-1, 1], resized to the latent grid.
Tensor image_to_latent(const GrayImage& image, std::uint32_t channels,
                       std::uint32_t width, std::uint32_t height);
// Clamps to [-1, 1], maps back to gray levels and resizes to width x height.
GrayImage latent_to_image(const Tensor& latent, std::uint32_t width, std::uint32_t height);

Tensor gaussian_tensor(std::uint32_t channels, std::uint32_t height, std::uint32_t width,
                       std::uint64_t seed, std::uint64_t stream);

// Encodes the condition once, then for t = T..1: fuse, predict conditional
// and unconditional noise, combine with guidance, reverse step.
SampleResult sample(const Denoiser& denoiser, const ConditionalModel& model,
                    const GrayImage& condition, const NoiseSchedule& sched,
                    const SampleOptions& options);

GrayImage sample(const Denoiser& denoiser, const ConditionalModel& model,
                 const EtfiImage& condition, const NoiseSchedule& sched,
                 double cfg_scale, std::uint64_t seed);

}  // namespace spikeline::ddpm
