#include "spikeline/ddpm/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "spikeline/counter_rng.hpp"
#include "spikeline/error.hpp"

namespace spikeline::ddpm {

Tensor OracleDenoiser::predict(const DenoiserInput& input) const {
  require_same_shape(input.latent, target_, "oracle denoiser");
  const double signal = std::sqrt(sched_.alpha_bar[input.t]);
  const double noise = std::sqrt(1.0 - sched_.alpha_bar[input.t]);
  Tensor eps = input.latent;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    eps.values[i] = (input.latent.values[i] - signal * target_.values[i]) / noise;
  }
  return eps;
}

Tensor NetworkDenoiser::predict(const DenoiserInput& input) const {
  return model_.predictor().forward(input.fused, input.t, input.condition.f_enc);
}

Tensor image_to_latent(const GrayImage& image, std::uint32_t channels,
                       std::uint32_t width, std::uint32_t height) {
  require(channels >= 1, ErrorCode::kInvalidArgument, "latent needs a channel");
  const Plane resized = resize_bilinear(to_plane(image), width, height);
  Tensor t(channels, height, width);
  for (std::uint32_t c = 0; c < channels; ++c) {
    for (std::size_t i = 0; i < resized.values.size(); ++i) {
      t.values[c * t.plane() + i] = resized.values[i] / 127.5 - 1.0;
    }
  }
  return t;
}

GrayImage latent_to_image(const Tensor& latent, std::uint32_t width, std::uint32_t height) {
  Plane plane{latent.width, latent.height, std::vector<double>(latent.plane(), 0.0)};
  for (std::uint32_t c = 0; c < latent.channels; ++c) {
    for (std::size_t i = 0; i < latent.plane(); ++i) {
      plane.values[i] += latent.values[c * latent.plane() + i];
    }
  }
  for (double& v : plane.values) {
    v = (std::clamp(v / latent.channels, -1.0, 1.0) + 1.0) * 127.5;
  }
  return quantize(resize_bilinear(plane, width, height));
}

Tensor gaussian_tensor(std::uint32_t channels, std::uint32_t height, std::uint32_t width,
                       std::uint64_t seed, std::uint64_t stream) {
  CounterRng rng(seed, stream, 0x4761757373ULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  Tensor t(channels, height, width);
  for (double& v : t.values) v = normal(rng);
  return t;
}

SampleResult sample(const Denoiser& denoiser, const ConditionalModel& model,
                    const GrayImage& condition, const NoiseSchedule& sched,
                    const SampleOptions& options) {
  require(sched.steps >= 1, ErrorCode::kInvalidArgument, "empty schedule");
  require(std::isfinite(options.cfg_scale), ErrorCode::kInvalidArgument,
          "cfg scale must be finite");
  require(condition.width >= 1 && condition.height >= 1, ErrorCode::kInvalidArgument,
          "empty condition image");
  const std::uint32_t channels = model.config().latent_channels;
  const Tensor cond = image_to_latent(condition, channels, options.latent_width,
                                      options.latent_height);
  const ConditionFeatures features = model.encoder().forward(cond);
  const ConditionFeatures empty = features.zeros_like();

  SampleResult result;
  Tensor z = gaussian_tensor(channels, options.latent_height, options.latent_width,
                             options.seed, 0);
  for (int t = sched.steps; t >= 1; --t) {
    const Tensor fused = model.fusion().forward(z, t, features.f_enc_hat);
    Tensor eps = denoiser.predict({fused, z, t, features, true});
    if (options.guidance) {
      const Tensor fused_u = model.fusion().forward(z, t, empty.f_enc_hat);
      const Tensor eps_u = denoiser.predict({fused_u, z, t, empty, false});
      eps = cfg_combine(eps, eps_u, options.cfg_scale);
    }
    const Tensor noise = sched.sigma[t] > 0.0
                             ? gaussian_tensor(channels, z.height, z.width, options.seed,
                                               static_cast<std::uint64_t>(t))
                             : Tensor(channels, z.height, z.width);
    z = reverse_step(z, t, eps, sched, noise);
    const double norm = std::sqrt(squared_norm(z));
    result.step_norms.push_back(norm);
    if (options.on_step) options.on_step(t, norm);
  }
  result.image = latent_to_image(z, condition.width, condition.height);
  result.latent = std::move(z);
  return result;
}

GrayImage sample(const Denoiser& denoiser, const ConditionalModel& model,
                 const EtfiImage& condition, const NoiseSchedule& sched,
                 double cfg_scale, std::uint64_t seed) {
  SampleOptions options;
  options.cfg_scale = cfg_scale;
  options.seed = seed;
  options.latent_width = condition.image.width;
  options.latent_height = condition.image.height;
  return sample(denoiser, model, condition.image, sched, options).image;
}

}  // namespace spikeline::ddpm
