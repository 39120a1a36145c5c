#include "spikeline/ddpm/schedule.hpp"

#include <cmath>
#include <string>

#include "spikeline/error.hpp"

namespace spikeline::ddpm {

NoiseSchedule make_schedule(int steps, double beta_start, double beta_end,
                            VarianceMode variance) {
  require(steps >= 1, ErrorCode::kInvalidArgument, "schedule needs at least one step");
  require(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0,
          ErrorCode::kInvalidArgument, "need 0 < beta_start <= beta_end < 1");
  NoiseSchedule s;
  s.steps = steps;
  s.variance = variance;
  const auto n = static_cast<std::size_t>(steps) + 1;
  s.beta.assign(n, 0.0);
  s.alpha.assign(n, 1.0);
  s.alpha_bar.assign(n, 1.0);
  s.sigma.assign(n, 0.0);
  for (int t = 1; t <= steps; ++t) {
    const double frac = steps == 1 ? 0.0 : static_cast<double>(t - 1) / (steps - 1);
    s.beta[t] = beta_start + (beta_end - beta_start) * frac;
    s.alpha[t] = 1.0 - s.beta[t];
    s.alpha_bar[t] = s.alpha_bar[t - 1] * s.alpha[t];
    s.sigma[t] = (variance == VarianceMode::kBeta && t > 1) ? std::sqrt(s.beta[t]) : 0.0;
  }
  return s;
}

NoiseSchedule make_schedule(const ScheduleOptions& options) {
  return make_schedule(options.steps, options.beta_start, options.beta_end,
                       options.variance);
}

namespace {

void check_step(const NoiseSchedule& sched, int t) {
  require(t >= 1 && t <= sched.steps, ErrorCode::kOutOfBounds,
          "timestep " + std::to_string(t) + " outside [1, " +
              std::to_string(sched.steps) + "]");
}

}  // namespace

Tensor forward_diffuse(const Tensor& z0, int t, const Tensor& eps,
                       const NoiseSchedule& sched) {
  require_same_shape(z0, eps, "forward_diffuse");
  check_step(sched, t);
  const double signal = std::sqrt(sched.alpha_bar[t]);
  const double noise = std::sqrt(1.0 - sched.alpha_bar[t]);
  Tensor out = z0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.values[i] = signal * z0.values[i] + noise * eps.values[i];
  }
  return out;
}

Tensor reverse_step(const Tensor& z_t, int t, const Tensor& eps_pred,
                    const NoiseSchedule& sched, const Tensor& noise) {
  require_same_shape(z_t, eps_pred, "reverse_step");
  require_same_shape(z_t, noise, "reverse_step noise");
  check_step(sched, t);
  const double coef = sched.beta[t] / std::sqrt(1.0 - sched.alpha_bar[t]);
  const double inv_sqrt_alpha = 1.0 / std::sqrt(sched.alpha[t]);
  const double sigma = sched.sigma[t];
  Tensor out = z_t;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.values[i] = (z_t.values[i] - coef * eps_pred.values[i]) * inv_sqrt_alpha +
                    sigma * noise.values[i];
  }
  return out;
}

Tensor cfg_combine(const Tensor& eps_cond, const Tensor& eps_uncond, double scale) {
  require_same_shape(eps_cond, eps_uncond, "cfg_combine");
  Tensor out = eps_uncond;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.values[i] = eps_uncond.values[i] + scale * (eps_cond.values[i] - eps_uncond.values[i]);
  }
  return out;
}

double training_loss(const Tensor& eps_pred, const Tensor& eps) {
  require_same_shape(eps_pred, eps, "training_loss");
  require(eps.size() > 0, ErrorCode::kEmptyInput, "empty tensors");
  double sum = 0.0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const double d = eps_pred.values[i] - eps.values[i];
    sum += d * d;
  }
  return sum / static_cast<double>(eps.size());
}

std::vector<double> timestep_embedding(int t, std::uint32_t dim) {
  require(dim >= 2 && dim % 2 == 0, ErrorCode::kInvalidArgument,
          "embedding dimension must be even and >= 2");
  const std::uint32_t half = dim / 2;
  std::vector<double> emb(dim);
  for (std::uint32_t i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(10000.0) * i / half);
    emb[i] = std::sin(t * freq);
    emb[i + half] = std::cos(t * freq);
  }
  return emb;
}

}  // namespace spikeline::ddpm
