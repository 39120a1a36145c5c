#pragma once

#include <cstdint>
#include <vector>

#include "spikeline/ddpm/tensor.hpp"

namespace spikeline::ddpm {

enum class VarianceMode {
  kZero,  // deterministic reverse steps
  kBeta,  // sigma_t = sqrt(beta_t), with sigma = 0 on the final step
};

// Arrays are indexed by timestep t in [1, steps]; element 0 is unused
// (alpha_bar[0] = 1 so that alpha_bar[t - 1] is defined at t = 1).
struct NoiseSchedule {
  int steps = 0;
  VarianceMode variance = VarianceMode::kBeta;
  std::vector<double> beta;
  std::vector<double> alpha;
  std::vector<double> alpha_bar;
  std::vector<double> sigma;
};

struct ScheduleOptions {
  int steps = 50;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  VarianceMode variance = VarianceMode::kBeta;
};

// Linear beta interpolation from beta_start to beta_end over the steps.
NoiseSchedule make_schedule(int steps, double beta_start, double beta_end,
                            VarianceMode variance);
NoiseSchedule make_schedule(const ScheduleOptions& options);

// z_t = sqrt(abar_t) z0 + sqrt(1 - abar_t) eps
Tensor forward_diffuse(const Tensor& z0, int t, const Tensor& eps,
                       const NoiseSchedule& sched);

// z_{t-1} = (z_t - beta_t / sqrt(1 - abar_t) * eps_pred) / sqrt(alpha_t) + sigma_t * noise
Tensor reverse_step(const Tensor& z_t, int t, const Tensor& eps_pred,
                    const NoiseSchedule& sched, const Tensor& noise);

// eps_uncond + scale * (eps_cond - eps_uncond)
Tensor cfg_combine(const Tensor& eps_cond, const Tensor& eps_uncond, double scale);

// Mean over elements of the squared difference.
double training_loss(const Tensor& eps_pred, const Tensor& eps);

// Sinusoidal encoding: sin(t * f_i) for the first half, cos(t * f_i) for the
// second, f_i = 10000^(-i / (dim / 2)).
std::vector<double> timestep_embedding(int t, std::uint32_t dim);

}  // namespace spikeline::ddpm
