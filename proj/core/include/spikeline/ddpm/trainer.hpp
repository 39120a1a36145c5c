#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "spikeline/ddpm/blocks.hpp"
#include "spikeline/ddpm/schedule.hpp"
#include "spikeline/gray_image.hpp"

namespace spikeline::ddpm {

// Adam with bias correction and decoupled weight decay.
class AdamW {
 public:
  struct Options {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 0.0;
  };

  explicit AdamW(Options options) : options_(options) {}
  void step(BlockParams& params);

 private:
  Options options_;
  std::uint64_t t_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

// One (t, eps) draw of the noise-prediction objective.
struct LossSample {
  int t;
  Tensor eps;
};

struct TrainOptions {
  int iterations = 200;
  int batch = 4;
  double learning_rate = 1e-2;
  std::uint64_t seed = 0;
  // Fixed (t, eps) draws used to measure the loss before and after.
  int eval_samples = 32;
  std::function<void(int, double)> on_iteration;
};

struct TrainReport {
  double initial_loss = 0.0;
  double final_loss = 0.0;
  std::vector<double> batch_losses;
};

// Loss of eps_theta(F_fuse, t, F_enc) against eps for one draw, with
// optional backpropagation into every block's parameters.
double noise_prediction_loss(const ConditionalModel& model, const Tensor& clean,
                             const Tensor& condition, const NoiseSchedule& sched,
                             const LossSample& draw, bool accumulate_grads,
                             double grad_scale = 1.0);

// Fits the encoder, fusion module and noise predictor to a single
// (condition, ground truth) pair.
TrainReport train_pair(ConditionalModel& model, const Tensor& condition, const Tensor& clean,
                       const NoiseSchedule& sched, const TrainOptions& options);

}  // namespace spikeline::ddpm
