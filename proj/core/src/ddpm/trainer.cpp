#include "spikeline/ddpm/trainer.hpp"

#include <cmath>

#include "spikeline/counter_rng.hpp"
#include "spikeline/ddpm/sampler.hpp"
#include "spikeline/error.hpp"

namespace spikeline::ddpm {

void AdamW::step(BlockParams& params) {
  const auto all = params.all();
  if (m_.empty()) {
    for (const auto& p : all) {
      m_.emplace_back(p->size(), 0.0);
      v_.emplace_back(p->size(), 0.0);
    }
  }
  ++t_;
  const double c1 = 1.0 - std::pow(options_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(options_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < all.size(); ++k) {
    Param& p = *all[k];
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double g = p.grad[i];
      m[i] = options_.beta1 * m[i] + (1.0 - options_.beta1) * g;
      v[i] = options_.beta2 * v[i] + (1.0 - options_.beta2) * g * g;
      const double update = (m[i] / c1) / (std::sqrt(v[i] / c2) + options_.epsilon);
      p.value[i] -= options_.learning_rate * (update + options_.weight_decay * p.value[i]);
    }
  }
}

double noise_prediction_loss(const ConditionalModel& model, const Tensor& clean,
                             const Tensor& condition, const NoiseSchedule& sched,
                             const LossSample& draw, bool accumulate_grads,
                             double grad_scale) {
  const Tensor z_t = forward_diffuse(clean, draw.t, draw.eps, sched);
  ConditionEncoder::Cache enc_cache;
  FusionModule::Cache fuse_cache;
  NoisePredictor::Cache pred_cache;
  const ConditionFeatures features = model.encoder().forward(condition, &enc_cache);
  const Tensor fused = model.fusion().forward(z_t, draw.t, features.f_enc_hat, &fuse_cache);
  const Tensor eps_pred =
      model.predictor().forward(fused, draw.t, features.f_enc, &pred_cache);
  const double loss = training_loss(eps_pred, draw.eps);
  if (accumulate_grads) {
    Tensor d_eps = eps_pred;
    const double scale = 2.0 * grad_scale / static_cast<double>(eps_pred.size());
    for (std::size_t i = 0; i < d_eps.size(); ++i) {
      d_eps.values[i] = scale * (eps_pred.values[i] - draw.eps.values[i]);
    }
    const NoisePredictor::Grads g_pred = model.predictor().backward(pred_cache, d_eps);
    const FusionModule::Grads g_fuse = model.fusion().backward(fuse_cache, g_pred.d_fused);
    model.encoder().backward(enc_cache, g_pred.d_f_enc, &g_fuse.d_f_enc_hat);
  }
  return loss;
}

namespace {

LossSample draw_sample(const Tensor& like, const NoiseSchedule& sched, std::uint64_t seed,
                       std::uint64_t index) {
  CounterRng rng(seed, index, 0x74696d65ULL);
  const int t = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(sched.steps));
  return {t, gaussian_tensor(like.channels, like.height, like.width, seed, index)};
}

}  // namespace

TrainReport train_pair(ConditionalModel& model, const Tensor& condition, const Tensor& clean,
                       const NoiseSchedule& sched, const TrainOptions& options) {
  require(options.iterations >= 0 && options.batch >= 1 && options.eval_samples >= 1,
          ErrorCode::kInvalidArgument, "invalid training options");
  require_same_shape(condition, clean, "train_pair");

  std::vector<LossSample> eval;
  for (int i = 0; i < options.eval_samples; ++i) {
    eval.push_back(draw_sample(clean, sched, options.seed ^ 0x6576616cULL,
                               static_cast<std::uint64_t>(i)));
  }
  auto evaluate = [&] {
    double total = 0.0;
    for (const LossSample& s : eval) {
      total += noise_prediction_loss(model, clean, condition, sched, s, false);
    }
    return total / static_cast<double>(eval.size());
  };

  TrainReport report;
  report.initial_loss = evaluate();
  AdamW optimizer({options.learning_rate});
  std::uint64_t counter = 0;
  for (int it = 0; it < options.iterations; ++it) {
    model.params().zero_grad();
    double batch_loss = 0.0;
    for (int b = 0; b < options.batch; ++b) {
      const LossSample s = draw_sample(clean, sched, options.seed, counter++);
      batch_loss += noise_prediction_loss(model, clean, condition, sched, s, true,
                                          1.0 / options.batch);
    }
    batch_loss /= options.batch;
    optimizer.step(model.params());
    report.batch_losses.push_back(batch_loss);
    if (options.on_iteration) options.on_iteration(it, batch_loss);
  }
  report.final_loss = evaluate();
  return report;
}

}  // namespace spikeline::ddpm
