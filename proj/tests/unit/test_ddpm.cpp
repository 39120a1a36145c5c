#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>

#include "oracles.hpp"
#include "spikeline/ddpm/checkpoint.hpp"
#include "spikeline/ddpm/sampler.hpp"
#include "spikeline/ddpm/trainer.hpp"
#include "spikeline/error.hpp"

using namespace spikeline;
using namespace spikeline::ddpm;

namespace {

Tensor random_tensor(std::uint32_t c, std::uint32_t h, std::uint32_t w, std::uint64_t seed,
                     double lo = -1, double hi = 1) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(c, h, w);
  for (double& v : t.values) v = u(rng);
  return t;
}

Tensor scalar(double v) { return Tensor(1, 1, 1, v); }

double dot(const Tensor& a, const Tensor& w) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.values[i] * w.values[i];
  return s;
}

// Central differences against every analytic entry of grad; returns the worst
// relative error over entries whose numeric gradient is not negligible.
double worst_relative(std::vector<double>& values, const std::vector<double>& grad,
                      const std::function<double()>& loss, std::size_t max_checks = 64) {
  double worst = 0;
  const std::size_t stride = std::max<std::size_t>(1, values.size() / max_checks);
  for (std::size_t i = 0; i < values.size(); i += stride) {
    const double saved = values[i];
    const double h = 1e-4 * std::max(1.0, std::abs(saved));
    values[i] = saved + h;
    const double up = loss();
    values[i] = saved - h;
    const double down = loss();
    values[i] = saved;
    const double numeric = (up - down) / (2 * h);
    const double scale = std::max(std::abs(numeric), std::abs(grad[i]));
    if (scale < 1e-7) {
      EXPECT_LT(std::abs(numeric - grad[i]), 1e-9);
      continue;
    }
    worst = std::max(worst, std::abs(numeric - grad[i]) / scale);
  }
  return worst;
}

}  // namespace

TEST(Schedule, CumulativeProducts) {
  const NoiseSchedule one = make_schedule(1, 0.1, 0.1, VarianceMode::kZero);
  EXPECT_NEAR(one.alpha_bar[1], 0.9, 1e-15);
  const NoiseSchedule s = make_schedule(3, 0.1, 0.1, VarianceMode::kZero);
  EXPECT_NEAR(s.alpha_bar[1], 0.9, 1e-15);
  EXPECT_NEAR(s.alpha_bar[2], 0.81, 1e-15);
  EXPECT_NEAR(s.alpha_bar[3], 0.729, 1e-15);
  EXPECT_EQ(s.alpha_bar[0], 1.0);
}

TEST(Schedule, Defaults) {
  const NoiseSchedule s = make_schedule(ScheduleOptions{});
  EXPECT_EQ(s.steps, 50);
  ASSERT_EQ(s.beta.size(), 51u);
  EXPECT_DOUBLE_EQ(s.beta[1], 1e-4);
  EXPECT_DOUBLE_EQ(s.beta[50], 0.02);
  for (int t = 1; t <= 50; ++t) EXPECT_LT(s.alpha_bar[t], s.alpha_bar[t - 1]);
  EXPECT_EQ(s.sigma[1], 0.0);
  EXPECT_DOUBLE_EQ(s.sigma[10], std::sqrt(s.beta[10]));
  EXPECT_THROW(make_schedule(0, 1e-4, 0.02, VarianceMode::kBeta), Error);
  EXPECT_THROW(make_schedule(10, 0.5, 1.0, VarianceMode::kBeta), Error);
}

TEST(ForwardDiffuse, Limits) {
  const NoiseSchedule s = make_schedule(3, 0.1, 0.1, VarianceMode::kZero);
  const Tensor z0 = random_tensor(1, 3, 3, 1), eps = random_tensor(1, 3, 3, 2);
  const Tensor zero(1, 3, 3);
  const Tensor a = forward_diffuse(z0, 2, zero, s);
  const Tensor b = forward_diffuse(zero, 2, eps, s);
  for (std::size_t i = 0; i < 9; ++i) {
    EXPECT_DOUBLE_EQ(a.values[i], std::sqrt(0.81) * z0.values[i]);
    EXPECT_DOUBLE_EQ(b.values[i], std::sqrt(0.19) * eps.values[i]);
  }
  EXPECT_NEAR(forward_diffuse(scalar(1), 3, scalar(1), s).values[0], 1.374392, 1e-6);
}

TEST(ReverseStep, OracleRecoveryAtFirstStep) {
  const NoiseSchedule s = make_schedule(ScheduleOptions{});
  const Tensor z0 = random_tensor(2, 4, 4, 3), eps = random_tensor(2, 4, 4, 4);
  const Tensor z1 = forward_diffuse(z0, 1, eps, s);
  const Tensor out = reverse_step(z1, 1, eps, s, Tensor(2, 4, 4));
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_NEAR(out.values[i], z0.values[i], 1e-9);
}

TEST(ReverseStep, ZeroPredictionRescales) {
  const NoiseSchedule s = make_schedule(ScheduleOptions{});
  const Tensor z = random_tensor(1, 2, 2, 5);
  const Tensor out = reverse_step(z, 30, Tensor(1, 2, 2), s, Tensor(1, 2, 2));
  for (std::size_t i = 0; i < 4; ++i)
    EXPECT_DOUBLE_EQ(out.values[i], z.values[i] / std::sqrt(s.alpha[30]));
}

TEST(ReverseStep, SignalCoefficientIsSqrtAlphaBarPrev) {
  const NoiseSchedule s = make_schedule(ScheduleOptions{});
  for (int t = 1; t <= 50; ++t) {
    // Linearity in z0: with eps fixed, step(z0 = 1) - step(z0 = 0) is the coefficient.
    const Tensor eps = scalar(0.7);
    const auto run = [&](double z0) {
      return reverse_step(forward_diffuse(scalar(z0), t, eps, s), t, eps, s, scalar(0)).values[0];
    };
    EXPECT_NEAR(run(1.0) - run(0.0), std::sqrt(s.alpha_bar[t - 1]), 1e-9) << t;
  }
}

TEST(Cfg, Combine) {
  const Tensor u = scalar(0.1), c = scalar(0.3);
  EXPECT_DOUBLE_EQ(cfg_combine(c, u, 1.0).values[0], 0.3);
  EXPECT_DOUBLE_EQ(cfg_combine(c, u, 0.0).values[0], 0.1);
  EXPECT_NEAR(cfg_combine(c, u, 2.0).values[0], 0.5, 1e-15);
}

TEST(Loss, MeanSquare) {
  const Tensor a = random_tensor(1, 2, 2, 9);
  EXPECT_EQ(training_loss(a, a), 0.0);
  Tensor b = a;
  for (double& v : b.values) v += 2;
  EXPECT_DOUBLE_EQ(training_loss(b, a), 4.0);
  for (int i = 0; i < 20; ++i) EXPECT_GE(training_loss(random_tensor(2, 3, 3, i), random_tensor(2, 3, 3, 100 + i)), 0.0);
  EXPECT_THROW(training_loss(a, Tensor(1, 3, 3)), Error);
}

TEST(Embedding, SinCosHalves) {
  const auto e = timestep_embedding(7, 8);
  ASSERT_EQ(e.size(), 8u);
  EXPECT_DOUBLE_EQ(e[0], std::sin(7.0));
  EXPECT_DOUBLE_EQ(e[4], std::cos(7.0));
  EXPECT_NEAR(e[1], std::sin(7.0 * std::pow(10000.0, -0.25)), 1e-15);
}

TEST(Attention, SingleKey) {
  Matrix q(5, 3), k(1, 3), v(1, 2);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  for (double& x : q.values) x = n(rng);
  for (double& x : k.values) x = n(rng);
  v.values = {0.25, -4.0};
  const AttentionResult r = attention(q, k, v);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(r.output(i, 0), 0.25);
    EXPECT_EQ(r.output(i, 1), -4.0);
  }
}

TEST(Attention, IdenticalKeysAverageValues) {
  Matrix q(3, 2), k(2, 2), v(2, 2);
  q.values = {1, 2, -3, 0.5, 0, 9};
  k.values = {0.3, -1, 0.3, -1};
  v.values = {1, 2, 5, -6};
  const AttentionResult r = attention(q, k, v);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(r.output(i, 0), 3.0, 1e-12);
    EXPECT_NEAR(r.output(i, 1), -2.0, 1e-12);
  }
}

TEST(Attention, RowsSumToOne) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0, 3);
  for (int trial = 0; trial < 50; ++trial) {
    Matrix q(7, 4), k(9, 4), v(9, 3);
    for (auto* m : {&q, &k, &v})
      for (double& x : m->values) x = n(rng);
    const AttentionResult r = attention(q, k, v);
    for (std::size_t i = 0; i < 7; ++i) {
      double s = 0;
      for (std::size_t j = 0; j < 9; ++j) s += r.weights(i, j);
      EXPECT_NEAR(s, 1.0, 1e-9);
    }
  }
}

TEST(Attention, BackwardMatchesFiniteDifferences) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n;
  Matrix q(4, 3), k(5, 3), v(5, 2), w(4, 2);
  for (auto* m : {&q, &k, &v, &w})
    for (double& x : m->values) x = n(rng);
  const auto loss = [&] {
    const auto r = attention(q, k, v);
    double s = 0;
    for (std::size_t i = 0; i < w.values.size(); ++i) s += r.output.values[i] * w.values[i];
    return s;
  };
  const auto r = attention(q, k, v);
  const AttentionGrads g = attention_backward(q, k, v, r.weights, w);
  EXPECT_LE(worst_relative(q.values, g.dq.values, loss), 1e-4);
  EXPECT_LE(worst_relative(k.values, g.dk.values, loss), 1e-4);
  EXPECT_LE(worst_relative(v.values, g.dv.values, loss), 1e-4);
}

TEST(ZeroInit, EncoderIsIdentity) {
  const ConditionalModel model({}, 17);
  const Tensor ei = random_tensor(1, 6, 5, 3, -1, 1);
  const ConditionFeatures f = encode_condition(ei, model);
  EXPECT_EQ(f.f_enc, ei);
  EXPECT_EQ(f.f_enc_hat.channels, model.config().hidden_channels);
  const ConditionFeatures again = encode_condition(ei, model);
  EXPECT_EQ(again.f_enc_hat, f.f_enc_hat);
}

TEST(ZeroInit, FusionIsIdentity) {
  const ConditionalModel model({}, 5);
  const Tensor ei = random_tensor(1, 4, 4, 6);
  const Tensor z = random_tensor(1, 4, 4, 7);
  const ConditionFeatures f = encode_condition(ei, model);
  for (int t : {1, 25, 50}) EXPECT_EQ(fuse(z, t, f.f_enc_hat, model), z);
}

TEST(ZeroInit, ZeroConvIsLinearInPerturbation) {
  const Tensor ei = random_tensor(1, 5, 5, 10);
  std::vector<double> norms;
  for (double delta : {1e-3, 2e-3, 4e-3}) {
    ConditionalModel model({}, 3);
    model.params().find("enc.zero_conv.weight")->value[4] = delta;
    const ConditionFeatures f = encode_condition(ei, model);
    double s = 0;
    for (std::size_t i = 0; i < ei.size(); ++i) s += std::pow(f.f_enc.values[i] - ei.values[i], 2);
    norms.push_back(std::sqrt(s));
  }
  EXPECT_GT(norms[0], 0);
  EXPECT_NEAR(norms[1] / norms[0], 2.0, 1e-9);
  EXPECT_NEAR(norms[2] / norms[0], 4.0, 1e-9);
}

TEST(ZeroInit, Flags) {
  const ConditionalModel model;
  int zero = 0;
  for (const auto& p : model.params().all()) {
    if (!p->zero_init) continue;
    ++zero;
    for (double v : p->value) EXPECT_EQ(v, 0.0) << p->name;
  }
  EXPECT_EQ(zero, 4);  // weight and bias of both zero convolutions
}

TEST(Gradients, EncoderMatchesFiniteDifferences) {
  ConditionalModel model({}, 1);
  model.params().randomize(21, 0.4);
  Tensor cond = random_tensor(1, 4, 4, 2);
  const Tensor w1 = random_tensor(1, 4, 4, 3);
  const Tensor w2 = random_tensor(model.config().hidden_channels, 4, 4, 4);
  const auto loss = [&] {
    const ConditionFeatures f = model.encoder().forward(cond);
    return dot(f.f_enc, w1) + dot(f.f_enc_hat, w2);
  };
  model.params().zero_grad();
  ConditionEncoder::Cache cache;
  model.encoder().forward(cond, &cache);
  const Tensor d_cond = model.encoder().backward(cache, w1, &w2);
  for (const auto& p : model.params().all()) {
    if (p->name.rfind("enc.", 0) != 0) continue;
    EXPECT_LE(worst_relative(p->value, p->grad, loss), 1e-4) << p->name;
  }
  EXPECT_LE(worst_relative(cond.values, d_cond.values, loss), 1e-4);
}

TEST(Gradients, FusionMatchesFiniteDifferences) {
  ModelConfig cfg;
  cfg.transformer_depth = 2;
  ConditionalModel model(cfg, 1);
  model.params().randomize(33, 0.4);
  Tensor z = random_tensor(1, 4, 4, 5);
  Tensor f_hat = random_tensor(cfg.hidden_channels, 4, 4, 6);
  const Tensor w = random_tensor(1, 4, 4, 7);
  const int t = 17;
  const auto loss = [&] { return dot(model.fusion().forward(z, t, f_hat), w); };
  model.params().zero_grad();
  FusionModule::Cache cache;
  model.fusion().forward(z, t, f_hat, &cache);
  const FusionModule::Grads g = model.fusion().backward(cache, w);
  for (const auto& p : model.params().all()) {
    if (p->name.rfind("fuse.", 0) != 0) continue;
    EXPECT_LE(worst_relative(p->value, p->grad, loss), 1e-4) << p->name;
  }
  EXPECT_LE(worst_relative(z.values, g.d_z.values, loss), 1e-4);
  EXPECT_LE(worst_relative(f_hat.values, g.d_f_enc_hat.values, loss), 1e-4);
}

TEST(Gradients, PredictorMatchesFiniteDifferences) {
  ConditionalModel model({}, 1);
  model.params().randomize(5, 0.4);
  Tensor fused = random_tensor(1, 4, 4, 8), f_enc = random_tensor(1, 4, 4, 9);
  const Tensor w = random_tensor(1, 4, 4, 10);
  const auto loss = [&] { return dot(model.predictor().forward(fused, 9, f_enc), w); };
  model.params().zero_grad();
  NoisePredictor::Cache cache;
  model.predictor().forward(fused, 9, f_enc, &cache);
  const NoisePredictor::Grads g = model.predictor().backward(cache, w);
  for (const auto& p : model.params().all()) {
    if (p->name.rfind("den.", 0) != 0) continue;
    EXPECT_LE(worst_relative(p->value, p->grad, loss), 1e-4) << p->name;
  }
  EXPECT_LE(worst_relative(fused.values, g.d_fused.values, loss), 1e-4);
  EXPECT_LE(worst_relative(f_enc.values, g.d_f_enc.values, loss), 1e-4);
}

TEST(Gradients, FullLossMatchesFiniteDifferences) {
  ConditionalModel model({}, 2);
  model.params().randomize(77, 0.3);
  const NoiseSchedule sched = make_schedule(ScheduleOptions{});
  const Tensor clean = random_tensor(1, 4, 4, 11), cond = random_tensor(1, 4, 4, 12);
  const LossSample draw{23, random_tensor(1, 4, 4, 13)};
  const auto loss = [&] { return noise_prediction_loss(model, clean, cond, sched, draw, false); };
  model.params().zero_grad();
  noise_prediction_loss(model, clean, cond, sched, draw, true);
  for (const auto& p : model.params().all())
    EXPECT_LE(worst_relative(p->value, p->grad, loss, 16), 1e-4) << p->name;
}

TEST(Checkpoint, RoundTrip) {
  ModelConfig cfg;
  cfg.hidden_channels = 6;
  ConditionalModel model(cfg, 99);
  model.params().randomize(4, 0.5);
  const auto bytes = encode_checkpoint(model);
  const ConditionalModel back = decode_checkpoint(bytes);
  EXPECT_EQ(back.config(), cfg);
  EXPECT_EQ(back.params().init_seed(), 99u);
  for (const auto& p : model.params().all()) EXPECT_EQ(back.params().find(p->name)->value, p->value);
  EXPECT_EQ(encode_checkpoint(back), bytes);
}

TEST(Checkpoint, RejectsCorruption) {
  const auto bytes = encode_checkpoint(ConditionalModel{});
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(decode_checkpoint(bad), Error);
  EXPECT_THROW(decode_checkpoint(std::span(bytes).first(bytes.size() - 1)), Error);
  auto extra = bytes;
  extra.push_back(1);
  EXPECT_THROW(decode_checkpoint(extra), Error);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 300; ++i) {
    auto b = bytes;
    b.resize(rng() % b.size());
    EXPECT_THROW(decode_checkpoint(b), Error);
  }
}

TEST(Sampler, OracleReproducesTarget) {
  const NoiseSchedule sched = make_schedule(ScheduleOptions{});
  const ConditionalModel model;
  const GrayImage target = oracle::synthetic_scene(8, 8, 5);
  SampleOptions opts;
  opts.latent_width = opts.latent_height = 8;
  opts.seed = 3;
  const OracleDenoiser oracle_denoiser(image_to_latent(target, 1, 8, 8), sched);
  const SampleResult r = sample(oracle_denoiser, model, target, sched, opts);
  ASSERT_EQ(r.image.width, 8u);
  for (std::size_t i = 0; i < target.size(); ++i)
    EXPECT_LE(std::abs(int(r.image.values[i]) - int(target.values[i])), 1);
  EXPECT_EQ(r.step_norms.size(), 50u);
}

TEST(Sampler, ScaleOneEqualsConditionalOnly) {
  const NoiseSchedule sched = make_schedule(ScheduleOptions{});
  ConditionalModel model({}, 4);
  model.params().randomize(2, 0.3);
  const GrayImage cond = oracle::synthetic_scene(8, 8, 9);
  const NetworkDenoiser net(model);
  SampleOptions a;
  a.latent_width = a.latent_height = 8;
  a.cfg_scale = 1.0;
  SampleOptions b = a;
  b.guidance = false;
  const SampleResult ra = sample(net, model, cond, sched, a);
  const SampleResult rb = sample(net, model, cond, sched, b);
  for (std::size_t i = 0; i < ra.latent.size(); ++i)
    EXPECT_NEAR(ra.latent.values[i], rb.latent.values[i], 1e-12);
}

TEST(Sampler, Deterministic) {
  const NoiseSchedule sched = make_schedule(ScheduleOptions{});
  ConditionalModel model({}, 4);
  model.params().randomize(2, 0.3);
  const GrayImage cond = oracle::synthetic_scene(16, 12, 1);
  EtfiImage e;
  e.image = cond;
  const NetworkDenoiser net(model);
  EXPECT_EQ(sample(net, model, e, sched, 2.0, 7), sample(net, model, e, sched, 2.0, 7));
  EXPECT_EQ(sample(net, model, e, sched, 2.0, 7).width, 16u);
}

TEST(Training, ReducesLossOnToyPair) {
  const NoiseSchedule sched = make_schedule(ScheduleOptions{});
  ConditionalModel model({}, 1);
  const GrayImage gt = oracle::synthetic_scene(4, 4, 3);
  const Tensor clean = image_to_latent(gt, 1, 4, 4);
  const Tensor cond = image_to_latent(gt, 1, 4, 4);
  TrainOptions opts;
  opts.iterations = 200;
  const TrainReport r = train_pair(model, cond, clean, sched, opts);
  EXPECT_LE(r.final_loss, 0.5 * r.initial_loss) << r.initial_loss << " -> " << r.final_loss;
}
