#include "spikeline/ddpm/blocks.hpp"

#include <cmath>
#include <string>

#include "spikeline/ddpm/schedule.hpp"
#include "spikeline/error.hpp"

namespace spikeline::ddpm {

namespace {

Matrix row_matrix(const std::vector<double>& v) {
  Matrix m(1, v.size());
  m.values = v;
  return m;
}

void add_rows(Matrix& dst, const Matrix& row) {
  for (std::size_t r = 0; r < dst.rows; ++r) {
    double* d = dst.row(r);
    for (std::size_t c = 0; c < dst.cols; ++c) d[c] += row.values[c];
  }
}

Matrix column_sums(const Matrix& m) {
  Matrix s(1, m.cols);
  for (std::size_t r = 0; r < m.rows; ++r) {
    const double* src = m.row(r);
    for (std::size_t c = 0; c < m.cols; ++c) s.values[c] += src[c];
  }
  return s;
}

Matrix sum(const Matrix& a, const Matrix& b) {
  Matrix out = a;
  add_in_place(out.values, b.values);
  return out;
}

Tensor sum(const Tensor& a, const Tensor& b) {
  Tensor out = a;
  add_in_place(out.values, b.values);
  return out;
}

template <typename T>
T apply_silu(const T& x) {
  T out = x;
  for (double& v : out.values) v = silu(v);
  return out;
}

template <typename T>
T silu_backward(const T& pre, const T& d_act) {
  T out = d_act;
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] *= silu_grad(pre.values[i]);
  return out;
}

}  // namespace

void ModelConfig::validate() const {
  require(latent_channels >= 1 && hidden_channels >= 1 && attention_dim >= 1 &&
              transformer_dim >= 1 && ffn_dim >= 1 && denoiser_hidden >= 1,
          ErrorCode::kInvalidArgument, "model widths must be >= 1");
  require(time_dim >= 2 && time_dim % 2 == 0, ErrorCode::kInvalidArgument,
          "time_dim must be even and >= 2");
}

std::vector<double> ModelConfig::to_record() const {
  return {double(latent_channels), double(hidden_channels), double(attention_dim),
          double(time_dim),        double(res_blocks),      double(transformer_dim),
          double(transformer_depth), double(ffn_dim),       double(denoiser_hidden)};
}

ModelConfig ModelConfig::from_record(const std::vector<double>& v) {
  require(v.size() == 9, ErrorCode::kMalformedHeader, "model config record has wrong size");
  for (double x : v) {
    require(x >= 0.0 && x <= 4096.0 && x == std::floor(x), ErrorCode::kMalformedHeader,
            "model config record holds an invalid value");
  }
  auto u = [&](std::size_t i) { return static_cast<std::uint32_t>(v[i]); };
  ModelConfig c{u(0), u(1), u(2), u(3), u(4), u(5), u(6), u(7), u(8)};
  c.validate();
  return c;
}

ConditionFeatures ConditionFeatures::zeros_like() const {
  return {Tensor(f_enc.channels, f_enc.height, f_enc.width),
          Tensor(f_enc_hat.channels, f_enc_hat.height, f_enc_hat.width)};
}

// ---------------------------------------------------------------------------
// Condition encoder

ConditionEncoder::ConditionEncoder(BlockParams& params, const ModelConfig& config)
    : config_(config) {
  conv_in_ = Conv2d(params, "enc.conv_in", config.latent_channels, config.hidden_channels, false);
  for (std::uint32_t r = 0; r < config.res_blocks; ++r) {
    const std::string base = "enc.res" + std::to_string(r);
    res_a_.emplace_back(params, base + ".conv_a", config.hidden_channels, config.hidden_channels, false);
    res_b_.emplace_back(params, base + ".conv_b", config.hidden_channels, config.hidden_channels, false);
  }
  zero_conv_ = Conv2d(params, "enc.zero_conv", config.hidden_channels, config.latent_channels, true);
}

ConditionFeatures ConditionEncoder::forward(const Tensor& condition, Cache* cache) const {
  require(condition.channels == config_.latent_channels, ErrorCode::kShapeMismatch,
          "condition channels do not match the latent channels");
  Tensor h = conv_in_.forward(condition);
  if (cache) {
    cache->input = condition;
    cache->stage = {h};
    cache->pre_act.clear();
    cache->act.clear();
  }
  for (std::size_t r = 0; r < res_a_.size(); ++r) {
    Tensor a = res_a_[r].forward(h);
    Tensor s = apply_silu(a);
    add_in_place(h.values, res_b_[r].forward(s).values);
    if (cache) {
      cache->pre_act.push_back(std::move(a));
      cache->act.push_back(std::move(s));
      cache->stage.push_back(h);
    }
  }
  ConditionFeatures out;
  out.f_enc = sum(zero_conv_.forward(h), condition);
  out.f_enc_hat = std::move(h);
  return out;
}

Tensor ConditionEncoder::backward(const Cache& cache, const Tensor& d_f_enc,
                                  const Tensor* d_f_enc_hat) const {
  Tensor dh = zero_conv_.backward(cache.stage.back(), d_f_enc);
  if (d_f_enc_hat) add_in_place(dh.values, d_f_enc_hat->values);
  for (std::size_t r = res_a_.size(); r-- > 0;) {
    const Tensor d_act = res_b_[r].backward(cache.act[r], dh);
    const Tensor d_pre = silu_backward(cache.pre_act[r], d_act);
    add_in_place(dh.values, res_a_[r].backward(cache.stage[r], d_pre).values);
  }
  Tensor dx = conv_in_.backward(cache.input, dh);
  add_in_place(dx.values, d_f_enc.values);
  return dx;
}

// ---------------------------------------------------------------------------
// Fusion module

FusionModule::FusionModule(BlockParams& params, const ModelConfig& config)
    : config_(config) {
  const auto zc = config.latent_channels;
  const auto d = config.attention_dim;
  q_proj_ = Linear(params, "fuse.q_proj", zc, d);
  time_proj_ = Linear(params, "fuse.time_proj", config.time_dim, d);
  k_proj_ = Linear(params, "fuse.k_proj", config.hidden_channels, d);
  v_proj_ = Linear(params, "fuse.v_proj", config.hidden_channels, d);
  o_proj_ = Linear(params, "fuse.o_proj", d, zc);
  linear_ = Linear(params, "fuse.linear", zc, zc);
  embed_ = Linear(params, "fuse.embed", zc, config.transformer_dim);
  const auto m = config.transformer_dim;
  for (std::uint32_t b = 0; b < config.transformer_depth; ++b) {
    const std::string base = "fuse.trans" + std::to_string(b);
    blocks_.push_back({Linear(params, base + ".wq", m, m), Linear(params, base + ".wk", m, m),
                       Linear(params, base + ".wv", m, m), Linear(params, base + ".wo", m, m),
                       Linear(params, base + ".ff1", m, config.ffn_dim),
                       Linear(params, base + ".ff2", config.ffn_dim, m)});
  }
  zero_conv_ = Conv2d(params, "fuse.zero_conv", m, zc, true);
}

Tensor FusionModule::eca(const std::vector<double>& t_emb, const Tensor& f_enc_hat,
                         const Tensor& z_t, Cache* cache) const {
  require(z_t.channels == config_.latent_channels, ErrorCode::kShapeMismatch,
          "z_t channels do not match the latent channels");
  require(f_enc_hat.channels == config_.hidden_channels && f_enc_hat.height == z_t.height &&
              f_enc_hat.width == z_t.width,
          ErrorCode::kShapeMismatch, "condition features do not match the latent size");
  require(t_emb.size() == config_.time_dim, ErrorCode::kShapeMismatch,
          "time embedding width mismatch");
  Matrix z = to_tokens(z_t);
  Matrix f = to_tokens(f_enc_hat);
  Matrix time_in = row_matrix(t_emb);
  Matrix time_row = time_proj_.forward(time_in);
  Matrix q = q_proj_.forward(z);
  add_rows(q, time_row);
  Matrix k = k_proj_.forward(f);
  Matrix v = v_proj_.forward(f);
  AttentionResult attn = attention(q, k, v);
  Matrix out = o_proj_.forward(attn.output);
  Tensor result = from_tokens(out, z_t.height, z_t.width);
  if (cache) {
    cache->height = z_t.height;
    cache->width = z_t.width;
    cache->t_emb = t_emb;
    cache->z_tokens = std::move(z);
    cache->feature_tokens = std::move(f);
    cache->time_row = std::move(time_row);
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->attn = std::move(attn);
    cache->eca = std::move(out);
  }
  return result;
}

Matrix FusionModule::transformer_forward(const Matrix& x_in,
                                         std::vector<BlockCache>* caches) const {
  Matrix x = x_in;
  if (caches) caches->clear();
  for (const TransformerBlock& b : blocks_) {
    BlockCache c;
    c.input = x;
    c.q = b.wq.forward(x);
    c.k = b.wk.forward(x);
    c.v = b.wv.forward(x);
    c.attn = attention(c.q, c.k, c.v);
    add_in_place(x.values, b.wo.forward(c.attn.output).values);
    c.after_attn = x;
    c.ffn_pre = b.ff1.forward(x);
    c.ffn_act = apply_silu(c.ffn_pre);
    add_in_place(x.values, b.ff2.forward(c.ffn_act).values);
    if (caches) caches->push_back(std::move(c));
  }
  return x;
}

Tensor FusionModule::forward(const Tensor& z_t, int t, const Tensor& f_enc_hat,
                             Cache* cache) const {
  Cache local;
  Cache& c = cache ? *cache : local;
  eca(timestep_embedding(t, config_.time_dim), f_enc_hat, z_t, &c);
  c.linear_in = sum(c.eca, c.z_tokens);
  c.fused_tokens = sum(linear_.forward(c.linear_in), c.eca);
  c.trans_out = transformer_forward(embed_.forward(c.fused_tokens), &c.blocks);
  c.trans_tensor = from_tokens(c.trans_out, z_t.height, z_t.width);
  return sum(zero_conv_.forward(c.trans_tensor), z_t);
}

FusionModule::Grads FusionModule::backward(const Cache& c, const Tensor& d_fused) const {
  Matrix dx = to_tokens(zero_conv_.backward(c.trans_tensor, d_fused));
  for (std::size_t i = blocks_.size(); i-- > 0;) {
    const TransformerBlock& b = blocks_[i];
    const BlockCache& bc = c.blocks[i];
    const Matrix d_act = b.ff2.backward(bc.ffn_act, dx);
    const Matrix d_pre = silu_backward(bc.ffn_pre, d_act);
    add_in_place(dx.values, b.ff1.backward(bc.after_attn, d_pre).values);
    const Matrix d_attn_out = b.wo.backward(bc.attn.output, dx);
    const AttentionGrads g = attention_backward(bc.q, bc.k, bc.v, bc.attn.weights, d_attn_out);
    add_in_place(dx.values, b.wq.backward(bc.input, g.dq).values);
    add_in_place(dx.values, b.wk.backward(bc.input, g.dk).values);
    add_in_place(dx.values, b.wv.backward(bc.input, g.dv).values);
  }
  const Matrix d_fused_tokens = embed_.backward(c.fused_tokens, dx);
  const Matrix d_linear_in = linear_.backward(c.linear_in, d_fused_tokens);
  const Matrix d_eca = sum(d_fused_tokens, d_linear_in);
  Matrix d_z = d_linear_in;

  const Matrix d_attn_out = o_proj_.backward(c.attn.output, d_eca);
  const AttentionGrads g = attention_backward(c.q, c.k, c.v, c.attn.weights, d_attn_out);
  add_in_place(d_z.values, q_proj_.backward(c.z_tokens, g.dq).values);
  time_proj_.backward(row_matrix(c.t_emb), column_sums(g.dq));
  Matrix d_f = k_proj_.backward(c.feature_tokens, g.dk);
  add_in_place(d_f.values, v_proj_.backward(c.feature_tokens, g.dv).values);

  Grads out;
  out.d_z = sum(d_fused, from_tokens(d_z, c.height, c.width));
  out.d_f_enc_hat = from_tokens(d_f, c.height, c.width);
  return out;
}

// ---------------------------------------------------------------------------
// Noise predictor

NoisePredictor::NoisePredictor(BlockParams& params, const ModelConfig& config)
    : config_(config) {
  conv_in_ = Conv2d(params, "den.conv_in", 2 * config.latent_channels, config.denoiser_hidden, false);
  time_ = Linear(params, "den.time", config.time_dim, config.denoiser_hidden);
  conv_out_ = Conv2d(params, "den.conv_out", config.denoiser_hidden, config.latent_channels, false);
}

Tensor NoisePredictor::forward(const Tensor& fused, int t, const Tensor& f_enc,
                               Cache* cache) const {
  require_same_shape(fused, f_enc, "noise predictor inputs");
  Tensor input(2 * fused.channels, fused.height, fused.width);
  std::copy(fused.values.begin(), fused.values.end(), input.values.begin());
  std::copy(f_enc.values.begin(), f_enc.values.end(),
            input.values.begin() + static_cast<std::ptrdiff_t>(fused.size()));
  std::vector<double> t_emb = timestep_embedding(t, config_.time_dim);
  const Matrix time_row = time_.forward(row_matrix(t_emb));
  Tensor pre = conv_in_.forward(input);
  for (std::uint32_t ch = 0; ch < pre.channels; ++ch) {
    double* p = pre.values.data() + std::size_t{ch} * pre.plane();
    for (std::size_t n = 0; n < pre.plane(); ++n) p[n] += time_row.values[ch];
  }
  Tensor act = apply_silu(pre);
  Tensor eps = conv_out_.forward(act);
  if (cache) {
    cache->input = std::move(input);
    cache->t_emb = std::move(t_emb);
    cache->pre_act = std::move(pre);
    cache->act = std::move(act);
  }
  return eps;
}

NoisePredictor::Grads NoisePredictor::backward(const Cache& cache, const Tensor& d_eps) const {
  const Tensor d_act = conv_out_.backward(cache.act, d_eps);
  const Tensor d_pre = silu_backward(cache.pre_act, d_act);
  Matrix d_time(1, d_pre.channels);
  for (std::uint32_t ch = 0; ch < d_pre.channels; ++ch) {
    const double* p = d_pre.values.data() + std::size_t{ch} * d_pre.plane();
    for (std::size_t n = 0; n < d_pre.plane(); ++n) d_time.values[ch] += p[n];
  }
  time_.backward(row_matrix(cache.t_emb), d_time);
  const Tensor d_in = conv_in_.backward(cache.input, d_pre);
  const std::uint32_t zc = d_in.channels / 2;
  Grads g{Tensor(zc, d_in.height, d_in.width), Tensor(zc, d_in.height, d_in.width)};
  const auto half = static_cast<std::ptrdiff_t>(g.d_fused.size());
  std::copy(d_in.values.begin(), d_in.values.begin() + half, g.d_fused.values.begin());
  std::copy(d_in.values.begin() + half, d_in.values.end(), g.d_f_enc.values.begin());
  return g;
}

// ---------------------------------------------------------------------------

ConditionalModel::ConditionalModel(const ModelConfig& config, std::uint64_t init_seed)
    : config_((config.validate(), config)),
      params_(init_seed),
      encoder_(params_, config_),
      fusion_(params_, config_),
      predictor_(params_, config_) {}

ConditionFeatures encode_condition(const Tensor& condition, const ConditionalModel& model) {
  return model.encoder().forward(condition);
}

Tensor eca_attention(const std::vector<double>& t_emb, const Tensor& f_enc_hat,
                     const Tensor& z_t, const ConditionalModel& model) {
  return model.fusion().eca(t_emb, f_enc_hat, z_t);
}

Tensor fuse(const Tensor& z_t, int t, const Tensor& f_enc_hat, const ConditionalModel& model) {
  return model.fusion().forward(z_t, t, f_enc_hat);
}

}  // namespace spikeline::ddpm
