#pragma once

#include <cstdint>
#include <vector>

#include "spikeline/ddpm/layers.hpp"
#include "spikeline/ddpm/params.hpp"
#include "spikeline/ddpm/tensor.hpp"

namespace spikeline::ddpm {

struct ModelConfig {
  std::uint32_t latent_channels = 1;
  std::uint32_t hidden_channels = 8;   // encoder feature width (F_enc hat)
  std::uint32_t attention_dim = 8;     // ECA query/key/value width
  std::uint32_t time_dim = 16;         // sinusoidal t_emb width
  std::uint32_t res_blocks = 1;
  std::uint32_t transformer_dim = 8;
  std::uint32_t transformer_depth = 1;
  std::uint32_t ffn_dim = 16;
  std::uint32_t denoiser_hidden = 16;

  void validate() const;
  std::vector<double> to_record() const;
  static ModelConfig from_record(const std::vector<double>& values);
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct ConditionFeatures {
  Tensor f_enc;      // latent-shaped, fed to the denoiser
  Tensor f_enc_hat;  // pre-projection features, fed to the fusion module

  // Unconditional branch for guidance: both features zeroed.
  ConditionFeatures zeros_like() const;
};

// F_hat = Res(Conv(c)); F_enc = ZeroConv(F_hat) + c.
class ConditionEncoder {
 public:
  struct Cache {
    Tensor input;
    std::vector<Tensor> stage;   // input of each residual block, then the output
    std::vector<Tensor> pre_act; // conv_a output per residual block
    std::vector<Tensor> act;     // silu(pre_act)
  };

  ConditionEncoder() = default;
  ConditionEncoder(BlockParams& params, const ModelConfig& config);

  ConditionFeatures forward(const Tensor& condition, Cache* cache = nullptr) const;
  // Returns the gradient with respect to the condition input.
  Tensor backward(const Cache& cache, const Tensor& d_f_enc,
                  const Tensor* d_f_enc_hat) const;

 private:
  ModelConfig config_;
  Conv2d conv_in_;
  std::vector<Conv2d> res_a_;
  std::vector<Conv2d> res_b_;
  Conv2d zero_conv_;
};

// ETFI-guided cross-attention followed by transformer blocks:
//   F_ECA_hat = ECA(t_emb, F_enc_hat, z_t)
//   F_ECA     = Linear(F_ECA_hat + z_t) + F_ECA_hat
//   F_fuse    = ZeroConv(Trans(F_ECA)) + z_t
class FusionModule {
 public:
  struct BlockCache {
    Matrix input;
    Matrix q, k, v;
    AttentionResult attn;
    Matrix after_attn;
    Matrix ffn_pre;
    Matrix ffn_act;
  };

  struct Cache {
    std::uint32_t height = 0;
    std::uint32_t width = 0;
    std::vector<double> t_emb;
    Matrix z_tokens;
    Matrix feature_tokens;
    Matrix time_row;
    Matrix q, k, v;
    AttentionResult attn;
    Matrix eca;          // F_ECA_hat
    Matrix linear_in;    // F_ECA_hat + z_t
    Matrix fused_tokens; // F_ECA
    std::vector<BlockCache> blocks;
    Matrix trans_out;
    Tensor trans_tensor;
  };

  struct Grads {
    Tensor d_z;
    Tensor d_f_enc_hat;
  };

  FusionModule() = default;
  FusionModule(BlockParams& params, const ModelConfig& config);

  // Queries come from z_t and t_emb; keys and values from F_enc_hat.
  Tensor eca(const std::vector<double>& t_emb, const Tensor& f_enc_hat,
             const Tensor& z_t, Cache* cache = nullptr) const;

  Tensor forward(const Tensor& z_t, int t, const Tensor& f_enc_hat,
                 Cache* cache = nullptr) const;
  Grads backward(const Cache& cache, const Tensor& d_fused) const;

  const ModelConfig& config() const { return config_; }

 private:
  Matrix transformer_forward(const Matrix& x, std::vector<BlockCache>* caches) const;

  struct TransformerBlock {
    Linear wq, wk, wv, wo, ff1, ff2;
  };

  ModelConfig config_;
  Linear q_proj_, time_proj_, k_proj_, v_proj_, o_proj_, linear_;
  Linear embed_;
  std::vector<TransformerBlock> blocks_;
  Conv2d zero_conv_;
};

// Small built-in noise predictor eps_theta(F_fuse, t, F_enc):
//   h = Conv([F_fuse, F_enc]) + TimeLinear(t_emb); eps = Conv(silu(h)).
class NoisePredictor {
 public:
  struct Cache {
    Tensor input;
    std::vector<double> t_emb;
    Tensor pre_act;
    Tensor act;
  };

  struct Grads {
    Tensor d_fused;
    Tensor d_f_enc;
  };

  NoisePredictor() = default;
  NoisePredictor(BlockParams& params, const ModelConfig& config);

  Tensor forward(const Tensor& fused, int t, const Tensor& f_enc,
                 Cache* cache = nullptr) const;
  Grads backward(const Cache& cache, const Tensor& d_eps) const;

 private:
  ModelConfig config_;
  Conv2d conv_in_;
  Linear time_;
  Conv2d conv_out_;
};

// All trainable blocks behind one parameter store. Freshly constructed
// models have their zero convolutions at exactly zero.
class ConditionalModel {
 public:
  explicit ConditionalModel(const ModelConfig& config = {}, std::uint64_t init_seed = 0);
  ConditionalModel(ConditionalModel&&) noexcept = default;

  const ModelConfig& config() const { return config_; }
  BlockParams& params() { return params_; }
  const BlockParams& params() const { return params_; }
  const ConditionEncoder& encoder() const { return encoder_; }
  const FusionModule& fusion() const { return fusion_; }
  const NoisePredictor& predictor() const { return predictor_; }

 private:
  ModelConfig config_;
  BlockParams params_;
  ConditionEncoder encoder_;
  FusionModule fusion_;
  NoisePredictor predictor_;
};

// Free-function surface over the blocks.
ConditionFeatures encode_condition(const Tensor& condition, const ConditionalModel& model);
Tensor eca_attention(const std::vector<double>& t_emb, const Tensor& f_enc_hat,
                     const Tensor& z_t, const ConditionalModel& model);
Tensor fuse(const Tensor& z_t, int t, const Tensor& f_enc_hat, const ConditionalModel& model);

}  // namespace spikeline::ddpm
