#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <torch/torch.h>

#include "play/config.hpp"
#include "play/guidelines.hpp"
#include "play/nn.hpp"
#include "play/vae.hpp"

namespace play {

// Linear beta schedule. Step t runs 1..T; tables are indexed t - 1.
struct DiffusionSchedule {
  int steps = 0;
  std::vector<double> beta, alpha, alpha_bar;
  double std = 1.0;  // latent scaling constant
  bool std_frozen = false;

  double beta_at(int t) const { return beta.at(t - 1); }
  double alpha_at(int t) const { return alpha.at(t - 1); }
  double alpha_bar_at(int t) const { return t == 0 ? 1.0 : alpha_bar.at(t - 1); }
  // Variance of q(z_{t-1} | z_t, z_0).
  double posterior_variance(int t) const;
};

// Linear betas over [beta_start, beta_end] * 1000 / steps.
DiffusionSchedule make_schedule(int steps, double beta_start = 1e-4, double beta_end = 0.02);

// Population standard deviation over every coordinate of every latent.
double compute_latent_std(std::span<const LatentSeq> latents);

LatentSeq scale_latent(const LatentSeq& z, double std);    // z / std
LatentSeq unscale_latent(const LatentSeq& z, double std);  // z * std

// sqrt(abar_t) z0 + sqrt(1 - abar_t) eps.
torch::Tensor forward_diffuse(const torch::Tensor& z0, int t, const torch::Tensor& eps, const DiffusionSchedule& s);
// Per-example steps: t is a B-vector of int64, z0/eps are B x L x d.
torch::Tensor forward_diffuse(const torch::Tensor& z0, const torch::Tensor& t, const torch::Tensor& eps,
                              const DiffusionSchedule& s);
// One transition of the forward chain: sqrt(alpha_t) z + sqrt(beta_t) eps.
torch::Tensor forward_step(const torch::Tensor& z, int t, const torch::Tensor& eps, const DiffusionSchedule& s);

// Padded guideline tokens. An empty set is a row with every position masked.
struct GuidelineBatch {
  torch::Tensor axis;  // B x M int64
  torch::Tensor pos;   // B x M int64
  torch::Tensor mask;  // B x M bool
};
GuidelineBatch make_guideline_batch(std::span<const GuidelineSet> sets);
constexpr int kGuidelinePositions = kMaxGuidelinesPerAxis + 1;
constexpr int kGuidelineTokenWidth = 2 + kGuidelinePositions;

struct Condition {
  torch::Tensor tokens;  // B x M x cond_width
  torch::Tensor mask;    // B x M
};

struct LdmConfig {
  int latent_dim = 8;
  int width = 256;
  int layers = 6;
  int heads = 8;
  int ff_mult = 4;
  int slots = kMaxElements;
  int cond_width = 256;
  int guide_layers = 2;

  static LdmConfig from(const TrainConfig& config);
};

// Transformer encoder over [axis | position] one-hot guideline tokens; no
// positional information, so it is equivariant to guideline order.
class GuidelineEncoderImpl : public torch::nn::Module {
 public:
  explicit GuidelineEncoderImpl(const LdmConfig& config);
  torch::Tensor forward(const GuidelineBatch& batch);

 private:
  torch::nn::Linear embed_{nullptr};
  torch::nn::ModuleList blocks_;
  torch::nn::LayerNorm norm_{nullptr};
};
TORCH_MODULE(GuidelineEncoder);

// Noise predictor: latent projection plus learned positional embeddings,
// blocks with cross-attention onto the condition and FiLM from the timestep.
class DenoiserImpl : public torch::nn::Module {
 public:
  explicit DenoiserImpl(const LdmConfig& config);

  // When `identity_film` is set every FiLM layer is forced to scale 1, shift 0.
  torch::Tensor forward(const torch::Tensor& z, const torch::Tensor& t, const torch::Tensor& mask,
                        const Condition& cond, bool identity_film = false);

 private:
  LdmConfig config_;
  torch::nn::Linear in_{nullptr};
  torch::Tensor pos_;
  torch::nn::Linear time1_{nullptr}, time2_{nullptr};
  torch::nn::ModuleList film_;
  torch::nn::ModuleList blocks_;
  torch::nn::LayerNorm norm_{nullptr};
  torch::nn::Linear out_{nullptr};
};
TORCH_MODULE(Denoiser);

class LatentDiffusionImpl : public torch::nn::Module {
 public:
  explicit LatentDiffusionImpl(const LdmConfig& config);

  Condition encode_guidelines(const GuidelineBatch& batch);
  // Learned null condition: one unmasked token per example.
  Condition null_condition(int64_t batch);
  // Encoded guidelines, with rows where `drop` is set (or the set is empty)
  // replaced by the null condition. `drop` may be undefined.
  Condition condition(const GuidelineBatch& batch, const torch::Tensor& drop);

  torch::Tensor predict(const torch::Tensor& z, const torch::Tensor& t, const torch::Tensor& mask,
                        const Condition& cond) {
    return denoiser_->forward(z, t, mask, cond);
  }

  const LdmConfig& config() const { return config_; }
  Denoiser& denoiser() { return denoiser_; }
  GuidelineEncoder& guideline_encoder() { return guide_; }
  DiffusionSchedule schedule;

 private:
  LdmConfig config_;
  GuidelineEncoder guide_{nullptr};
  Denoiser denoiser_{nullptr};
  torch::Tensor null_;
};
TORCH_MODULE(LatentDiffusion);

LatentDiffusion make_ldm(const LdmConfig& config, int diffusion_steps, std::uint64_t seed);

// Masked mean over real rows and latent coordinates of ||eps - eps_hat||^2.
// z0 is scaled; rows of `drop` that are set train the null condition.
torch::Tensor ldm_loss(LatentDiffusion& ldm, const torch::Tensor& z0, const torch::Tensor& mask,
                       const GuidelineBatch& guides, const torch::Tensor& t, const torch::Tensor& eps,
                       const torch::Tensor& drop);

// Trains the denoiser and guideline encoder on posterior samples of a frozen
// VAE. Fixes ldm->schedule.std from the first batch.
TrainLog train_ldm(LatentDiffusion& ldm, Vae& vae, std::span<const Layout> dataset, const ClassVocabulary& vocab,
                   const TrainConfig& config, const TrainCallback& callback = {});

}  // namespace play
