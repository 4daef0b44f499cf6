#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <torch/torch.h>

#include "play/config.hpp"
#include "play/layout.hpp"
#include "play/nn.hpp"
#include "play/tokenize.hpp"
#include "play/vocabulary.hpp"

namespace play {

// Per-element continuous latents, one row per real element.
struct LatentSeq {
  torch::Tensor z;  // n_real x d, float32
  bool scale_applied = false;

  int n_real() const { return z.defined() ? static_cast<int>(z.size(0)) : 0; }
  int dim() const { return z.defined() ? static_cast<int>(z.size(1)) : 0; }
};

// A padded batch of variable-length layouts. Only real rows are present;
// `mask` marks which of the L = max(n_real) positions hold an element.
struct LayoutBatch {
  torch::Tensor indices;  // B x L x 5, int64: class, x_min, y_min, x_max, y_max
  torch::Tensor mask;     // B x L, bool
};
LayoutBatch make_batch(std::span<const TokenIndices> layouts);
LayoutBatch make_batch(std::span<const Layout> layouts, const ClassVocabulary& vocab);

struct VaeConfig {
  int num_classes = 0;
  int latent_dim = 8;
  int width = 256;
  int layers = 4;
  int heads = 8;
  int ff_mult = 4;
  int slots = kMaxElements;

  static VaeConfig from(const TrainConfig& config, int num_classes);
  TokenSegments segments() const { return {num_classes}; }
};

struct Posterior {
  torch::Tensor mean;    // B x L x d
  torch::Tensor logvar;  // B x L x d
};

// Encoder: element embedding, transformer blocks without positional
// information, mean / log-variance heads. Decoder: learned slot queries with a
// projection of z added before every block, one linear head per token column.
class VaeImpl : public torch::nn::Module {
 public:
  explicit VaeImpl(const VaeConfig& config);

  Posterior encode(const LayoutBatch& batch);
  // Same as encode() but from dense one-hot rows (B x L x D).
  Posterior encode_onehot(const torch::Tensor& tokens, const torch::Tensor& mask);
  torch::Tensor decode(const torch::Tensor& z, const torch::Tensor& mask);  // -> B x L x D logits

  const VaeConfig& config() const { return config_; }

 private:
  Posterior encode_embedded(torch::Tensor h, const torch::Tensor& mask);

  VaeConfig config_;
  torch::nn::Linear embed_{nullptr};
  torch::nn::ModuleList encoder_;
  torch::nn::LayerNorm enc_norm_{nullptr};
  torch::nn::Linear mean_head_{nullptr}, logvar_head_{nullptr};
  torch::Tensor queries_;
  torch::nn::ModuleList z_proj_;
  torch::nn::ModuleList decoder_;
  torch::nn::LayerNorm dec_norm_{nullptr};
  torch::nn::Linear out_{nullptr};
};
TORCH_MODULE(Vae);

// Seeds parameter initialization.
Vae make_vae(const VaeConfig& config, std::uint64_t seed);

torch::Generator make_generator(std::uint64_t seed);

// Single-layout encode. With sample_posterior the latent is mean + sigma * eps
// with eps drawn from `seed`; otherwise the posterior mean.
LatentSeq encode(const TokenizedLayout& tok, Vae& vae, bool sample_posterior, std::uint64_t seed);

struct Decoded {
  TokenMatrix logits;  // n x D
  Layout layout;       // argmax, first n slots forced non-PAD
};
// `z` must be unscaled.
Decoded decode(const LatentSeq& z, Vae& vae, const ClassVocabulary& vocab);

// Argmax index per segment, B x L x 5. PAD is excluded from the class argmax.
torch::Tensor decode_indices(const torch::Tensor& logits, const TokenSegments& segments);

struct VaeLoss {
  torch::Tensor total, recon, kl;
};
// recon: mean over real rows of the mean cross-entropy of the five segments.
// kl: mean over real rows of KL(q || N(0, I)) summed over latent dimensions.
VaeLoss vae_loss(Vae& vae, const LayoutBatch& batch, double beta, const torch::Generator& noise);

// Closed-form KL for diagonal Gaussians against N(0, I), per row (sum over d).
torch::Tensor gaussian_kl(const torch::Tensor& mean, const torch::Tensor& logvar);

struct TrainRecord {
  int step = 0;
  double loss = 0;
  double recon = 0;
  double kl = 0;
  double accuracy = 0;  // full-element accuracy on the batch (posterior mean)
  double learning_rate = 0;
};
using TrainCallback = std::function<void(const TrainRecord&)>;

struct TrainLog {
  std::vector<TrainRecord> records;
};

// Linear warmup to the configured rate, then constant.
double warmup_learning_rate(const TrainConfig& config, int step);

TrainLog train_vae(Vae& vae, std::span<const Layout> dataset, const ClassVocabulary& vocab,
                   const TrainConfig& config, const TrainCallback& callback = {});

// Fraction of elements whose five decoded fields all match, encoding with the
// posterior mean.
double reconstruction_accuracy(Vae& vae, std::span<const Layout> layouts, const ClassVocabulary& vocab,
                               int batch_size = 128);

// Deterministic epoch-wise shuffled batch order shared by the trainers.
class BatchOrder {
 public:
  BatchOrder(std::size_t size, std::uint64_t seed);
  std::vector<std::size_t> next(std::size_t count);

 private:
  void reshuffle();
  std::size_t size_;
  std::uint64_t seed_;
  std::uint64_t epoch_ = 0;
  std::size_t cursor_ = 0;
  std::vector<std::size_t> order_;
};

}  // namespace play
