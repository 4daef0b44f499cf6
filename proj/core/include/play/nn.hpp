#pragma once

#include <optional>

#include <torch/torch.h>

namespace play::nn {

// Multi-head attention with a key mask (B×Lk bool, true = may be attended).
// Queries whose keys are all masked produce zeros.
class AttentionImpl : public torch::nn::Module {
 public:
  AttentionImpl(int width, int heads, int context_width);

  torch::Tensor forward(const torch::Tensor& query, const torch::Tensor& context,
                        const torch::Tensor& key_mask = {});

 private:
  int width_, heads_;
  torch::nn::Linear q_{nullptr}, k_{nullptr}, v_{nullptr}, o_{nullptr};
};
TORCH_MODULE(Attention);

// Feature-wise affine modulation, B×W each. Identity is scale = 1, shift = 0.
struct Film {
  torch::Tensor scale;
  torch::Tensor shift;
};

struct BlockOptions {
  int width = 256;
  int heads = 8;
  int ff_mult = 4;
  int context_width = 0;  // 0 disables cross-attention
};

// Pre-LN block: self-attention, optional cross-attention, FiLM on the
// normalized input of the feed-forward.
class TransformerBlockImpl : public torch::nn::Module {
 public:
  explicit TransformerBlockImpl(const BlockOptions& options);

  torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& mask, const torch::Tensor& context = {},
                        const torch::Tensor& context_mask = {}, const Film* film = nullptr);

  bool has_cross_attention() const { return !cross_.is_empty(); }

 private:
  torch::nn::LayerNorm ln_self_{nullptr}, ln_cross_{nullptr}, ln_ff_{nullptr};
  Attention self_{nullptr}, cross_{nullptr};
  torch::nn::Linear ff1_{nullptr}, ff2_{nullptr};
};
TORCH_MODULE(TransformerBlock);

// Sinusoidal embedding of integer timesteps, B -> B×dim.
torch::Tensor timestep_embedding(const torch::Tensor& t, int dim);

// Sum over rows where mask is true, divided by the number of such rows.
torch::Tensor masked_mean(const torch::Tensor& values, const torch::Tensor& mask);

}  // namespace play::nn
