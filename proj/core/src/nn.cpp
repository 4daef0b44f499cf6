#include "play/nn.hpp"

#include <cmath>

namespace play::nn {

AttentionImpl::AttentionImpl(int width, int heads, int context_width) : width_(width), heads_(heads) {
  TORCH_CHECK(width % heads == 0, "width must be divisible by heads");
  q_ = register_module("q", torch::nn::Linear(width, width));
  k_ = register_module("k", torch::nn::Linear(context_width, width));
  v_ = register_module("v", torch::nn::Linear(context_width, width));
  o_ = register_module("o", torch::nn::Linear(width, width));
}

torch::Tensor AttentionImpl::forward(const torch::Tensor& query, const torch::Tensor& context,
                                     const torch::Tensor& key_mask) {
  const auto b = query.size(0), lq = query.size(1), lk = context.size(1);
  const int dh = width_ / heads_;
  auto split = [&](const torch::Tensor& t, int64_t len) { return t.view({b, len, heads_, dh}).transpose(1, 2); };
  auto q = split(q_(query), lq);
  auto k = split(k_(context), lk);
  auto v = split(v_(context), lk);
  auto scores = torch::matmul(q, k.transpose(-2, -1)) / std::sqrt(static_cast<double>(dh));
  if (key_mask.defined()) {
    scores = scores.masked_fill(key_mask.logical_not().view({b, 1, 1, lk}), -1e9);
  }
  auto out = torch::matmul(torch::softmax(scores, -1), v).transpose(1, 2).reshape({b, lq, width_});
  out = o_(out);
  if (key_mask.defined()) {
    auto any = key_mask.any(1).to(out.scalar_type()).view({b, 1, 1});
    out = out * any;
  }
  return out;
}

TransformerBlockImpl::TransformerBlockImpl(const BlockOptions& o) {
  ln_self_ = register_module("ln_self", torch::nn::LayerNorm(torch::nn::LayerNormOptions({o.width})));
  self_ = register_module("self_attn", Attention(o.width, o.heads, o.width));
  if (o.context_width > 0) {
    ln_cross_ = register_module("ln_cross", torch::nn::LayerNorm(torch::nn::LayerNormOptions({o.width})));
    cross_ = register_module("cross_attn", Attention(o.width, o.heads, o.context_width));
  }
  ln_ff_ = register_module("ln_ff", torch::nn::LayerNorm(torch::nn::LayerNormOptions({o.width})));
  ff1_ = register_module("ff1", torch::nn::Linear(o.width, o.width * o.ff_mult));
  ff2_ = register_module("ff2", torch::nn::Linear(o.width * o.ff_mult, o.width));
}

torch::Tensor TransformerBlockImpl::forward(const torch::Tensor& x_in, const torch::Tensor& mask,
                                            const torch::Tensor& context, const torch::Tensor& context_mask,
                                            const Film* film) {
  auto x = x_in;
  auto h = ln_self_(x);
  x = x + self_(h, h, mask);
  if (!cross_.is_empty() && context.defined()) {
    x = x + cross_(ln_cross_(x), context, context_mask);
  }
  h = ln_ff_(x);
  if (film) h = h * film->scale.unsqueeze(1) + film->shift.unsqueeze(1);
  return x + ff2_(torch::gelu(ff1_(h)));
}

torch::Tensor timestep_embedding(const torch::Tensor& t, int dim) {
  const int half = dim / 2;
  auto freqs = torch::exp(-std::log(10000.0) * torch::arange(half, torch::kFloat32) / half);
  auto args = t.to(torch::kFloat32).unsqueeze(1) * freqs.unsqueeze(0);
  auto emb = torch::cat({torch::sin(args), torch::cos(args)}, 1);
  if (dim % 2) emb = torch::cat({emb, torch::zeros({t.size(0), 1})}, 1);
  return emb;
}

torch::Tensor masked_mean(const torch::Tensor& values, const torch::Tensor& mask) {
  auto m = mask.to(values.scalar_type());
  return (values * m).sum() / m.sum().clamp_min(1.0);
}

}  // namespace play::nn
