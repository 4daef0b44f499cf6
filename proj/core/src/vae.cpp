#include "play/vae.hpp"

#include <algorithm>
#include <cmath>

#include <ATen/CPUGeneratorImpl.h>

#include "play/error.hpp"
#include "play/rng.hpp"

namespace play {

LayoutBatch make_batch(std::span<const TokenIndices> layouts) {
  const auto b = static_cast<int64_t>(layouts.size());
  int64_t len = 1;
  for (const auto& t : layouts) len = std::max<int64_t>(len, t.n_real);
  auto idx = torch::zeros({b, len, TokenSegments::kCount}, torch::kInt64);
  auto mask = torch::zeros({b, len}, torch::kBool);
  auto ia = idx.accessor<int64_t, 3>();
  auto ma = mask.accessor<bool, 2>();
  for (int64_t i = 0; i < b; ++i) {
    for (int r = 0; r < layouts[i].n_real; ++r) {
      for (int s = 0; s < TokenSegments::kCount; ++s) ia[i][r][s] = layouts[i].rows[r][s];
      ma[i][r] = true;
    }
  }
  return {idx, mask};
}

LayoutBatch make_batch(std::span<const Layout> layouts, const ClassVocabulary& vocab) {
  std::vector<TokenIndices> tok;
  tok.reserve(layouts.size());
  for (const auto& l : layouts) tok.push_back(token_indices(l, vocab));
  return make_batch(tok);
}

VaeConfig VaeConfig::from(const TrainConfig& c, int num_classes) {
  VaeConfig v;
  v.num_classes = num_classes;
  v.latent_dim = c.latent_dim;
  v.width = c.arch.vae_width;
  v.layers = c.arch.vae_layers;
  v.heads = c.arch.vae_heads;
  v.ff_mult = c.arch.ff_mult;
  v.slots = c.arch.slots;
  return v;
}

VaeImpl::VaeImpl(const VaeConfig& c) : config_(c) {
  const int d_tok = c.segments().row_width();
  nn::BlockOptions block{c.width, c.heads, c.ff_mult, 0};
  embed_ = register_module("embed", torch::nn::Linear(d_tok, c.width));
  encoder_ = register_module("encoder", torch::nn::ModuleList());
  decoder_ = register_module("decoder", torch::nn::ModuleList());
  z_proj_ = register_module("z_proj", torch::nn::ModuleList());
  for (int l = 0; l < c.layers; ++l) {
    encoder_->push_back(nn::TransformerBlock(block));
    decoder_->push_back(nn::TransformerBlock(block));
    z_proj_->push_back(torch::nn::Linear(c.latent_dim, c.width));
  }
  enc_norm_ = register_module("enc_norm", torch::nn::LayerNorm(torch::nn::LayerNormOptions({c.width})));
  mean_head_ = register_module("mean_head", torch::nn::Linear(c.width, c.latent_dim));
  logvar_head_ = register_module("logvar_head", torch::nn::Linear(c.width, c.latent_dim));
  {
    torch::NoGradGuard ng;
    logvar_head_->weight.zero_();
    logvar_head_->bias.zero_();
  }
  queries_ = register_parameter("queries", torch::randn({c.slots, c.width}) * 0.02);
  dec_norm_ = register_module("dec_norm", torch::nn::LayerNorm(torch::nn::LayerNormOptions({c.width})));
  out_ = register_module("out", torch::nn::Linear(c.width, d_tok));
}

Posterior VaeImpl::encode_embedded(torch::Tensor h, const torch::Tensor& mask) {
  for (const auto& m : *encoder_) h = m->as<nn::TransformerBlockImpl>()->forward(h, mask);
  h = enc_norm_(h);
  return {mean_head_(h), logvar_head_(h)};
}

Posterior VaeImpl::encode(const LayoutBatch& batch) {
  // Equivalent to embed_(one_hot(batch)): gather the weight columns of the
  // five active entries instead of multiplying by a sparse matrix.
  const auto seg = config_.segments();
  auto wt = embed_->weight.t();  // D x W
  torch::Tensor h = embed_->bias.view({1, 1, -1});
  for (int s = 0; s < TokenSegments::kCount; ++s) {
    auto cols = batch.indices.select(2, s) + seg.offset(s);
    h = h + wt.index_select(0, cols.flatten()).view({cols.size(0), cols.size(1), -1});
  }
  return encode_embedded(h, batch.mask);
}

Posterior VaeImpl::encode_onehot(const torch::Tensor& tokens, const torch::Tensor& mask) {
  return encode_embedded(embed_(tokens), mask);
}

torch::Tensor VaeImpl::decode(const torch::Tensor& z, const torch::Tensor& mask) {
  const auto b = z.size(0), len = z.size(1);
  if (len > config_.slots) throw CapacityError("latent sequence longer than decoder slots", "z");
  auto h = queries_.narrow(0, 0, len).unsqueeze(0).expand({b, len, config_.width});
  for (std::size_t l = 0; l < decoder_->size(); ++l) {
    h = h + z_proj_[l]->as<torch::nn::LinearImpl>()->forward(z);
    h = decoder_[l]->as<nn::TransformerBlockImpl>()->forward(h, mask);
  }
  return out_(dec_norm_(h));
}

Vae make_vae(const VaeConfig& config, std::uint64_t seed) {
  torch::manual_seed(seed);
  return Vae(config);
}

torch::Generator make_generator(std::uint64_t seed) { return at::detail::createCPUGenerator(seed); }

namespace {

torch::Tensor onehot_rows(const TokenizedLayout& tok) {
  const int n = tok.n_real;
  auto t = torch::empty({1, n, tok.matrix.cols}, torch::kFloat32);
  std::copy_n(tok.matrix.data.data(), static_cast<std::size_t>(n) * tok.matrix.cols, t.data_ptr<float>());
  return t;
}

void check_finite(const torch::Tensor& t, const char* what) {
  if (!torch::isfinite(t).all().item<bool>()) throw NumericalError(std::string("non-finite ") + what, what);
}

}  // namespace

LatentSeq encode(const TokenizedLayout& tok, Vae& vae, bool sample_posterior, std::uint64_t seed) {
  if (tok.segments.num_classes != vae->config().num_classes) {
    throw InvalidArgument("tokenized layout does not match the model vocabulary", "tok");
  }
  torch::NoGradGuard ng;
  LatentSeq out;
  if (tok.n_real == 0) {
    out.z = torch::zeros({0, vae->config().latent_dim});
    return out;
  }
  auto mask = torch::ones({1, tok.n_real}, torch::kBool);
  auto post = vae->encode_onehot(onehot_rows(tok), mask);
  auto z = post.mean;
  if (sample_posterior) {
    auto eps = torch::randn(post.mean.sizes(), make_generator(seed));
    z = post.mean + torch::exp(0.5 * post.logvar) * eps;
  }
  out.z = z.squeeze(0).contiguous();
  return out;
}

torch::Tensor decode_indices(const torch::Tensor& logits, const TokenSegments& seg) {
  std::vector<torch::Tensor> parts;
  for (int s = 0; s < TokenSegments::kCount; ++s) {
    int w = seg.width(s);
    if (s == 0) w -= 1;  // exclude PAD
    parts.push_back(logits.narrow(-1, seg.offset(s), w).argmax(-1));
  }
  return torch::stack(parts, -1);
}

Decoded decode(const LatentSeq& z, Vae& vae, const ClassVocabulary& vocab) {
  if (z.scale_applied) throw InvalidArgument("decode expects unscaled latents", "z");
  if (!z.z.defined() || z.z.dim() != 2 || z.z.size(1) != vae->config().latent_dim) {
    throw InvalidArgument("latent has wrong shape", "z");
  }
  check_finite(z.z, "z");
  torch::NoGradGuard ng;
  const int n = z.n_real();
  const int d_tok = vae->config().segments().row_width();
  Decoded out;
  out.logits = TokenMatrix(n, d_tok);
  out.layout.dataset = vocab.dataset();
  if (n == 0) return out;
  auto logits = vae->decode(z.z.unsqueeze(0), torch::ones({1, n}, torch::kBool)).squeeze(0).contiguous();
  std::copy_n(logits.data_ptr<float>(), static_cast<std::size_t>(n) * d_tok, out.logits.data.data());
  out.layout = untokenize(out.logits, vocab, UntokenizeOptions{n});
  return out;
}

torch::Tensor gaussian_kl(const torch::Tensor& mean, const torch::Tensor& logvar) {
  return 0.5 * (mean.square() + logvar.exp() - 1.0 - logvar).sum(-1);
}

VaeLoss vae_loss(Vae& vae, const LayoutBatch& batch, double beta, const torch::Generator& noise) {
  auto post = vae->encode(batch);
  auto eps = torch::randn(post.mean.sizes(), noise);
  auto z = post.mean + torch::exp(0.5 * post.logvar) * eps;
  auto logits = vae->decode(z, batch.mask);
  const auto seg = vae->config().segments();
  torch::Tensor ce;
  for (int s = 0; s < TokenSegments::kCount; ++s) {
    auto l = logits.narrow(-1, seg.offset(s), seg.width(s));
    auto target = batch.indices.select(2, s);
    auto part = torch::nn::functional::cross_entropy(
        l.reshape({-1, seg.width(s)}), target.reshape({-1}),
        torch::nn::functional::CrossEntropyFuncOptions().reduction(torch::kNone));
    ce = ce.defined() ? ce + part : part;
  }
  ce = (ce / TokenSegments::kCount).view_as(batch.mask.to(torch::kFloat32));
  VaeLoss out;
  out.recon = nn::masked_mean(ce, batch.mask);
  out.kl = nn::masked_mean(gaussian_kl(post.mean, post.logvar), batch.mask);
  out.total = out.recon + beta * out.kl;
  return out;
}

double warmup_learning_rate(const TrainConfig& c, int step) {
  if (c.warmup_steps <= 0 || step >= c.warmup_steps) return c.learning_rate;
  return c.learning_rate * static_cast<double>(step + 1) / c.warmup_steps;
}

BatchOrder::BatchOrder(std::size_t size, std::uint64_t seed) : size_(size), seed_(seed) {
  if (size == 0) throw InvalidArgument("empty dataset", "dataset");
  order_.resize(size);
  reshuffle();
}

void BatchOrder::reshuffle() {
  for (std::size_t i = 0; i < size_; ++i) order_[i] = i;
  Rng rng(derive_seed(seed_, 0xba7c, epoch_++));
  for (std::size_t i = size_ - 1; i > 0; --i) {
    auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i)));
    std::swap(order_[i], order_[j]);
  }
  cursor_ = 0;
}

std::vector<std::size_t> BatchOrder::next(std::size_t count) {
  std::vector<std::size_t> out;
  out.reserve(count);
  while (out.size() < count) {
    if (cursor_ == size_) reshuffle();
    out.push_back(order_[cursor_++]);
  }
  return out;
}

namespace {

double batch_accuracy(const torch::Tensor& logits, const LayoutBatch& batch, const TokenSegments& seg) {
  auto pred = decode_indices(logits, seg);
  auto ok = (pred == batch.indices).all(-1).logical_and(batch.mask);
  return ok.sum().item<double>() / std::max<double>(1.0, batch.mask.sum().item<double>());
}

}  // namespace

TrainLog train_vae(Vae& vae, std::span<const Layout> dataset, const ClassVocabulary& vocab,
                   const TrainConfig& config, const TrainCallback& callback) {
  config.validate();
  if (vae->config().num_classes != vocab.size()) {
    throw InvalidArgument("model vocabulary does not match dataset vocabulary", "vocab");
  }
  std::vector<TokenIndices> tokens;
  tokens.reserve(dataset.size());
  for (const auto& l : dataset) tokens.push_back(token_indices(l, vocab));
  BatchOrder order(tokens.size(), derive_seed(config.seed, 0x7ae1, 0));
  auto noise = make_generator(derive_seed(config.seed, 0x7ae1, 1));

  vae->train();
  torch::optim::Adam opt(vae->parameters(), torch::optim::AdamOptions(config.learning_rate)
                                                .betas({config.adam_beta1, config.adam_beta2}));
  TrainLog log;
  std::vector<TokenIndices> picked(static_cast<std::size_t>(config.batch_size));
  for (int step = 0; step < config.total_steps; ++step) {
    auto ids = order.next(static_cast<std::size_t>(config.batch_size));
    for (std::size_t i = 0; i < ids.size(); ++i) picked[i] = tokens[ids[i]];
    auto batch = make_batch(picked);
    const double lr = warmup_learning_rate(config, step);
    for (auto& g : opt.param_groups()) static_cast<torch::optim::AdamOptions&>(g.options()).lr(lr);

    auto loss = vae_loss(vae, batch, config.kl_weight, noise);
    if (!std::isfinite(loss.total.item<double>())) {
      throw NumericalError("VAE loss diverged at step " + std::to_string(step), "loss");
    }
    opt.zero_grad();
    loss.total.backward();
    if (config.grad_clip > 0) torch::nn::utils::clip_grad_norm_(vae->parameters(), config.grad_clip);
    opt.step();

    if ((step + 1) % config.log_every == 0 || step + 1 == config.total_steps) {
      TrainRecord r;
      r.step = step + 1;
      r.loss = loss.total.item<double>();
      r.recon = loss.recon.item<double>();
      r.kl = loss.kl.item<double>();
      r.learning_rate = lr;
      {
        torch::NoGradGuard ng;
        auto post = vae->encode(batch);
        r.accuracy = batch_accuracy(vae->decode(post.mean, batch.mask), batch, vae->config().segments());
      }
      log.records.push_back(r);
      if (callback) callback(r);
    }
  }
  vae->eval();
  return log;
}

double reconstruction_accuracy(Vae& vae, std::span<const Layout> layouts, const ClassVocabulary& vocab,
                               int batch_size) {
  torch::NoGradGuard ng;
  double correct = 0, total = 0;
  for (std::size_t start = 0; start < layouts.size(); start += batch_size) {
    auto chunk = layouts.subspan(start, std::min<std::size_t>(batch_size, layouts.size() - start));
    auto batch = make_batch(chunk, vocab);
    auto post = vae->encode(batch);
    auto pred = decode_indices(vae->decode(post.mean, batch.mask), vae->config().segments());
    correct += (pred == batch.indices).all(-1).logical_and(batch.mask).sum().item<double>();
    total += batch.mask.sum().item<double>();
  }
  return total > 0 ? correct / total : 1.0;
}

}  // namespace play
