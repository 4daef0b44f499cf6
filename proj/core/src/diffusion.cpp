#include "play/diffusion.hpp"

#include <algorithm>
#include <cmath>

#include "play/error.hpp"
#include "play/rng.hpp"

namespace play {

double DiffusionSchedule::posterior_variance(int t) const {
  return (1.0 - alpha_bar_at(t - 1)) / (1.0 - alpha_bar_at(t)) * beta_at(t);
}

DiffusionSchedule make_schedule(int steps, double beta_start, double beta_end) {
  if (steps < 2) throw InvalidArgument("diffusion needs at least two steps", "T");
  // The range is specified for a 1000-step chain; shorter chains take
  // proportionally larger steps so that abar_T still approaches zero.
  const double stretch = 1000.0 / steps;
  beta_start *= stretch;
  beta_end = std::min(beta_end * stretch, 0.999);
  if (!(beta_start > 0 && beta_end < 1 && beta_start <= beta_end)) {
    throw InvalidArgument("beta range must satisfy 0 < start <= end < 1", "beta");
  }
  DiffusionSchedule s;
  s.steps = steps;
  double prod = 1.0;
  for (int i = 0; i < steps; ++i) {
    const double b = beta_start + (beta_end - beta_start) * i / (steps - 1);
    prod *= 1.0 - b;
    s.beta.push_back(b);
    s.alpha.push_back(1.0 - b);
    s.alpha_bar.push_back(prod);
  }
  return s;
}

double compute_latent_std(std::span<const LatentSeq> latents) {
  double sum = 0, count = 0;
  for (const auto& z : latents) {
    if (z.n_real() == 0) continue;
    auto d = z.z.to(torch::kFloat64);
    sum += d.sum().item<double>();
    count += static_cast<double>(d.numel());
  }
  if (count == 0) throw InvalidArgument("no latents to compute std from", "latents");
  const double mean = sum / count;
  double sq = 0;
  for (const auto& z : latents) {
    if (z.n_real() == 0) continue;
    sq += (z.z.to(torch::kFloat64) - mean).square().sum().item<double>();
  }
  const double std = std::sqrt(sq / count);
  if (!(std > 0) || !std::isfinite(std)) throw NumericalError("latent std is zero or non-finite", "std");
  return std;
}

LatentSeq scale_latent(const LatentSeq& z, double std) {
  if (z.scale_applied) throw InvalidArgument("latent already scaled", "z");
  return {z.z / std, true};
}

LatentSeq unscale_latent(const LatentSeq& z, double std) {
  if (!z.scale_applied) throw InvalidArgument("latent is not scaled", "z");
  return {z.z * std, false};
}

namespace {

void check_step(int t, const DiffusionSchedule& s) {
  if (t < 1 || t > s.steps) throw InvalidArgument("timestep out of range", "t");
}

}  // namespace

torch::Tensor forward_diffuse(const torch::Tensor& z0, int t, const torch::Tensor& eps, const DiffusionSchedule& s) {
  check_step(t, s);
  const double ab = s.alpha_bar_at(t);
  return std::sqrt(ab) * z0 + std::sqrt(1.0 - ab) * eps;
}

torch::Tensor forward_diffuse(const torch::Tensor& z0, const torch::Tensor& t, const torch::Tensor& eps,
                              const DiffusionSchedule& s) {
  auto ab = torch::tensor(s.alpha_bar, torch::kFloat64).index_select(0, t - 1).view({-1, 1, 1});
  return ab.sqrt().to(z0.scalar_type()) * z0 + (1.0 - ab).sqrt().to(z0.scalar_type()) * eps;
}

torch::Tensor forward_step(const torch::Tensor& z, int t, const torch::Tensor& eps, const DiffusionSchedule& s) {
  check_step(t, s);
  return std::sqrt(s.alpha_at(t)) * z + std::sqrt(s.beta_at(t)) * eps;
}

GuidelineBatch make_guideline_batch(std::span<const GuidelineSet> sets) {
  const auto b = static_cast<int64_t>(sets.size());
  int64_t m = 1;
  for (const auto& g : sets) m = std::max<int64_t>(m, g.size());
  GuidelineBatch out{torch::zeros({b, m}, torch::kInt64), torch::zeros({b, m}, torch::kInt64),
                     torch::zeros({b, m}, torch::kBool)};
  auto aa = out.axis.accessor<int64_t, 2>();
  auto pa = out.pos.accessor<int64_t, 2>();
  auto ma = out.mask.accessor<bool, 2>();
  for (int64_t i = 0; i < b; ++i) {
    int64_t j = 0;
    for (const auto& g : sets[i]) {
      aa[i][j] = static_cast<int64_t>(g.axis);
      pa[i][j] = g.position;
      ma[i][j] = true;
      ++j;
    }
  }
  return out;
}

LdmConfig LdmConfig::from(const TrainConfig& c) {
  LdmConfig l;
  l.latent_dim = c.latent_dim;
  l.width = c.arch.denoiser_width;
  l.layers = c.arch.denoiser_layers;
  l.heads = c.arch.denoiser_heads;
  l.ff_mult = c.arch.ff_mult;
  l.slots = c.arch.slots;
  l.cond_width = c.arch.cond_width;
  l.guide_layers = c.arch.guide_layers;
  return l;
}

GuidelineEncoderImpl::GuidelineEncoderImpl(const LdmConfig& c) {
  embed_ = register_module("embed", torch::nn::Linear(kGuidelineTokenWidth, c.cond_width));
  blocks_ = register_module("blocks", torch::nn::ModuleList());
  for (int l = 0; l < c.guide_layers; ++l) {
    blocks_->push_back(nn::TransformerBlock(nn::BlockOptions{c.cond_width, c.heads, c.ff_mult, 0}));
  }
  norm_ = register_module("norm", torch::nn::LayerNorm(torch::nn::LayerNormOptions({c.cond_width})));
}

torch::Tensor GuidelineEncoderImpl::forward(const GuidelineBatch& batch) {
  // Linear layer applied to the [axis one-hot | position one-hot] row.
  auto wt = embed_->weight.t();
  auto gather = [&](const torch::Tensor& cols) {
    return wt.index_select(0, cols.flatten()).view({cols.size(0), cols.size(1), -1});
  };
  auto h = embed_->bias.view({1, 1, -1}) + gather(batch.axis) + gather(batch.pos + 2);
  for (const auto& m : *blocks_) h = m->as<nn::TransformerBlockImpl>()->forward(h, batch.mask);
  return norm_(h);
}

DenoiserImpl::DenoiserImpl(const LdmConfig& c) : config_(c) {
  in_ = register_module("in", torch::nn::Linear(c.latent_dim, c.width));
  pos_ = register_parameter("pos", torch::randn({c.slots, c.width}) * 0.02);
  time1_ = register_module("time1", torch::nn::Linear(c.width, c.width));
  time2_ = register_module("time2", torch::nn::Linear(c.width, c.width));
  film_ = register_module("film", torch::nn::ModuleList());
  blocks_ = register_module("blocks", torch::nn::ModuleList());
  for (int l = 0; l < c.layers; ++l) {
    torch::nn::Linear f(c.width, 2 * c.width);
    {
      torch::NoGradGuard ng;
      f->weight.zero_();
      f->bias.zero_();
    }
    film_->push_back(f);
    blocks_->push_back(nn::TransformerBlock(nn::BlockOptions{c.width, c.heads, c.ff_mult, c.cond_width}));
  }
  norm_ = register_module("norm", torch::nn::LayerNorm(torch::nn::LayerNormOptions({c.width})));
  out_ = register_module("out", torch::nn::Linear(c.width, c.latent_dim));
  {
    torch::NoGradGuard ng;
    out_->weight.zero_();
    out_->bias.zero_();
  }
}

torch::Tensor DenoiserImpl::forward(const torch::Tensor& z, const torch::Tensor& t, const torch::Tensor& mask,
                                    const Condition& cond, bool identity_film) {
  const auto b = z.size(0), len = z.size(1);
  if (len > config_.slots) throw CapacityError("latent sequence longer than positional table", "z");
  auto h = in_(z) + pos_.narrow(0, 0, len).unsqueeze(0);
  auto temb = time2_(torch::silu(time1_(nn::timestep_embedding(t, config_.width))));
  temb = torch::silu(temb);
  for (std::size_t l = 0; l < blocks_->size(); ++l) {
    nn::Film film;
    if (identity_film) {
      film = {torch::ones({b, config_.width}), torch::zeros({b, config_.width})};
    } else {
      auto ss = film_[l]->as<torch::nn::LinearImpl>()->forward(temb).chunk(2, -1);
      film = {1.0 + ss[0], ss[1]};
    }
    h = blocks_[l]->as<nn::TransformerBlockImpl>()->forward(h, mask, cond.tokens, cond.mask, &film);
  }
  return out_(norm_(h));
}

LatentDiffusionImpl::LatentDiffusionImpl(const LdmConfig& c) : config_(c) {
  guide_ = register_module("guide", GuidelineEncoder(c));
  denoiser_ = register_module("denoiser", Denoiser(c));
  null_ = register_parameter("null", torch::randn({1, c.cond_width}) * 0.02);
}

Condition LatentDiffusionImpl::encode_guidelines(const GuidelineBatch& batch) {
  return {guide_->forward(batch), batch.mask};
}

Condition LatentDiffusionImpl::null_condition(int64_t batch) {
  return {null_.unsqueeze(0).expand({batch, 1, config_.cond_width}), torch::ones({batch, 1}, torch::kBool)};
}

Condition LatentDiffusionImpl::condition(const GuidelineBatch& batch, const torch::Tensor& drop) {
  auto use_null = batch.mask.any(1).logical_not();
  if (drop.defined()) use_null = use_null.logical_or(drop);
  const auto b = batch.mask.size(0), m = batch.mask.size(1);
  if (use_null.all().item<bool>()) return null_condition(b);
  auto enc = encode_guidelines(batch);
  auto first = torch::zeros({b, m}, torch::kBool);
  first.select(1, 0).fill_(true);
  auto sel = use_null.view({b, 1});
  return {torch::where(sel.view({b, 1, 1}), null_.view({1, 1, -1}).expand_as(enc.tokens), enc.tokens),
          torch::where(sel, first, enc.mask)};
}

LatentDiffusion make_ldm(const LdmConfig& config, int diffusion_steps, std::uint64_t seed) {
  torch::manual_seed(seed);
  LatentDiffusion ldm(config);
  ldm->schedule = make_schedule(diffusion_steps);
  return ldm;
}

torch::Tensor ldm_loss(LatentDiffusion& ldm, const torch::Tensor& z0, const torch::Tensor& mask,
                       const GuidelineBatch& guides, const torch::Tensor& t, const torch::Tensor& eps,
                       const torch::Tensor& drop) {
  auto zt = forward_diffuse(z0, t, eps, ldm->schedule);
  auto pred = ldm->predict(zt, t, mask, ldm->condition(guides, drop));
  auto err = (pred - eps).square().mean(-1);
  return nn::masked_mean(err, mask);
}

TrainLog train_ldm(LatentDiffusion& ldm, Vae& vae, std::span<const Layout> dataset, const ClassVocabulary& vocab,
                   const TrainConfig& config, const TrainCallback& callback) {
  config.validate();
  if (vae->config().latent_dim != ldm->config().latent_dim) {
    throw InvalidArgument("VAE and denoiser latent sizes differ", "latent_dim");
  }
  if (ldm->schedule.steps != config.diffusion_steps) ldm->schedule = make_schedule(config.diffusion_steps);
  const int d = ldm->config().latent_dim;

  // Posterior parameters of the frozen first stage, one n x d pair per layout.
  std::vector<torch::Tensor> means, logvars;
  {
    torch::NoGradGuard ng;
    vae->eval();
    const std::size_t chunk = 256;
    for (std::size_t start = 0; start < dataset.size(); start += chunk) {
      auto part = dataset.subspan(start, std::min(chunk, dataset.size() - start));
      auto batch = make_batch(part, vocab);
      auto post = vae->encode(batch);
      for (std::size_t i = 0; i < part.size(); ++i) {
        const int64_t n = part[i].size();
        means.push_back(post.mean[i].narrow(0, 0, n).clone());
        logvars.push_back(post.logvar[i].narrow(0, 0, n).clone());
      }
    }
  }

  BatchOrder order(dataset.size(), derive_seed(config.seed, 0x1d3, 0));
  auto noise = make_generator(derive_seed(config.seed, 0x1d3, 1));
  Rng rng(derive_seed(config.seed, 0x1d3, 2));

  ldm->train();
  torch::optim::Adam opt(ldm->parameters(), torch::optim::AdamOptions(config.learning_rate)
                                                .betas({config.adam_beta1, config.adam_beta2}));
  TrainLog log;
  const auto bsz = static_cast<std::size_t>(config.batch_size);
  std::vector<GuidelineSet> guides(bsz);
  for (int step = 0; step < config.total_steps; ++step) {
    auto ids = order.next(bsz);
    int64_t len = 1;
    for (auto i : ids) len = std::max<int64_t>(len, dataset[i].size());
    auto z = torch::zeros({static_cast<int64_t>(bsz), len, d});
    auto mask = torch::zeros({static_cast<int64_t>(bsz), len}, torch::kBool);
    auto t = torch::empty({static_cast<int64_t>(bsz)}, torch::kInt64);
    auto drop = torch::empty({static_cast<int64_t>(bsz)}, torch::kBool);
    std::vector<LatentSeq> samples;
    for (std::size_t b = 0; b < bsz; ++b) {
      const auto i = ids[b];
      const int64_t n = dataset[i].size();
      if (n > 0) {
        auto eps = torch::randn({n, d}, noise);
        auto zi = means[i] + torch::exp(0.5 * logvars[i]) * eps;
        z[b].narrow(0, 0, n).copy_(zi);
        mask[b].narrow(0, 0, n).fill_(true);
        if (!ldm->schedule.std_frozen) samples.push_back({zi, false});
      }
      guides[b] = sample_guidelines(dataset[i], config.guideline_sampling,
                                    derive_seed(config.seed, 0x6d1, static_cast<std::uint64_t>(step) * bsz + b));
      t[b] = rng.uniform_int(1, ldm->schedule.steps);
      drop[b] = rng.bernoulli(config.p_drop);
    }
    if (!ldm->schedule.std_frozen) {
      ldm->schedule.std = compute_latent_std(samples);
      ldm->schedule.std_frozen = true;
    }
    z = z / ldm->schedule.std;
    auto eps = torch::randn(z.sizes(), noise);
    auto gb = make_guideline_batch(guides);

    const double lr = warmup_learning_rate(config, step);
    for (auto& g : opt.param_groups()) static_cast<torch::optim::AdamOptions&>(g.options()).lr(lr);
    auto loss = ldm_loss(ldm, z, mask, gb, t, eps, drop);
    const double value = loss.item<double>();
    if (!std::isfinite(value)) throw NumericalError("diffusion loss diverged at step " + std::to_string(step), "loss");
    opt.zero_grad();
    loss.backward();
    if (config.grad_clip > 0) torch::nn::utils::clip_grad_norm_(ldm->parameters(), config.grad_clip);
    opt.step();

    if ((step + 1) % config.log_every == 0 || step + 1 == config.total_steps) {
      TrainRecord r;
      r.step = step + 1;
      r.loss = value;
      r.learning_rate = lr;
      log.records.push_back(r);
      if (callback) callback(r);
    }
  }
  ldm->eval();
  return log;
}

}  // namespace play
