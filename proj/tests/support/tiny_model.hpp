#pragma once

#include "play/checkpoint.hpp"

namespace play::testing {

inline TrainConfig tiny_train_config() {
  TrainConfig c;
  c.latent_dim = 4;
  c.diffusion_steps = 20;
  c.arch.vae_width = 32;
  c.arch.vae_layers = 1;
  c.arch.vae_heads = 4;
  c.arch.denoiser_width = 32;
  c.arch.denoiser_layers = 2;
  c.arch.denoiser_heads = 4;
  c.arch.cond_width = 16;
  c.arch.guide_layers = 1;
  c.arch.ff_mult = 2;
  return c;
}

// Untrained model whose zero-initialized heads are perturbed so every path
// (time, condition, latent) influences the output.
inline PlayModel random_model(std::uint64_t seed = 1) {
  auto m = make_model(tiny_train_config(), ClassVocabulary::clay(), seed);
  torch::NoGradGuard ng;
  torch::manual_seed(seed + 100);
  for (auto& p : m.ldm->parameters()) p.add_(torch::randn(p.sizes()) * 0.1);
  m.ldm->schedule.std = 1.7;
  m.ldm->schedule.std_frozen = true;
  m.counts.probability.assign(kMaxElements + 1, 0.0);
  m.counts.probability[3] = 0.25;
  m.counts.probability[6] = 0.75;
  return m;
}

}  // namespace play::testing
