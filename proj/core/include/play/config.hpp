#pragma once

#include <cstdint>

#include <nlohmann/json.hpp>

#include "play/guidelines.hpp"

namespace play {

// Transformer sizes. Defaults are the full-size architecture; desk() is the
// configuration the bundled tests and acceptance suite train on one CPU core.
struct ArchConfig {
  int slots = kMaxElements;  // learned decoder queries / positional embeddings
  int vae_width = 256;
  int vae_layers = 4;
  int vae_heads = 8;
  int denoiser_width = 256;
  int denoiser_layers = 6;
  int denoiser_heads = 8;
  int cond_width = 256;
  int guide_layers = 2;
  int ff_mult = 4;

  bool operator==(const ArchConfig&) const = default;
};

struct TrainConfig {
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.98;
  double learning_rate = 1e-3;
  int warmup_steps = 8000;
  int batch_size = 128;
  int total_steps = 500000;
  double kl_weight = 1e-3;  // beta
  int latent_dim = 8;       // d
  double p_drop = 0.1;
  double cfg_weight = 1.5;  // w
  int diffusion_steps = 200;  // T
  double grad_clip = 1.0;
  GuidelineSampling guideline_sampling = GuidelineSampling::weighted;
  std::uint64_t seed = 0;
  int log_every = 100;
  ArchConfig arch;

  // Throws InvalidArgument naming the first bad field.
  void validate() const;
  static TrainConfig desk();

  bool operator==(const TrainConfig&) const = default;
};

nlohmann::json to_json(const ArchConfig& c);
nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);

}  // namespace play
