#include "play/config.hpp"

#include <string>

#include "play/error.hpp"

namespace play {

void TrainConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0)) throw InvalidArgument(std::string(name) + " must be positive", name);
  };
  positive(adam_beta1, "adam_beta1");
  positive(adam_beta2, "adam_beta2");
  if (adam_beta1 >= 1 || adam_beta2 >= 1) throw InvalidArgument("Adam betas must be < 1", "adam_beta");
  positive(learning_rate, "learning_rate");
  if (warmup_steps < 0) throw InvalidArgument("warmup_steps must be >= 0", "warmup_steps");
  positive(batch_size, "batch_size");
  positive(total_steps, "total_steps");
  if (kl_weight < 0) throw InvalidArgument("kl_weight must be >= 0", "kl_weight");
  positive(latent_dim, "latent_dim");
  if (p_drop < 0 || p_drop > 1) throw InvalidArgument("p_drop must be in [0, 1]", "p_drop");
  if (cfg_weight < 0) throw InvalidArgument("cfg_weight must be >= 0", "cfg_weight");
  if (diffusion_steps < 2) throw InvalidArgument("diffusion_steps must be >= 2", "diffusion_steps");
  positive(log_every, "log_every");
  const ArchConfig& a = arch;
  if (a.slots < 1 || a.slots > kMaxElements) throw InvalidArgument("arch.slots must be in [1, 128]", "slots");
  for (int v : {a.vae_width, a.vae_layers, a.vae_heads, a.denoiser_width, a.denoiser_layers, a.denoiser_heads,
                a.cond_width, a.guide_layers, a.ff_mult}) {
    positive(v, "arch");
  }
  if (a.vae_width % a.vae_heads || a.denoiser_width % a.denoiser_heads || a.cond_width % a.denoiser_heads) {
    throw InvalidArgument("widths must be divisible by head counts", "arch");
  }
}

TrainConfig TrainConfig::desk() {
  TrainConfig c;
  c.warmup_steps = 500;
  c.batch_size = 64;
  c.total_steps = 6000;
  c.arch.vae_width = 128;
  c.arch.vae_layers = 3;
  c.arch.vae_heads = 4;
  c.arch.denoiser_width = 128;
  c.arch.denoiser_layers = 4;
  c.arch.denoiser_heads = 4;
  c.arch.cond_width = 128;
  c.arch.guide_layers = 2;
  return c;
}

nlohmann::json to_json(const ArchConfig& c) {
  return {{"slots", c.slots},
          {"vae_width", c.vae_width},
          {"vae_layers", c.vae_layers},
          {"vae_heads", c.vae_heads},
          {"denoiser_width", c.denoiser_width},
          {"denoiser_layers", c.denoiser_layers},
          {"denoiser_heads", c.denoiser_heads},
          {"cond_width", c.cond_width},
          {"guide_layers", c.guide_layers},
          {"ff_mult", c.ff_mult}};
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"adam_beta1", c.adam_beta1},
          {"adam_beta2", c.adam_beta2},
          {"learning_rate", c.learning_rate},
          {"warmup_steps", c.warmup_steps},
          {"batch_size", c.batch_size},
          {"total_steps", c.total_steps},
          {"kl_weight", c.kl_weight},
          {"latent_dim", c.latent_dim},
          {"p_drop", c.p_drop},
          {"cfg_weight", c.cfg_weight},
          {"diffusion_steps", c.diffusion_steps},
          {"grad_clip", c.grad_clip},
          {"guideline_sampling", std::string(to_string(c.guideline_sampling))},
          {"seed", c.seed},
          {"log_every", c.log_every},
          {"arch", to_json(c.arch)}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  try {
    c.adam_beta1 = j.value("adam_beta1", c.adam_beta1);
    c.adam_beta2 = j.value("adam_beta2", c.adam_beta2);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.warmup_steps = j.value("warmup_steps", c.warmup_steps);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.total_steps = j.value("total_steps", c.total_steps);
    c.kl_weight = j.value("kl_weight", c.kl_weight);
    c.latent_dim = j.value("latent_dim", c.latent_dim);
    c.p_drop = j.value("p_drop", c.p_drop);
    c.cfg_weight = j.value("cfg_weight", c.cfg_weight);
    c.diffusion_steps = j.value("diffusion_steps", c.diffusion_steps);
    c.grad_clip = j.value("grad_clip", c.grad_clip);
    if (j.contains("guideline_sampling")) {
      c.guideline_sampling = guideline_sampling_from_string(j["guideline_sampling"].get<std::string>());
    }
    c.seed = j.value("seed", c.seed);
    c.log_every = j.value("log_every", c.log_every);
    if (j.contains("arch")) {
      const auto& a = j["arch"];
      c.arch.slots = a.value("slots", c.arch.slots);
      c.arch.vae_width = a.value("vae_width", c.arch.vae_width);
      c.arch.vae_layers = a.value("vae_layers", c.arch.vae_layers);
      c.arch.vae_heads = a.value("vae_heads", c.arch.vae_heads);
      c.arch.denoiser_width = a.value("denoiser_width", c.arch.denoiser_width);
      c.arch.denoiser_layers = a.value("denoiser_layers", c.arch.denoiser_layers);
      c.arch.denoiser_heads = a.value("denoiser_heads", c.arch.denoiser_heads);
      c.arch.cond_width = a.value("cond_width", c.arch.cond_width);
      c.arch.guide_layers = a.value("guide_layers", c.arch.guide_layers);
      c.arch.ff_mult = a.value("ff_mult", c.arch.ff_mult);
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("train config: ") + e.what(), "config");
  }
  c.validate();
  return c;
}

}  // namespace play
