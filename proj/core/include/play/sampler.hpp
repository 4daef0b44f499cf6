#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <torch/torch.h>

#include "play/checkpoint.hpp"
#include "play/guidelines.hpp"

namespace play {

inline constexpr double kDefaultGuidanceWeight = 1.5;

struct GenerationRequest {
  GuidelineSet guidelines;
  std::optional<int> n;  // drawn from the model's p(N) when absent
  double w = kDefaultGuidanceWeight;
  std::uint64_t seed = 0;

  // Throws InvalidArgument on n outside [1, 128] or negative / non-finite w.
  void validate() const;
};

// Sampling noise regenerated from a master seed: z_T and one draw per step.
// Equal (seed, n, d) give identical tensors.
struct NoiseTrajectory {
  std::uint64_t seed = 0;
  int n = 0;
  int d = 0;

  torch::Tensor initial() const;         // n x d
  torch::Tensor step(int t) const;       // n x d, noise added when leaving step t
  torch::Tensor forward_noise(int t) const;  // n x d, used to diffuse known latents
};

struct Generation {
  GenerationRequest request;
  int n = 0;  // resolved element count
  Layout layout;
  LatentSeq latent;  // unscaled z_0 handed to the decoder
  NoiseTrajectory trajectory;
};

// Element count for a request: request.n, else a seeded draw from p(N).
int resolve_count(const PlayModel& model, const GenerationRequest& request);

// (1 + w) * cond - w * uncond. Returns `cond` itself when w == 0.
torch::Tensor cfg_combine(const torch::Tensor& cond, const torch::Tensor& uncond, double w);

// Guided noise prediction for a batch of latents z_t (B x L x d) at step t.
// The unconditional branch uses the learned null condition.
torch::Tensor cfg_predict(LatentDiffusion& ldm, const torch::Tensor& z_t, int t, const torch::Tensor& mask,
                          const GuidelineBatch& guides, double w);

// One ancestral step from t to t - 1 given the noise prediction.
torch::Tensor ddpm_step(const DiffusionSchedule& s, const torch::Tensor& z_t, int t, const torch::Tensor& eps_hat,
                        const torch::Tensor& noise);

Generation sample_layout(PlayModel& model, const GenerationRequest& request);
// Batched sampling; each entry matches what sample_layout would produce for
// the same batch composition, and is deterministic given the requests.
std::vector<Generation> sample_layouts(PlayModel& model, std::span<const GenerationRequest> requests);

// Conditions on guidelines extracted from `layout` (optionally subsampled
// with `subset`, or dropped entirely when `subset` is empty), with N fixed to
// the layout's element count. One layout per seed.
std::vector<Layout> generate_variations(PlayModel& model, const Layout& layout,
                                        std::optional<GuidelineSampling> subset, std::span<const std::uint64_t> seeds,
                                        double w = kDefaultGuidanceWeight);

// Reruns `previous` with the same trajectory and count but new guidelines.
// A differing `n` raises CountMismatch.
Generation edit_guidelines(PlayModel& model, const GenerationRequest& previous, const GuidelineSet& guidelines,
                           std::optional<int> n = std::nullopt);

// Same guidelines and master seed, new element count.
Generation resample_count(PlayModel& model, const GenerationRequest& previous, int n);

// Regenerates the elements at `mask` conditioned on `guidelines` while the
// other elements are pinned to their diffused encodings; only the masked
// elements of the decode are spliced back into the original layout.
Layout inpaint(PlayModel& model, const Layout& layout, std::span<const int> mask, const GuidelineSet& guidelines,
               std::uint64_t seed, double w = kDefaultGuidanceWeight);

}  // namespace play
