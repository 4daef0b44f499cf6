#include "play/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "play/error.hpp"
#include "play/rng.hpp"

namespace play {

namespace {

constexpr std::uint64_t kInitialStream = 0x7a11;
constexpr std::uint64_t kStepStream = 0x57e9;
constexpr std::uint64_t kForwardStream = 0xf0d;
constexpr std::uint64_t kCountStream = 0xc0c0;

torch::Tensor seeded_normal(std::uint64_t seed, int n, int d) {
  return torch::randn({n, d}, make_generator(seed));
}

void require_diffusion(const PlayModel& model) {
  if (!model.has_diffusion()) throw InvalidArgument("checkpoint has no diffusion model", "checkpoint");
}

}  // namespace

void GenerationRequest::validate() const {
  if (n && (*n < 1 || *n > kMaxElements)) throw InvalidArgument("n must be in [1, 128]", "n");
  if (!std::isfinite(w) || w < 0) throw InvalidArgument("w must be a finite non-negative number", "w");
}

torch::Tensor NoiseTrajectory::initial() const { return seeded_normal(derive_seed(seed, kInitialStream, 0), n, d); }

torch::Tensor NoiseTrajectory::step(int t) const {
  return seeded_normal(derive_seed(seed, kStepStream, static_cast<std::uint64_t>(t)), n, d);
}

torch::Tensor NoiseTrajectory::forward_noise(int t) const {
  return seeded_normal(derive_seed(seed, kForwardStream, static_cast<std::uint64_t>(t)), n, d);
}

int resolve_count(const PlayModel& model, const GenerationRequest& request) {
  if (request.n) return *request.n;
  Rng rng(derive_seed(request.seed, kCountStream, 0));
  return std::max(1, model.counts.sample(rng.uniform()));
}

torch::Tensor cfg_combine(const torch::Tensor& cond, const torch::Tensor& uncond, double w) {
  if (w == 0.0) return cond;
  return (1.0 + w) * cond - w * uncond;
}

torch::Tensor cfg_predict(LatentDiffusion& ldm, const torch::Tensor& z_t, int t, const torch::Tensor& mask,
                          const GuidelineBatch& guides, double w) {
  const auto b = z_t.size(0);
  auto tt = torch::full({b}, t, torch::kInt64);
  auto cond = ldm->predict(z_t, tt, mask, ldm->condition(guides, {}));
  if (w == 0.0) return cond;
  auto uncond = ldm->predict(z_t, tt, mask, ldm->null_condition(b));
  return cfg_combine(cond, uncond, w);
}

torch::Tensor ddpm_step(const DiffusionSchedule& s, const torch::Tensor& z_t, int t, const torch::Tensor& eps_hat,
                        const torch::Tensor& noise) {
  const double beta = s.beta_at(t);
  const double coef = beta / std::sqrt(1.0 - s.alpha_bar_at(t));
  auto mean = (z_t - coef * eps_hat) / std::sqrt(s.alpha_at(t));
  if (t == 1) return mean;
  return mean + std::sqrt(s.posterior_variance(t)) * noise;
}

namespace {

// Stacks per-request n x d tensors into a padded batch.
torch::Tensor pad_stack(const std::vector<torch::Tensor>& rows, int64_t len) {
  std::vector<torch::Tensor> padded;
  for (const auto& r : rows) {
    padded.push_back(torch::constant_pad_nd(r, {0, 0, 0, len - r.size(0)}));
  }
  return torch::stack(padded);
}

// Shared reverse loop. `pin` (optional) overwrites rows at every step t with
// known latents: pin(z, t) is called before each denoising step.
template <typename Pin>
torch::Tensor reverse_process(PlayModel& model, const std::vector<NoiseTrajectory>& traj, const GuidelineBatch& guides,
                              const std::vector<double>& weights, torch::Tensor z, const torch::Tensor& mask, Pin pin) {
  auto& ldm = model.ldm;
  const auto& s = ldm->schedule;
  const int64_t len = z.size(1);
  const bool same_w = std::all_of(weights.begin(), weights.end(), [&](double w) { return w == weights.front(); });
  auto wvec = torch::tensor(weights, torch::kFloat32).view({-1, 1, 1});
  for (int t = s.steps; t >= 1; --t) {
    z = pin(z, t);
    torch::Tensor eps;
    if (same_w) {
      eps = cfg_predict(ldm, z, t, mask, guides, weights.front());
    } else {
      auto tt = torch::full({z.size(0)}, t, torch::kInt64);
      auto cond = ldm->predict(z, tt, mask, ldm->condition(guides, {}));
      auto uncond = ldm->predict(z, tt, mask, ldm->null_condition(z.size(0)));
      eps = (1.0 + wvec) * cond - wvec * uncond;
    }
    torch::Tensor noise;
    if (t > 1) {
      std::vector<torch::Tensor> rows;
      for (const auto& tr : traj) rows.push_back(tr.step(t));
      noise = pad_stack(rows, len);
    }
    z = ddpm_step(s, z, t, eps, noise);
  }
  return z;
}

Generation finish(PlayModel& model, const GenerationRequest& req, const NoiseTrajectory& traj, const torch::Tensor& z0) {
  Generation g;
  g.request = req;
  g.n = traj.n;
  g.trajectory = traj;
  g.latent = unscale_latent(LatentSeq{z0.narrow(0, 0, traj.n).contiguous(), true}, model.ldm->schedule.std);
  g.layout = decode(g.latent, model.vae, model.vocab).layout;
  return g;
}

}  // namespace

std::vector<Generation> sample_layouts(PlayModel& model, std::span<const GenerationRequest> requests) {
  require_diffusion(model);
  if (requests.empty()) return {};
  torch::NoGradGuard ng;
  const int d = model.ldm->config().latent_dim;
  std::vector<NoiseTrajectory> traj;
  std::vector<GuidelineSet> sets;
  std::vector<double> weights;
  int64_t len = 1;
  for (const auto& r : requests) {
    r.validate();
    traj.push_back({r.seed, resolve_count(model, r), d});
    sets.push_back(r.guidelines);
    weights.push_back(r.w);
    len = std::max<int64_t>(len, traj.back().n);
  }
  std::vector<torch::Tensor> init;
  for (const auto& tr : traj) init.push_back(tr.initial());
  auto z = pad_stack(init, len);
  auto mask = torch::zeros({static_cast<int64_t>(requests.size()), len}, torch::kBool);
  for (std::size_t i = 0; i < traj.size(); ++i) mask[i].narrow(0, 0, traj[i].n).fill_(true);
  auto guides = make_guideline_batch(sets);
  z = reverse_process(model, traj, guides, weights, z, mask, [](const torch::Tensor& x, int) { return x; });
  std::vector<Generation> out;
  for (std::size_t i = 0; i < traj.size(); ++i) out.push_back(finish(model, requests[i], traj[i], z[i]));
  return out;
}

Generation sample_layout(PlayModel& model, const GenerationRequest& request) {
  return sample_layouts(model, std::span<const GenerationRequest>(&request, 1)).front();
}

std::vector<Layout> generate_variations(PlayModel& model, const Layout& layout,
                                        std::optional<GuidelineSampling> subset, std::span<const std::uint64_t> seeds,
                                        double w) {
  validate(layout, model.vocab.size());
  if (layout.size() == 0) throw InvalidArgument("cannot vary an empty layout", "layout");
  std::vector<Layout> out;
  for (auto seed : seeds) {
    GenerationRequest r;
    r.n = layout.size();
    r.w = w;
    r.seed = seed;
    if (subset) r.guidelines = sample_guidelines(layout, *subset, derive_seed(seed, 0x5b5e7, 0));
    out.push_back(sample_layout(model, r).layout);
  }
  return out;
}

Generation edit_guidelines(PlayModel& model, const GenerationRequest& previous, const GuidelineSet& guidelines,
                           std::optional<int> n) {
  previous.validate();
  const int prev_n = resolve_count(model, previous);
  if (n && *n != prev_n) {
    throw CountMismatch("edit must keep the element count (" + std::to_string(prev_n) + ")", "n");
  }
  GenerationRequest next = previous;
  next.guidelines = guidelines;
  next.n = prev_n;
  auto g = sample_layout(model, next);
  g.request.n = previous.n;
  return g;
}

Generation resample_count(PlayModel& model, const GenerationRequest& previous, int n) {
  GenerationRequest next = previous;
  next.n = n;
  next.validate();
  return sample_layout(model, next);
}

Layout inpaint(PlayModel& model, const Layout& layout, std::span<const int> mask, const GuidelineSet& guidelines,
               std::uint64_t seed, double w) {
  require_diffusion(model);
  validate(layout, model.vocab.size());
  std::set<int> masked;
  for (int i : mask) {
    if (i < 0 || i >= layout.size()) throw InvalidArgument("mask index " + std::to_string(i) + " out of range", "idx_mask");
    masked.insert(i);
  }
  if (!std::isfinite(w) || w < 0) throw InvalidArgument("w must be a finite non-negative number", "w");
  // Nothing to regenerate: splicing zero elements returns the original.
  if (masked.empty()) return layout;

  torch::NoGradGuard ng;
  const int n = layout.size();
  const int d = model.ldm->config().latent_dim;
  const double std = model.ldm->schedule.std;
  NoiseTrajectory traj{seed, n, d};

  // Encode the whole layout (posterior mean) and scale it like training data.
  auto z0 = scale_latent(encode(tokenize(layout, model.vocab), model.vae, false, 0), std).z;
  auto keep = torch::ones({n, 1}, torch::kBool);
  for (int i : masked) keep[i][0] = false;

  // Step T: diffused originals everywhere except the masked rows, which start
  // from the trajectory's noise.
  auto z = torch::where(keep, forward_diffuse(z0, model.ldm->schedule.steps, traj.forward_noise(model.ldm->schedule.steps),
                                              model.ldm->schedule),
                        traj.initial())
               .unsqueeze(0);
  std::vector<GuidelineSet> sets{guidelines};
  auto guides = make_guideline_batch(sets);
  auto row_mask = torch::ones({1, n}, torch::kBool);
  std::vector<NoiseTrajectory> trajs{traj};
  auto pin = [&](const torch::Tensor& x, int t) {
    auto known = forward_diffuse(z0, t, traj.forward_noise(t), model.ldm->schedule);
    return torch::where(keep, known, x[0]).unsqueeze(0);
  };
  z = reverse_process(model, trajs, guides, std::vector<double>{w}, z, row_mask, pin);

  auto decoded = decode(unscale_latent(LatentSeq{z[0].contiguous(), true}, std), model.vae, model.vocab);
  // Decoding reorders nothing: row i of the decode is slot i.
  Layout out = layout;
  for (int i : masked) out.elements[i] = decoded.layout.elements[i];
  return out;
}

}  // namespace play
