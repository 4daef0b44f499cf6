#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include "play/frechet.hpp"
#include "play/guidelines.hpp"
#include "play/layout_metrics.hpp"
#include "play/render.hpp"
#include "play/vae.hpp"

namespace play {

// ---- FID-like: convolutional autoencoder over padded renders -------------

struct ConvExtractorConfig {
  int image_px = 64;
  int feature_dim = 64;
  int channels = 16;  // doubled after each of the four stride-2 stages
};

class ConvAutoencoderImpl : public torch::nn::Module {
 public:
  explicit ConvAutoencoderImpl(const ConvExtractorConfig& config);
  torch::Tensor features(const torch::Tensor& images);  // B x 3 x S x S -> B x F
  torch::Tensor forward(const torch::Tensor& images);   // reconstruction
  const ConvExtractorConfig& config() const { return config_; }

 private:
  ConvExtractorConfig config_;
  int spatial_;
  torch::nn::Sequential encoder_{nullptr}, decoder_{nullptr};
  torch::nn::Linear to_feature_{nullptr}, from_feature_{nullptr};
};
TORCH_MODULE(ConvAutoencoder);

// Renders layouts with aspect-preserving padding into B x 3 x S x S in [0, 1].
torch::Tensor render_batch(std::span<const Layout> layouts, const ClassVocabulary& vocab, int image_px);

struct ExtractorTraining {
  int steps = 1500;
  int batch_size = 32;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
};

// Trains on reconstruction of rendered layouts; returns the final mean
// squared error on the last batch.
double train_conv_extractor(ConvAutoencoder& model, std::span<const Layout> layouts, const ClassVocabulary& vocab,
                            const ExtractorTraining& options, const TrainCallback& callback = {});

FeatureSet conv_features(ConvAutoencoder& model, std::span<const Layout> layouts, const ClassVocabulary& vocab,
                         const std::string& source);

// ---- FD-VG: transformer autoencoder in the vector domain ----------------

struct FdVgEncoder {
  Vae model{nullptr};
  double gate_accuracy = 0;  // held-out reconstruction accuracy when trained

  static constexpr int kDim = 32;
  static constexpr double kGate = 0.95;
};

// Default FD-VG training: the VAE architecture with d = 32 and no KL term.
TrainConfig fdvg_train_config(const TrainConfig& base);
FdVgEncoder train_fdvg_encoder(std::span<const Layout> train, std::span<const Layout> held_out,
                               const ClassVocabulary& vocab, const TrainConfig& config,
                               const TrainCallback& callback = {});
// Mean-pooled posterior means; empty layouts map to the zero vector.
FeatureSet fdvg_features(FdVgEncoder& encoder, std::span<const Layout> layouts, const ClassVocabulary& vocab,
                         const std::string& source);

// ---- Feature-extractor checkpoint ----------------------------------------

struct MetricModels {
  ClassVocabulary vocab = ClassVocabulary::clay();
  std::optional<ConvAutoencoder> fid;
  std::optional<FdVgEncoder> fdvg;
};
void save_metric_models(const MetricModels& models, const std::filesystem::path& path);
MetricModels load_metric_models(const std::filesystem::path& path);

// ---- Corpus-level scores ---------------------------------------------------

// Deterministic subsample without replacement (everything when size <= n).
std::vector<Layout> subsample(std::span<const Layout> layouts, std::size_t n, std::uint64_t seed);

// Baseline corpus: each coordinate field is pooled over the whole corpus and
// permuted independently; classes and element counts stay in place.
std::vector<Layout> shuffle_coordinates(std::span<const Layout> layouts, std::uint64_t seed);

// Mean G-Usage over (guidelines, layout) pairs; pairs with empty guideline
// sets are skipped.
double mean_g_usage(std::span<const GuidelineSet> given, std::span<const Layout> generated);

struct EvalOptions {
  bool fid = true;
  bool fdvg = true;
  bool gusage = true;
  bool geometry = true;
  std::size_t sample_size = 1024;
  std::uint64_t seed = 0;
};

// JSON report; every metric carries a "label" stating what it is.
nlohmann::json evaluate(std::span<const Layout> real, std::span<const Layout> generated,
                        std::span<const GuidelineSet> conditions, MetricModels& models,
                        const EvalOptions& options);

}  // namespace play
