#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include "play/config.hpp"
#include "play/diffusion.hpp"
#include "play/layout.hpp"
#include "play/vae.hpp"
#include "play/vocabulary.hpp"

namespace play {

// Generic tensor archive: magic, format version, JSON header, float32 data.
struct TensorArchive {
  nlohmann::json meta;
  std::map<std::string, torch::Tensor> tensors;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string serialize_archive(const TensorArchive& archive);
// Throws SchemaError on bad magic, unsupported version or truncation.
TensorArchive deserialize_archive(const std::string& bytes);
void write_archive(const std::filesystem::path& path, const TensorArchive& archive);
TensorArchive read_archive(const std::filesystem::path& path);

// Copies every named parameter of `module` (prefixed) into / out of an archive.
void store_module(TensorArchive& archive, const std::string& prefix, const torch::nn::Module& module);
void load_module(const TensorArchive& archive, const std::string& prefix, torch::nn::Module& module);

// Everything needed to sample and edit: first stage, diffusion model with its
// schedule and std, the vocabulary and the learned element-count distribution.
struct PlayModel {
  TrainConfig config;
  ClassVocabulary vocab = ClassVocabulary::clay();
  Vae vae{nullptr};
  LatentDiffusion ldm{nullptr};  // absent in a first-stage-only checkpoint
  CountDistribution counts;

  bool has_diffusion() const { return !ldm.is_empty(); }
};

// Fresh, randomly initialized model for `vocab` (diffusion part included).
PlayModel make_model(const TrainConfig& config, const ClassVocabulary& vocab, std::uint64_t seed);

TensorArchive to_archive(const PlayModel& model);
PlayModel from_archive(const TensorArchive& archive);

void save_checkpoint(const PlayModel& model, const std::filesystem::path& path);
PlayModel load_checkpoint(const std::filesystem::path& path);

// FNV-1a over the serialized checkpoint, as 16 hex digits. Stable across
// save/load round trips.
std::string checkpoint_id(const PlayModel& model);

}  // namespace play
