#include "play/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "play/error.hpp"

namespace play {

namespace {

constexpr char kMagic[8] = {'P', 'L', 'A', 'Y', 'C', 'K', 'P', 'T'};

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T take(const std::string& in, std::size_t& at) {
  if (at + sizeof(T) > in.size()) throw SchemaError("checkpoint truncated", "checkpoint");
  T v;
  std::memcpy(&v, in.data() + at, sizeof(T));
  at += sizeof(T);
  return v;
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[i] = digits[v & 0xf];
  return s;
}

nlohmann::json counts_json(const CountDistribution& c) { return c.probability; }

}  // namespace

std::string serialize_archive(const TensorArchive& archive) {
  nlohmann::json header;
  header["meta"] = archive.meta;
  header["tensors"] = nlohmann::json::array();
  std::string data;
  for (const auto& [name, t] : archive.tensors) {
    auto c = t.detach().to(torch::kFloat32).contiguous();
    header["tensors"].push_back({{"name", name}, {"shape", c.sizes().vec()}, {"offset", data.size()}});
    data.append(reinterpret_cast<const char*>(c.data_ptr<float>()), c.numel() * sizeof(float));
  }
  const std::string text = header.dump();
  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, text.size());
  out += text;
  out += data;
  return out;
}

TensorArchive deserialize_archive(const std::string& bytes) {
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw SchemaError("not a play checkpoint", "checkpoint");
  }
  std::size_t at = sizeof(kMagic);
  const auto version = take<std::uint32_t>(bytes, at);
  if (version != kCheckpointVersion) {
    throw SchemaError("unsupported checkpoint version " + std::to_string(version), "version");
  }
  const auto len = take<std::uint64_t>(bytes, at);
  if (at + len > bytes.size()) throw SchemaError("checkpoint truncated", "checkpoint");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(at, len));
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("checkpoint header: ") + e.what(), "checkpoint");
  }
  at += len;
  TensorArchive archive;
  archive.meta = header.value("meta", nlohmann::json::object());
  try {
    for (const auto& entry : header.at("tensors")) {
      const auto shape = entry.at("shape").get<std::vector<int64_t>>();
      const auto offset = entry.at("offset").get<std::size_t>();
      auto t = torch::empty(shape, torch::kFloat32);
      const std::size_t size = t.numel() * sizeof(float);
      if (at + offset + size > bytes.size()) throw SchemaError("checkpoint truncated", "checkpoint");
      std::memcpy(t.data_ptr<float>(), bytes.data() + at + offset, size);
      archive.tensors.emplace(entry.at("name").get<std::string>(), t);
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("checkpoint tensor table: ") + e.what(), "checkpoint");
  }
  return archive;
}

void write_archive(const std::filesystem::path& path, const TensorArchive& archive) {
  const auto bytes = serialize_archive(archive);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + path.string(), "path");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

TensorArchive read_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot read " + path.string(), "path");
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_archive(ss.str());
}

void store_module(TensorArchive& archive, const std::string& prefix, const torch::nn::Module& module) {
  for (const auto& p : module.named_parameters()) archive.tensors[prefix + p.key()] = p.value().detach().clone();
  for (const auto& b : module.named_buffers()) archive.tensors[prefix + b.key()] = b.value().detach().clone();
}

void load_module(const TensorArchive& archive, const std::string& prefix, torch::nn::Module& module) {
  torch::NoGradGuard ng;
  auto assign = [&](const std::string& key, torch::Tensor& target) {
    auto it = archive.tensors.find(prefix + key);
    if (it == archive.tensors.end()) throw SchemaError("checkpoint lacks tensor " + prefix + key, prefix + key);
    if (it->second.sizes() != target.sizes()) {
      throw SchemaError("checkpoint tensor " + prefix + key + " has the wrong shape", prefix + key);
    }
    target.copy_(it->second);
  };
  for (auto& p : module.named_parameters()) assign(p.key(), p.value());
  for (auto& b : module.named_buffers()) assign(b.key(), b.value());
}

PlayModel make_model(const TrainConfig& config, const ClassVocabulary& vocab, std::uint64_t seed) {
  config.validate();
  PlayModel m;
  m.config = config;
  m.vocab = vocab;
  m.vae = make_vae(VaeConfig::from(config, vocab.size()), seed);
  m.ldm = make_ldm(LdmConfig::from(config), config.diffusion_steps, seed + 1);
  m.counts.probability.assign(kMaxElements + 1, 0.0);
  m.counts.probability[1] = 1.0;
  m.vae->eval();
  m.ldm->eval();
  return m;
}

TensorArchive to_archive(const PlayModel& m) {
  TensorArchive a;
  a.meta["kind"] = "play-model";
  a.meta["config"] = to_json(m.config);
  a.meta["vocab"] = m.vocab.to_json();
  a.meta["vocab_hash"] = hex64(m.vocab.hash());
  a.meta["counts"] = counts_json(m.counts);
  a.meta["num_classes"] = m.vocab.size();
  store_module(a, "vae.", *m.vae);
  if (m.has_diffusion()) {
    const auto& s = m.ldm->schedule;
    a.meta["diffusion"] = {{"steps", s.steps}, {"std", s.std}, {"std_frozen", s.std_frozen}};
    store_module(a, "ldm.", *m.ldm);
  } else {
    a.meta["diffusion"] = nullptr;
  }
  return a;
}

PlayModel from_archive(const TensorArchive& a) {
  PlayModel m;
  try {
    if (a.meta.value("kind", "") != "play-model") throw SchemaError("not a model checkpoint", "kind");
    m.config = train_config_from_json(a.meta.at("config"));
    m.vocab = ClassVocabulary::from_json(a.meta.at("vocab").get<std::string>());
    if (hex64(m.vocab.hash()) != a.meta.at("vocab_hash").get<std::string>()) {
      throw SchemaError("vocabulary hash mismatch", "vocab_hash");
    }
    m.counts.probability = a.meta.at("counts").get<std::vector<double>>();
    if (m.counts.probability.size() != kMaxElements + 1) throw SchemaError("bad count table", "counts");
    m.vae = Vae(VaeConfig::from(m.config, m.vocab.size()));
    load_module(a, "vae.", *m.vae);
    m.vae->eval();
    const auto& d = a.meta.at("diffusion");
    if (!d.is_null()) {
      m.ldm = LatentDiffusion(LdmConfig::from(m.config));
      load_module(a, "ldm.", *m.ldm);
      m.ldm->schedule = make_schedule(d.at("steps").get<int>());
      m.ldm->schedule.std = d.at("std").get<double>();
      m.ldm->schedule.std_frozen = d.at("std_frozen").get<bool>();
      m.ldm->eval();
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("checkpoint metadata: ") + e.what(), "meta");
  }
  return m;
}

void save_checkpoint(const PlayModel& model, const std::filesystem::path& path) {
  write_archive(path, to_archive(model));
}

PlayModel load_checkpoint(const std::filesystem::path& path) { return from_archive(read_archive(path)); }

std::string checkpoint_id(const PlayModel& model) { return hex64(fnv1a64(serialize_archive(to_archive(model)))); }

}  // namespace play
