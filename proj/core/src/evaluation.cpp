#include "play/evaluation.hpp"

#include <algorithm>
#include <cmath>

#include "play/checkpoint.hpp"
#include "play/error.hpp"
#include "play/rng.hpp"

namespace play {

ConvAutoencoderImpl::ConvAutoencoderImpl(const ConvExtractorConfig& c) : config_(c) {
  if (c.image_px % 16 != 0) throw InvalidArgument("image size must be a multiple of 16", "image_px");
  spatial_ = c.image_px / 16;
  const int ch = c.channels;
  namespace tnn = torch::nn;
  auto down = [](int in, int out) { return tnn::Conv2d(tnn::Conv2dOptions(in, out, 4).stride(2).padding(1)); };
  auto up = [](int in, int out) {
    return tnn::ConvTranspose2d(tnn::ConvTranspose2dOptions(in, out, 4).stride(2).padding(1));
  };
  encoder_ = register_module("encoder", tnn::Sequential(down(3, ch), tnn::SiLU(), down(ch, 2 * ch), tnn::SiLU(),
                                                        down(2 * ch, 4 * ch), tnn::SiLU(), down(4 * ch, 8 * ch),
                                                        tnn::SiLU()));
  const int flat = 8 * ch * spatial_ * spatial_;
  to_feature_ = register_module("to_feature", tnn::Linear(flat, c.feature_dim));
  from_feature_ = register_module("from_feature", tnn::Linear(c.feature_dim, flat));
  decoder_ = register_module("decoder", tnn::Sequential(up(8 * ch, 4 * ch), tnn::SiLU(), up(4 * ch, 2 * ch),
                                                        tnn::SiLU(), up(2 * ch, ch), tnn::SiLU(), up(ch, 3)));
}

torch::Tensor ConvAutoencoderImpl::features(const torch::Tensor& images) {
  return to_feature_(encoder_->forward(images).flatten(1));
}

torch::Tensor ConvAutoencoderImpl::forward(const torch::Tensor& images) {
  auto f = features(images);
  auto h = from_feature_(f).view({f.size(0), 8 * config_.channels, spatial_, spatial_});
  return torch::sigmoid(decoder_->forward(h));
}

torch::Tensor render_batch(std::span<const Layout> layouts, const ClassVocabulary& vocab, int image_px) {
  const auto b = static_cast<int64_t>(layouts.size());
  auto out = torch::empty({b, image_px, image_px, 3}, torch::kUInt8);
  auto* dst = out.data_ptr<std::uint8_t>();
  const std::size_t per = static_cast<std::size_t>(image_px) * image_px * 3;
  for (int64_t i = 0; i < b; ++i) {
    const Image img = render_padded(layouts[i], vocab, image_px);
    std::copy(img.rgb.begin(), img.rgb.end(), dst + i * per);
  }
  return out.permute({0, 3, 1, 2}).to(torch::kFloat32).div_(255.0).contiguous();
}

double train_conv_extractor(ConvAutoencoder& model, std::span<const Layout> layouts, const ClassVocabulary& vocab,
                            const ExtractorTraining& o, const TrainCallback& callback) {
  if (layouts.empty()) throw InvalidArgument("no layouts to train the extractor on", "layouts");
  torch::manual_seed(o.seed);
  const int px = model->config().image_px;
  // Render once; the corpus is small enough to keep as a uint8 tensor.
  auto images = (render_batch(layouts, vocab, px) * 255.0).round().to(torch::kUInt8);
  BatchOrder order(layouts.size(), derive_seed(o.seed, 0xf1d, 0));
  torch::optim::Adam opt(model->parameters(), torch::optim::AdamOptions(o.learning_rate));
  model->train();
  double last = 0;
  for (int step = 0; step < o.steps; ++step) {
    auto ids = order.next(static_cast<std::size_t>(o.batch_size));
    auto idx = torch::tensor(std::vector<int64_t>(ids.begin(), ids.end()));
    auto x = images.index_select(0, idx).to(torch::kFloat32) / 255.0;
    auto loss = torch::mse_loss(model->forward(x), x);
    opt.zero_grad();
    loss.backward();
    opt.step();
    last = loss.item<double>();
    if (!std::isfinite(last)) throw NumericalError("extractor training diverged", "loss");
    if (callback && ((step + 1) % 100 == 0 || step + 1 == o.steps)) {
      TrainRecord r;
      r.step = step + 1;
      r.loss = last;
      r.recon = last;
      r.learning_rate = o.learning_rate;
      callback(r);
    }
  }
  model->eval();
  return last;
}

FeatureSet conv_features(ConvAutoencoder& model, std::span<const Layout> layouts, const ClassVocabulary& vocab,
                         const std::string& source) {
  torch::NoGradGuard ng;
  FeatureSet fs;
  fs.source = source;
  const std::size_t chunk = 128;
  for (std::size_t start = 0; start < layouts.size(); start += chunk) {
    auto part = layouts.subspan(start, std::min(chunk, layouts.size() - start));
    auto f = model->features(render_batch(part, vocab, model->config().image_px)).to(torch::kFloat64).contiguous();
    for (int64_t i = 0; i < f.size(0); ++i) {
      const double* p = f[i].data_ptr<double>();
      fs.vectors.emplace_back(p, p + f.size(1));
    }
  }
  return fs;
}

TrainConfig fdvg_train_config(const TrainConfig& base) {
  TrainConfig c = base;
  c.latent_dim = FdVgEncoder::kDim;
  c.kl_weight = 0.0;
  return c;
}

FdVgEncoder train_fdvg_encoder(std::span<const Layout> train, std::span<const Layout> held_out,
                               const ClassVocabulary& vocab, const TrainConfig& config,
                               const TrainCallback& callback) {
  FdVgEncoder enc;
  enc.model = make_vae(VaeConfig::from(config, vocab.size()), derive_seed(config.seed, 0xfd76, 0));
  train_vae(enc.model, train, vocab, config, callback);
  enc.gate_accuracy = reconstruction_accuracy(enc.model, held_out.empty() ? train : held_out, vocab);
  return enc;
}

FeatureSet fdvg_features(FdVgEncoder& encoder, std::span<const Layout> layouts, const ClassVocabulary& vocab,
                         const std::string& source) {
  torch::NoGradGuard ng;
  FeatureSet fs;
  fs.source = source;
  const int dim = encoder.model->config().latent_dim;
  const std::size_t chunk = 128;
  for (std::size_t start = 0; start < layouts.size(); start += chunk) {
    auto part = layouts.subspan(start, std::min(chunk, layouts.size() - start));
    auto batch = make_batch(part, vocab);
    auto mean = encoder.model->encode(batch).mean;
    auto m = batch.mask.unsqueeze(-1).to(torch::kFloat32);
    auto pooled = ((mean * m).sum(1) / m.sum(1).clamp_min(1.0)).to(torch::kFloat64).contiguous();
    for (int64_t i = 0; i < pooled.size(0); ++i) {
      const double* p = pooled[i].data_ptr<double>();
      fs.vectors.emplace_back(p, p + dim);
    }
  }
  return fs;
}

void save_metric_models(const MetricModels& models, const std::filesystem::path& path) {
  TensorArchive a;
  a.meta["kind"] = "play-metrics";
  a.meta["vocab"] = models.vocab.to_json();
  if (models.fid) {
    const auto& c = (*models.fid)->config();
    a.meta["fid"] = {{"image_px", c.image_px}, {"feature_dim", c.feature_dim}, {"channels", c.channels}};
    store_module(a, "fid.", **models.fid);
  }
  if (models.fdvg) {
    const auto& c = models.fdvg->model->config();
    a.meta["fdvg"] = {{"latent_dim", c.latent_dim}, {"width", c.width}, {"layers", c.layers}, {"heads", c.heads},
                      {"ff_mult", c.ff_mult}, {"slots", c.slots}, {"gate_accuracy", models.fdvg->gate_accuracy}};
    store_module(a, "fdvg.", *models.fdvg->model);
  }
  write_archive(path, a);
}

MetricModels load_metric_models(const std::filesystem::path& path) {
  auto a = read_archive(path);
  MetricModels m;
  try {
    if (a.meta.value("kind", "") != "play-metrics") throw SchemaError("not a metrics checkpoint", "kind");
    m.vocab = ClassVocabulary::from_json(a.meta.at("vocab").get<std::string>());
    if (a.meta.contains("fid")) {
      const auto& j = a.meta["fid"];
      ConvExtractorConfig c{j.at("image_px").get<int>(), j.at("feature_dim").get<int>(), j.at("channels").get<int>()};
      ConvAutoencoder model(c);
      load_module(a, "fid.", *model);
      model->eval();
      m.fid = model;
    }
    if (a.meta.contains("fdvg")) {
      const auto& j = a.meta["fdvg"];
      VaeConfig c;
      c.num_classes = m.vocab.size();
      c.latent_dim = j.at("latent_dim").get<int>();
      c.width = j.at("width").get<int>();
      c.layers = j.at("layers").get<int>();
      c.heads = j.at("heads").get<int>();
      c.ff_mult = j.at("ff_mult").get<int>();
      c.slots = j.at("slots").get<int>();
      FdVgEncoder enc;
      enc.model = Vae(c);
      load_module(a, "fdvg.", *enc.model);
      enc.model->eval();
      enc.gate_accuracy = j.at("gate_accuracy").get<double>();
      m.fdvg = enc;
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("metrics checkpoint: ") + e.what(), "meta");
  }
  return m;
}

std::vector<Layout> subsample(std::span<const Layout> layouts, std::size_t n, std::uint64_t seed) {
  if (layouts.size() <= n) return {layouts.begin(), layouts.end()};
  std::vector<std::size_t> idx(layouts.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng rng(derive_seed(seed, 0x5a3b, 0));
  // Partial Fisher-Yates.
  for (std::size_t i = 0; i < n; ++i) {
    auto j = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(i), static_cast<std::int64_t>(idx.size() - 1)));
    std::swap(idx[i], idx[j]);
  }
  std::vector<Layout> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(layouts[idx[i]]);
  return out;
}

std::vector<Layout> shuffle_coordinates(std::span<const Layout> layouts, std::uint64_t seed) {
  std::vector<int> fields[4];
  for (const auto& l : layouts) {
    for (const auto& e : l.elements) {
      fields[0].push_back(e.x_min);
      fields[1].push_back(e.y_min);
      fields[2].push_back(e.x_max);
      fields[3].push_back(e.y_max);
    }
  }
  Rng rng(derive_seed(seed, 0x5b0f, 0));
  for (auto& f : fields) {
    for (std::size_t i = f.size(); i > 1; --i) {
      auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i - 1)));
      std::swap(f[i - 1], f[j]);
    }
  }
  std::vector<Layout> out(layouts.begin(), layouts.end());
  std::size_t k = 0;
  for (auto& l : out) {
    for (auto& e : l.elements) {
      e.x_min = fields[0][k];
      e.y_min = fields[1][k];
      e.x_max = fields[2][k];
      e.y_max = fields[3][k];
      if (e.x_min > e.x_max) std::swap(e.x_min, e.x_max);
      if (e.y_min > e.y_max) std::swap(e.y_min, e.y_max);
      ++k;
    }
  }
  return out;
}

double mean_g_usage(std::span<const GuidelineSet> given, std::span<const Layout> generated) {
  if (given.size() != generated.size()) throw InvalidArgument("conditions and layouts differ in length", "conditions");
  double sum = 0;
  int count = 0;
  for (std::size_t i = 0; i < given.size(); ++i) {
    if (given[i].empty()) continue;
    sum += g_usage(given[i], generated[i]);
    ++count;
  }
  if (count == 0) throw InvalidArgument("no non-empty guideline sets", "conditions");
  return sum / count;
}

nlohmann::json evaluate(std::span<const Layout> real, std::span<const Layout> generated,
                        std::span<const GuidelineSet> conditions, MetricModels& models, const EvalOptions& o) {
  if (real.empty() || generated.empty()) throw InvalidArgument("evaluation needs real and generated layouts", "layouts");
  nlohmann::json report;
  report["counts"] = {{"real", real.size()}, {"generated", generated.size()}};
  const auto real_s = subsample(real, o.sample_size, derive_seed(o.seed, 1, 0));
  const auto gen_s = subsample(generated, o.sample_size, derive_seed(o.seed, 2, 0));
  auto fd_entry = [&](const FeatureSet& a, const FeatureSet& b, const char* label) {
    auto r = frechet_distance_checked(a, b);
    nlohmann::json j{{"value", r.distance}, {"label", label}, {"sample_size", std::min(a.size(), b.size())}};
    if (r.undersampled || a.size() < static_cast<int>(o.sample_size) || b.size() < static_cast<int>(o.sample_size)) {
      j["warning"] = "fewer samples than requested or than feature dimensions";
    }
    return j;
  };
  if (o.fid) {
    if (!models.fid) throw InvalidArgument("FID-like metric requested without a feature extractor", "fid");
    report["fid"] = fd_entry(conv_features(*models.fid, real_s, models.vocab, "real"),
                             conv_features(*models.fid, gen_s, models.vocab, "generated"),
                             "FID-like: Frechet distance of conv-autoencoder features of padded renders");
  }
  if (o.fdvg) {
    if (!models.fdvg) throw InvalidArgument("FD-VG requested without an encoder", "fdvg");
    auto entry = fd_entry(fdvg_features(*models.fdvg, real_s, models.vocab, "real"),
                          fdvg_features(*models.fdvg, gen_s, models.vocab, "generated"),
                          "FD-VG: Frechet distance of mean-pooled transformer-autoencoder latents");
    entry["encoder_gate_accuracy"] = models.fdvg->gate_accuracy;
    entry["encoder_gate_passed"] = models.fdvg->gate_accuracy >= FdVgEncoder::kGate;
    report["fdvg"] = entry;
  }
  if (o.gusage) {
    if (conditions.size() != generated.size()) {
      throw InvalidArgument("G-Usage needs one guideline set per generated layout", "conditions");
    }
    const double g = mean_g_usage(conditions, generated);
    report["gusage"] = {{"value", g}, {"unused_fraction", 1.0 - g},
                        {"label", "G-Usage: share of given guidelines found in the generated layout"}};
  }
  if (o.geometry) {
    std::vector<Layout> gv(generated.begin(), generated.end());
    auto m = geometric_metrics(gv);
    report["geometry"] = {{"iou", m.iou}, {"overlap", m.overlap}, {"alignment", m.alignment},
                          {"label", "IoU / Overlap / Alignment as defined in docs/metrics.md"}};
  }
  return report;
}

}  // namespace play
