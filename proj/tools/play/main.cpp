// play: command-line front end for data prep, training, sampling and eval.
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "play/checkpoint.hpp"
#include "play/error.hpp"
#include "play/evaluation.hpp"
#include "play/ingest.hpp"
#include "play/render.hpp"
#include "play/service.hpp"
#include "play/synthetic.hpp"

using json = nlohmann::json;
using namespace play;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path, "path");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const std::string& path) {
  try {
    return json::parse(slurp(path));
  } catch (const json::parse_error& e) {
    throw SchemaError(path + ": " + e.what(), "json");
  }
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text << '\n';
  } else {
    write_text(path, text + "\n");
  }
}

GuidelineSet read_guides(const std::string& path) {
  if (path.empty()) return {};
  return guideline_list_from_json(read_json(path));
}

std::vector<int> parse_mask(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  for (std::string part; std::getline(ss, part, ',');) {
    if (!part.empty()) out.push_back(std::stoi(part));
  }
  return out;
}

TrainConfig base_config(const std::string& config_path, bool full) {
  if (!config_path.empty()) return train_config_from_json(read_json(config_path));
  return full ? TrainConfig{} : TrainConfig::desk();
}

void progress(const TrainRecord& r) {
  std::cerr << "step " << r.step << " loss " << r.loss;
  if (r.accuracy > 0) std::cerr << " acc " << r.accuracy;
  std::cerr << " lr " << r.learning_rate << '\n';
}

// Last `held` layouts are reserved for reporting when the corpus is big enough.
std::pair<std::vector<Layout>, std::vector<Layout>> split(std::vector<Layout> all, std::size_t held) {
  if (all.size() < 2 * held) return {std::move(all), {}};
  std::vector<Layout> tail(all.end() - static_cast<std::ptrdiff_t>(held), all.end());
  all.resize(all.size() - held);
  return {std::move(all), std::move(tail)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Guideline-conditioned layout generation"};
  app.require_subcommand(1);
  torch::set_num_threads(1);

  std::string dataset = "clay";
  app.add_option("--dataset", dataset, "Class vocabulary for layout files (clay, rico_semantic, publaynet)");
  auto vocab = [&]() -> const ClassVocabulary& { return ClassVocabulary::for_dataset(dataset_tag_from_string(dataset)); };

  // synth
  int count = 20000, max_elements = 16;
  std::uint64_t seed = 0;
  std::string out;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic aligned-layout corpus");
  synth->add_option("--count", count);
  synth->add_option("--max-elements", max_elements);
  synth->add_option("--seed", seed);
  synth->add_option("--out", out)->required();
  synth->callback([&] { write_jsonl(out, generate_synthetic_dataset(count, max_elements, seed), vocab()); });

  // extract
  std::string in, method = "all";
  auto* extract = app.add_subcommand("extract", "Extract (and optionally subsample) guidelines per layout");
  extract->add_option("--in", in)->required();
  extract->add_option("--method", method, "all, uniform, weighted, weight_tiers");
  extract->add_option("--seed", seed);
  extract->add_option("--out", out)->required();
  extract->callback([&] {
    const auto sampling = guideline_sampling_from_string(method);
    std::ofstream f(out);
    const auto layouts = read_jsonl(in, vocab());
    for (std::size_t i = 0; i < layouts.size(); ++i) {
      const auto gs = sample_guidelines(layouts[i], sampling, derive_seed(seed, 0xe7, i));
      json line = {{"guidelines", guideline_list_to_json(gs)}};
      if (layouts[i].source_id) line["id"] = *layouts[i].source_id;
      f << line.dump() << '\n';
    }
  });

  // train-vae
  std::string data, config_path;
  double beta = -1;
  int d = 0, steps = 0;
  bool full = false;
  auto* train_vae_cmd = app.add_subcommand("train-vae", "Train the first-stage layout VAE");
  train_vae_cmd->add_option("--data", data)->required();
  train_vae_cmd->add_option("--beta", beta, "KL weight");
  train_vae_cmd->add_option("--d", d, "Latent width per element");
  train_vae_cmd->add_option("--steps", steps);
  train_vae_cmd->add_option("--config", config_path, "Training config JSON");
  train_vae_cmd->add_flag("--full", full, "Full-size architecture instead of the desk preset");
  train_vae_cmd->add_option("--seed", seed);
  train_vae_cmd->add_option("--out", out)->required();
  train_vae_cmd->callback([&] {
    auto cfg = base_config(config_path, full);
    if (beta >= 0) cfg.kl_weight = beta;
    if (d > 0) cfg.latent_dim = d;
    if (steps > 0) cfg.total_steps = steps;
    cfg.seed = seed;
    cfg.validate();
    auto [train, held] = split(read_jsonl(data, vocab()), 500);
    PlayModel m = make_model(cfg, vocab(), seed);
    m.counts = element_count_distribution(train);
    train_vae(m.vae, train, vocab(), cfg, progress);
    if (!held.empty()) std::cerr << "held-out accuracy " << reconstruction_accuracy(m.vae, held, vocab()) << '\n';
    save_checkpoint(m, out);
    std::cerr << "checkpoint " << checkpoint_id(m) << '\n';
  });

  // train-ldm
  std::string vae_path, sampling_name = "weighted";
  int T = 0;
  auto* train_ldm_cmd = app.add_subcommand("train-ldm", "Train the latent denoiser on a VAE checkpoint");
  train_ldm_cmd->add_option("--vae", vae_path)->required();
  train_ldm_cmd->add_option("--data", data)->required();
  train_ldm_cmd->add_option("--sampling", sampling_name, "Guideline subset method used in training");
  train_ldm_cmd->add_option("--T", T, "Diffusion steps");
  train_ldm_cmd->add_option("--steps", steps);
  train_ldm_cmd->add_option("--seed", seed);
  train_ldm_cmd->add_option("--out", out)->required();
  train_ldm_cmd->callback([&] {
    PlayModel m = load_checkpoint(vae_path);
    auto cfg = m.config;
    cfg.guideline_sampling = guideline_sampling_from_string(sampling_name);
    if (T > 0) cfg.diffusion_steps = T;
    if (steps > 0) cfg.total_steps = steps;
    cfg.seed = seed;
    cfg.validate();
    m.config = cfg;
    const auto train = read_jsonl(data, m.vocab);
    m.ldm = make_ldm(LdmConfig::from(cfg), cfg.diffusion_steps, seed);
    train_ldm(m.ldm, m.vae, train, m.vocab, cfg, progress);
    save_checkpoint(m, out);
    std::cerr << "checkpoint " << checkpoint_id(m) << '\n';
  });

  // sample
  std::string ckpt, guides;
  std::optional<int> n;
  double w = kDefaultGuidanceWeight;
  std::string svg_out;
  auto* sample = app.add_subcommand("sample", "Generate one layout from guidelines");
  sample->add_option("--ckpt", ckpt)->required();
  sample->add_option("--guides", guides, "Guideline JSON");
  sample->add_option("--n", n, "Element count (drawn from p(N) when omitted)");
  sample->add_option("--w", w, "Guidance weight");
  sample->add_option("--seed", seed);
  sample->add_option("--out", out);
  sample->add_option("--svg", svg_out, "Also write an SVG render");
  sample->callback([&] {
    PlayModel m = load_checkpoint(ckpt);
    GenerationRequest r;
    r.guidelines = read_guides(guides);
    r.n = n;
    r.w = w;
    r.seed = seed;
    const auto g = sample_layout(m, r);
    emit(out, to_grid_json(g.layout, m.vocab).dump(2));
    if (!svg_out.empty()) {
      RenderOptions o;
      o.show_guidelines = true;
      o.guidelines = r.guidelines;
      write_text(svg_out, render_svg(g.layout, m.vocab, o));
    }
  });

  // inpaint
  std::string layout_path, mask_text;
  auto* inpaint_cmd = app.add_subcommand("inpaint", "Regenerate selected elements of a layout");
  inpaint_cmd->add_option("--ckpt", ckpt)->required();
  inpaint_cmd->add_option("--layout", layout_path)->required();
  inpaint_cmd->add_option("--mask", mask_text, "Comma-separated element indices")->required();
  inpaint_cmd->add_option("--guides", guides);
  inpaint_cmd->add_option("--w", w);
  inpaint_cmd->add_option("--seed", seed);
  inpaint_cmd->add_option("--out", out);
  inpaint_cmd->callback([&] {
    PlayModel m = load_checkpoint(ckpt);
    const auto l = normalize_ingest(read_json(layout_path), m.vocab);
    const auto mask = parse_mask(mask_text);
    emit(out, to_grid_json(inpaint(m, l, mask, read_guides(guides), seed, w), m.vocab).dump(2));
  });

  // render
  int px = 288;
  auto* render = app.add_subcommand("render", "Render a layout to SVG or PNG (by extension)");
  render->add_option("--layout", layout_path)->required();
  render->add_option("--guides", guides);
  render->add_option("--px", px, "Canvas width in pixels");
  render->add_option("--out", out)->required();
  render->callback([&] {
    const auto l = normalize_ingest(read_json(layout_path), vocab());
    RenderOptions o;
    o.canvas_px = px;
    o.guidelines = read_guides(guides);
    o.show_guidelines = !o.guidelines.empty();
    const auto svg = render_svg(l, vocab(), o);
    if (out.size() > 4 && out.substr(out.size() - 4) == ".png") {
      write_png(out, rasterize(svg, px));
    } else {
      write_text(out, svg);
    }
  });

  // train-metrics
  int fid_steps = 1500;
  auto* train_metrics = app.add_subcommand("train-metrics", "Train the FID-like and FD-VG feature extractors");
  train_metrics->add_option("--data", data)->required();
  train_metrics->add_option("--fid-steps", fid_steps);
  train_metrics->add_option("--steps", steps, "FD-VG encoder steps");
  train_metrics->add_option("--seed", seed);
  train_metrics->add_option("--out", out)->required();
  train_metrics->callback([&] {
    auto [train, held] = split(read_jsonl(data, vocab()), 500);
    MetricModels models;
    models.vocab = vocab();
    ConvAutoencoder fid(ConvExtractorConfig{});
    ExtractorTraining et;
    et.steps = fid_steps;
    et.seed = seed;
    train_conv_extractor(fid, train, vocab(), et, progress);
    models.fid = fid;
    auto cfg = fdvg_train_config(TrainConfig::desk());
    if (steps > 0) cfg.total_steps = steps;
    cfg.seed = seed;
    auto enc = train_fdvg_encoder(train, held.empty() ? std::span<const Layout>(train) : std::span<const Layout>(held),
                                  vocab(), cfg, progress);
    std::cerr << "fd-vg encoder accuracy " << enc.gate_accuracy << '\n';
    models.fdvg = enc;
    save_metric_models(models, out);
  });

  // eval
  std::string real, gen, metrics = "fid,fdvg,gusage,geom", report, models_path, conditions_path;
  std::size_t sample_size = 1024;
  auto* eval = app.add_subcommand("eval", "Score generated layouts against a reference corpus");
  eval->add_option("--real", real)->required();
  eval->add_option("--gen", gen)->required();
  eval->add_option("--metrics", metrics, "Comma-separated: fid, fdvg, gusage, geom");
  eval->add_option("--models", models_path, "Feature extractors from train-metrics");
  eval->add_option("--conditions", conditions_path, "Guideline JSONL aligned with --gen (for gusage)");
  eval->add_option("--sample-size", sample_size);
  eval->add_option("--seed", seed);
  eval->add_option("--report", report);
  eval->callback([&] {
    EvalOptions o;
    o.fid = metrics.find("fid") != std::string::npos;
    o.fdvg = metrics.find("fdvg") != std::string::npos;
    o.gusage = metrics.find("gusage") != std::string::npos;
    o.geometry = metrics.find("geom") != std::string::npos;
    o.sample_size = sample_size;
    o.seed = seed;
    MetricModels models;
    if (!models_path.empty()) models = load_metric_models(models_path);
    std::vector<GuidelineSet> conditions;
    if (!conditions_path.empty()) {
      std::ifstream f(conditions_path);
      for (std::string line; std::getline(f, line);) {
        if (!line.empty()) conditions.push_back(guideline_list_from_json(json::parse(line)));
      }
    } else if (o.gusage) {
      std::cerr << "no --conditions given; skipping gusage\n";
      o.gusage = false;
    }
    const auto r = read_jsonl(real, models.vocab);
    const auto g = read_jsonl(gen, models.vocab);
    emit(report, evaluate(r, g, conditions, models, o).dump(2));
  });

  // serve
  std::string host = "127.0.0.1", cors = "*";
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "Serve the HTTP API");
  serve->add_option("--ckpt", ckpt)->required();
  serve->add_option("--host", host);
  serve->add_option("--port", port);
  serve->add_option("--cors-origin", cors);
  serve->callback([&] {
    auto m = std::make_shared<PlayModel>(load_checkpoint(ckpt));
    std::cerr << "serving " << checkpoint_id(*m) << " on " << host << ':' << port << '\n';
    Service(m, cors).listen(host, port);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what();
    if (!e.field().empty()) std::cerr << " [" << e.field() << ']';
    std::cerr << '\n';
    return 1;
  }
  return 0;
}
