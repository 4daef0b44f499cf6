#include "../support/doctest.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "../support/random_layout.hpp"
#include "../support/tiny_model.hpp"
#include "play/error.hpp"
#include "play/sampler.hpp"

using namespace play;

namespace {

GuidelineSet some_guidelines() {
  return GuidelineSet({{Axis::horizontal, 4}, {Axis::horizontal, 30}, {Axis::vertical, 2}, {Axis::vertical, 34}});
}

}  // namespace

TEST_CASE("guidance combination") {
  auto gen = make_generator(1);
  auto a = torch::randn({2, 5, 4}, gen);
  auto b = torch::randn({2, 5, 4}, gen);
  CHECK(torch::equal(cfg_combine(a, b, 0.0), a));
  std::mt19937_64 g(2);
  std::uniform_real_distribution<double> wd(0.0, 4.0);
  auto ad = a.to(torch::kFloat64), bd = b.to(torch::kFloat64);
  for (int i = 0; i < 20; ++i) {
    const double w = wd(g);
    auto expect = ad * (1 + w) - bd * w;
    CHECK((cfg_combine(a, b, w).to(torch::kFloat64) - expect).abs().max().item<double>() <= 1e-6 * (1 + w));
  }
}

TEST_CASE("guided prediction: w = 0 is the conditional branch, and the result is affine in w") {
  torch::NoGradGuard ng;
  auto m = testing::random_model();
  auto gen = make_generator(3);
  auto z = torch::randn({2, 5, 4}, gen);
  auto mask = torch::ones({2, 5}, torch::kBool);
  std::vector<GuidelineSet> sets{some_guidelines(), GuidelineSet({{Axis::vertical, 17}})};
  auto gb = make_guideline_batch(sets);
  auto cond = m.ldm->predict(z, torch::full({2}, 7, torch::kInt64), mask, m.ldm->condition(gb, {}));
  CHECK(torch::equal(cfg_predict(m.ldm, z, 7, mask, gb, 0.0), cond));
  auto at = [&](double w) { return cfg_predict(m.ldm, z, 7, mask, gb, w).to(torch::kFloat64); };
  for (auto [w1, w2] : {std::pair{0.5, 1.0}, {1.5, 0.25}, {2.0, 3.0}}) {
    CHECK((at(w1) + at(w2) - at(w1 + w2) - at(0.0)).abs().max().item<double>() <= 1e-6);
  }
  // Conditioning matters for this model.
  auto uncond = m.ldm->predict(z, torch::full({2}, 7, torch::kInt64), mask, m.ldm->null_condition(2));
  CHECK(!torch::equal(cond, uncond));
}

TEST_CASE("ancestral step") {
  auto s = make_schedule(20);
  auto gen = make_generator(4);
  auto z = torch::randn({1, 3, 4}, gen).to(torch::kFloat64);
  auto e = torch::randn({1, 3, 4}, gen).to(torch::kFloat64);
  auto noise = torch::randn({1, 3, 4}, gen).to(torch::kFloat64);
  auto last = ddpm_step(s, z, 1, e, noise);
  auto expect = (z - s.beta_at(1) / std::sqrt(1 - s.alpha_bar_at(1)) * e) / std::sqrt(s.alpha_at(1));
  CHECK((last - expect).abs().max().item<double>() <= 1e-12);
  auto mid = ddpm_step(s, z, 10, e, noise);
  auto mexp = (z - s.beta_at(10) / std::sqrt(1 - s.alpha_bar_at(10)) * e) / std::sqrt(s.alpha_at(10)) +
              std::sqrt((1 - s.alpha_bar_at(9)) / (1 - s.alpha_bar_at(10)) * s.beta_at(10)) * noise;
  CHECK((mid - mexp).abs().max().item<double>() <= 1e-12);
}

TEST_CASE("noise trajectories are functions of the seed") {
  NoiseTrajectory a{42, 5, 4}, b{42, 5, 4}, c{43, 5, 4};
  CHECK(torch::equal(a.initial(), b.initial()));
  CHECK(torch::equal(a.step(7), b.step(7)));
  CHECK(!torch::equal(a.initial(), c.initial()));
  CHECK(!torch::equal(a.step(7), a.step(8)));
  CHECK(a.initial().sizes() == torch::IntArrayRef({5, 4}));
}

TEST_CASE("requests are validated") {
  auto m = testing::random_model();
  GenerationRequest r;
  r.n = 0;
  CHECK_THROWS_AS(sample_layout(m, r), InvalidArgument);
  r.n = 129;
  CHECK_THROWS_AS(sample_layout(m, r), InvalidArgument);
  r.n = 3;
  r.w = -1;
  CHECK_THROWS_AS(sample_layout(m, r), InvalidArgument);
  PlayModel first_stage = m;
  first_stage.ldm = nullptr;
  r.w = 1.5;
  CHECK_THROWS_AS(sample_layout(first_stage, r), InvalidArgument);
}

TEST_CASE("sampling is deterministic and honours the element count") {
  auto m = testing::random_model();
  GenerationRequest r;
  r.guidelines = some_guidelines();
  r.n = 9;
  r.seed = 11;
  auto a = sample_layout(m, r);
  auto b = sample_layout(m, r);
  CHECK(a.layout == b.layout);
  CHECK(torch::equal(a.latent.z, b.latent.z));
  CHECK(a.layout.size() == 9);
  CHECK(is_valid(a.layout, m.vocab.size()));
  CHECK(!a.latent.scale_applied);
  r.seed = 12;
  CHECK(!torch::equal(sample_layout(m, r).latent.z, a.latent.z));

  // Without n the count comes from p(N), here supported on {3, 6}.
  GenerationRequest free;
  int threes = 0;
  for (std::uint64_t s = 0; s < 40; ++s) {
    free.seed = s;
    const int n = resolve_count(m, free);
    CHECK((n == 3 || n == 6));
    threes += n == 3;
    CHECK(sample_layout(m, free).layout.size() == n);
    if (s >= 4) break;
  }
  int draws3 = 0;
  for (std::uint64_t s = 0; s < 4000; ++s) {
    free.seed = s;
    draws3 += resolve_count(m, free) == 3;
  }
  CHECK(std::abs(draws3 / 4000.0 - 0.25) <= 0.03);
}

TEST_CASE("batched sampling yields one generation per request") {
  auto m = testing::random_model();
  std::vector<GenerationRequest> rs(3);
  rs[0].n = 2;
  rs[1].n = 7;
  rs[1].w = 0.0;
  rs[2].guidelines = some_guidelines();
  rs[2].n = 4;
  rs[2].seed = 5;
  auto out = sample_layouts(m, rs);
  REQUIRE(out.size() == 3);
  CHECK(out[0].layout.size() == 2);
  CHECK(out[1].layout.size() == 7);
  CHECK(out[2].layout.size() == 4);
  auto again = sample_layouts(m, rs);
  for (int i = 0; i < 3; ++i) CHECK(again[i].layout == out[i].layout);
}

TEST_CASE("editing with the same guidelines is the identity") {
  auto m = testing::random_model();
  GenerationRequest r;
  r.guidelines = some_guidelines();
  r.seed = 21;
  auto original = sample_layout(m, r);
  auto same = edit_guidelines(m, r, r.guidelines);
  CHECK(same.layout == original.layout);
  CHECK(torch::equal(same.latent.z, original.latent.z));

  auto moved_gs = GuidelineSet({{Axis::horizontal, 10}, {Axis::horizontal, 30}, {Axis::vertical, 2}, {Axis::vertical, 34}});
  auto moved = edit_guidelines(m, r, moved_gs);
  auto moved2 = edit_guidelines(m, r, moved_gs);
  CHECK(moved.layout == moved2.layout);
  CHECK(moved.n == original.n);
  CHECK(!torch::equal(moved.latent.z, original.latent.z));
  CHECK_THROWS_AS(edit_guidelines(m, r, moved_gs, original.n + 1), CountMismatch);
  CHECK(edit_guidelines(m, r, moved_gs, original.n).layout == moved.layout);
}

TEST_CASE("resampling the count keeps guidelines and seed") {
  auto m = testing::random_model();
  GenerationRequest r;
  r.guidelines = some_guidelines();
  r.n = 4;
  r.seed = 3;
  auto g = resample_count(m, r, 11);
  CHECK(g.layout.size() == 11);
  CHECK(g.request.guidelines == r.guidelines);
  CHECK(g.request.seed == r.seed);
  CHECK(resample_count(m, r, 11).layout == g.layout);
  CHECK_THROWS_AS(resample_count(m, r, 0), InvalidArgument);
}

TEST_CASE("variations") {
  auto m = testing::random_model();
  Layout src;
  src.elements = {{0, 0, 0, 35, 5}, {2, 3, 10, 20, 14}, {4, 3, 20, 32, 50}};
  std::vector<std::uint64_t> seeds{1, 2, 3};
  auto v = generate_variations(m, src, GuidelineSampling::all, seeds);
  REQUIRE(v.size() == 3);
  for (const auto& l : v) CHECK(l.size() == src.size());
  CHECK(generate_variations(m, src, GuidelineSampling::all, seeds) == v);
  auto none = generate_variations(m, src, std::nullopt, seeds);
  CHECK(none.size() == 3);
  // The empty subset is the unconditional path.
  GenerationRequest r;
  r.n = 3;
  r.seed = 1;
  CHECK(none[0] == sample_layout(m, r).layout);
}

TEST_CASE("inpainting preserves unmasked elements") {
  auto m = testing::random_model();
  std::mt19937_64 gen(8);
  auto layout = testing::random_layout(gen, m.vocab.size(), 10);
  while (layout.size() < 4) layout = testing::random_layout(gen, m.vocab.size(), 10);
  CHECK(inpaint(m, layout, {}, some_guidelines(), 5) == layout);
  std::vector<int> mask{1, 3};
  auto out = inpaint(m, layout, mask, some_guidelines(), 5);
  REQUIRE(out.size() == layout.size());
  for (int i = 0; i < layout.size(); ++i) {
    if (i != 1 && i != 3) CHECK(out.elements[i] == layout.elements[i]);
  }
  CHECK(is_valid(out, m.vocab.size()));
  CHECK(inpaint(m, layout, mask, some_guidelines(), 5) == out);
  std::vector<int> bad{layout.size()};
  CHECK_THROWS_AS(inpaint(m, layout, bad, some_guidelines(), 5), InvalidArgument);
  std::vector<int> neg{-1};
  CHECK_THROWS_AS(inpaint(m, layout, neg, some_guidelines(), 5), InvalidArgument);
}

TEST_CASE("checkpoint round trip") {
  auto m = testing::random_model(4);
  const auto dir = std::filesystem::temp_directory_path() / "play_test_ckpt";
  std::filesystem::create_directories(dir);
  const auto path = dir / "model.ckpt";
  save_checkpoint(m, path);
  auto back = load_checkpoint(path);
  CHECK(back.config == m.config);
  CHECK(back.vocab == m.vocab);
  CHECK(back.counts.probability == m.counts.probability);
  CHECK(back.ldm->schedule.std == m.ldm->schedule.std);
  CHECK(back.ldm->schedule.alpha_bar == m.ldm->schedule.alpha_bar);
  CHECK(checkpoint_id(back) == checkpoint_id(m));
  auto a = m.vae->named_parameters();
  auto b = back.vae->named_parameters();
  for (const auto& p : a) CHECK(torch::equal(p.value(), b[p.key()]));
  GenerationRequest r;
  r.guidelines = some_guidelines();
  r.seed = 9;
  CHECK(sample_layout(back, r).layout == sample_layout(m, r).layout);

  // Re-saving yields identical bytes.
  const auto path2 = dir / "model2.ckpt";
  save_checkpoint(back, path2);
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  CHECK(slurp(path) == slurp(path2));

  // First-stage-only checkpoints load without a diffusion model.
  PlayModel vae_only = m;
  vae_only.ldm = nullptr;
  save_checkpoint(vae_only, path2);
  CHECK(!load_checkpoint(path2).has_diffusion());

  auto bytes = slurp(path);
  CHECK_THROWS_AS(deserialize_archive("not a checkpoint"), SchemaError);
  CHECK_THROWS_AS(deserialize_archive(bytes.substr(0, bytes.size() / 2)), SchemaError);
  auto wrong_version = bytes;
  wrong_version[8] = 9;
  CHECK_THROWS_AS(deserialize_archive(wrong_version), SchemaError);
  auto archive = deserialize_archive(bytes);
  archive.meta["vocab_hash"] = "0000000000000000";
  CHECK_THROWS_AS(from_archive(archive), SchemaError);
  auto missing = deserialize_archive(bytes);
  missing.tensors.erase(missing.tensors.begin());
  CHECK_THROWS_AS(from_archive(missing), SchemaError);
  std::filesystem::remove_all(dir);
}
