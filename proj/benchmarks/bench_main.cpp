#include <random>

#include <benchmark/benchmark.h>

#include "play/checkpoint.hpp"
#include "play/frechet.hpp"
#include "play/guidelines.hpp"
#include "play/render.hpp"
#include "play/sampler.hpp"
#include "play/synthetic.hpp"
#include "play/tokenize.hpp"

using namespace play;

namespace {

const std::vector<Layout>& corpus() {
  static const auto layouts = generate_synthetic_dataset(512, 16, 11);
  return layouts;
}

// Desk-size weights; values are untrained but the cost is what matters here.
PlayModel& desk_model() {
  static PlayModel m = [] {
    auto model = make_model(TrainConfig::desk(), ClassVocabulary::clay(), 1);
    model.ldm->schedule.std = 1.0;
    model.ldm->schedule.std_frozen = true;
    model.counts = element_count_distribution(corpus());
    model.vae->eval();
    model.ldm->eval();
    return model;
  }();
  return m;
}

void BM_TokenizeRoundTrip(benchmark::State& state) {
  const auto& vocab = ClassVocabulary::clay();
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& l = corpus()[i++ % corpus().size()];
    benchmark::DoNotOptimize(untokenize(tokenize(l, vocab), vocab));
  }
}
BENCHMARK(BM_TokenizeRoundTrip);

void BM_ExtractGuidelines(benchmark::State& state) {
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(extract_guidelines(corpus()[i++ % corpus().size()]));
}
BENCHMARK(BM_ExtractGuidelines);

void BM_RenderSvg(benchmark::State& state) {
  const auto& vocab = ClassVocabulary::clay();
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(render_svg(corpus()[i++ % corpus().size()], vocab));
}
BENCHMARK(BM_RenderSvg);

void BM_RasterizePng(benchmark::State& state) {
  const auto svg = render_svg(corpus().front(), ClassVocabulary::clay());
  for (auto _ : state) benchmark::DoNotOptimize(encode_png(rasterize(svg, 288)));
}
BENCHMARK(BM_RasterizePng);

void BM_FrechetDistance(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  auto make = [&](double shift) {
    FeatureSet s;
    for (int i = 0; i < 1024; ++i) {
      std::vector<double> v(dim);
      for (auto& x : v) x = normal(rng) + shift;
      s.vectors.push_back(std::move(v));
    }
    return s;
  };
  const auto a = make(0), b = make(0.5);
  for (auto _ : state) benchmark::DoNotOptimize(frechet_distance(a, b));
}
BENCHMARK(BM_FrechetDistance)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_SampleLayout(benchmark::State& state) {
  torch::NoGradGuard ng;
  auto& m = desk_model();
  GenerationRequest r;
  r.guidelines = extract_guidelines(corpus().front());
  r.n = corpus().front().size();
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_layout(m, r));
    ++r.seed;
  }
}
BENCHMARK(BM_SampleLayout)->Unit(benchmark::kMillisecond)->Iterations(3);

void BM_SampleBatch(benchmark::State& state) {
  torch::NoGradGuard ng;
  auto& m = desk_model();
  std::vector<GenerationRequest> reqs(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < reqs.size(); ++i) {
    reqs[i].guidelines = extract_guidelines(corpus()[i]);
    reqs[i].n = corpus()[i].size();
    reqs[i].seed = i;
  }
  for (auto _ : state) benchmark::DoNotOptimize(sample_layouts(m, reqs));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SampleBatch)->Arg(16)->Unit(benchmark::kMillisecond)->Iterations(1);

}  // namespace

int main(int argc, char** argv) {
  torch::set_num_threads(1);
  benchmark::Initialize(&argc, argv);
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
