#include <benchmark/benchmark.h>

#include <random>

#include "petident/augmentation.hpp"
#include "petident/dataset.hpp"
#include "petident/fixtures.hpp"
#include "petident/identification.hpp"
#include "petident/windowing.hpp"

namespace {

using namespace petident;

Image noise(int w, int h, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Image img(w, h);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng() & 0xff);
    return img;
}

std::vector<double> probs(std::mt19937_64& rng, std::size_t k) {
    std::uniform_real_distribution<double> d(0.01, 1.0);
    std::vector<double> v(k);
    double total = 0;
    for (auto& x : v) total += (x = d(rng));
    for (auto& x : v) x /= total;
    return v;
}

void BM_Vote(benchmark::State& state) {
    const auto k = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(1);
    std::vector<std::array<ScoreVector, 3>> triples;
    for (int i = 0; i < 256; ++i) {
        triples.push_back({ScoreVector(probs(rng, k)), ScoreVector(probs(rng, k)), ScoreVector(probs(rng, k))});
    }
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(vote(triples[i++ % triples.size()]));
    }
}
BENCHMARK(BM_Vote)->Arg(2)->Arg(16)->Arg(120);

void BM_ExtractWindows(benchmark::State& state) {
    const auto img = noise(640, 480, 2);
    const BoundingBox box{40, 60, 540, 300};
    const int side = static_cast<int>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(extract_windows(img, box, side));
    }
}
BENCHMARK(BM_ExtractWindows)->Arg(128)->Arg(kDefaultInputSide)->Unit(benchmark::kMillisecond);

void BM_AugmentImage(benchmark::State& state) {
    const auto img = noise(kDefaultInputSide, kDefaultInputSide, 3);
    AugmentationSpec spec;
    spec.fill_mode = state.range(0) ? FillMode::reflect : FillMode::nearest;
    std::uint64_t draw = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(augment_image(img, spec, draw++));
    }
}
BENCHMARK(BM_AugmentImage)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_MakeFolds(benchmark::State& state) {
    std::vector<LabeledImage> rows;
    const auto ids = static_cast<std::size_t>(state.range(0));
    for (std::size_t i = 0; i < ids; ++i) {
        for (std::size_t j = 0; j < 20; ++j) {
            rows.push_back({std::to_string(i) + "/" + std::to_string(j) + ".jpg", IdentityId("dog" + std::to_string(i))});
        }
    }
    const DatasetManifest manifest(rows);
    std::uint64_t seed = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(make_folds(manifest, 10, seed++));
    }
}
BENCHMARK(BM_MakeFolds)->Arg(16)->Arg(1000);

void BM_IdentifyScripted(benchmark::State& state) {
    FixtureOptions opt;
    opt.num_identities = 4;
    opt.images_per_identity = 2;
    const auto set = generate_fixture_set(opt);
    auto detector = set.detector();
    auto classifier = set.classifier();
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(identify(set.images[i++ % set.images.size()].image, detector, classifier));
    }
}
BENCHMARK(BM_IdentifyScripted)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
