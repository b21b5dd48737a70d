#include <benchmark/benchmark.h>

#include "motifcode/similarity.hpp"
#include "test_support.hpp"

using namespace motif;

namespace {

struct Fixture {
    PianoRoll roll;
    Template tpl;
    Fixture() {
        Rng rng = make_rng(1);
        testutil::PlantOptions opt;
        opt.n_templates = 3;
        opt.instances_each = 10;
        opt.n_batches = 1;
        opt.rows = 128;
        opt.cols = 1152;
        testutil::PlantedCorpus corpus = testutil::plant_corpus(rng, opt);
        roll = corpus.rolls[0];
        tpl = corpus.templates[0];
    }
};

const Fixture& fixture() {
    static Fixture f;
    return f;
}

void BM_ResponseMap(benchmark::State& state, Measure measure) {
    const Fixture& f = fixture();
    TransformParams id{0};
    for (auto _ : state) {
        ResponseMap map = response_map(f.roll, f.tpl, id, measure);
        benchmark::DoNotOptimize(map.values.data());
    }
}
BENCHMARK_CAPTURE(BM_ResponseMap, bacc, Measure::BACC);
BENCHMARK_CAPTURE(BM_ResponseMap, zncc, Measure::ZNCC);
BENCHMARK_CAPTURE(BM_ResponseMap, rmse, Measure::RMSE);

void BM_ResponseMapDiffused(benchmark::State& state) {
    const Fixture& f = fixture();
    TransformParams id{0};
    for (auto _ : state) {
        ResponseMap map =
            response_map(f.roll, f.tpl, id, Measure::BACC, DiffuseConfig{5, 2.0});
        benchmark::DoNotOptimize(map.values.data());
    }
}
BENCHMARK(BM_ResponseMapDiffused);

void BM_GaussianBlur(benchmark::State& state) {
    const Fixture& f = fixture();
    for (auto _ : state) {
        Mat blurred = gaussian_blur(f.roll.data, DiffuseConfig{5, 2.0});
        benchmark::DoNotOptimize(blurred.data());
    }
}
BENCHMARK(BM_GaussianBlur);

} // namespace
