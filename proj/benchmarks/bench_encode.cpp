#include <benchmark/benchmark.h>

#include "motifcode/encoder.hpp"
#include "test_support.hpp"

using namespace motif;

namespace {

struct Fixture {
    PianoRoll roll;
    Dictionary dict;
    Fixture() {
        Rng rng = make_rng(2);
        testutil::PlantOptions opt;
        opt.n_templates = 3;
        opt.instances_each = 8;
        opt.n_batches = 1;
        opt.rows = 128;
        opt.cols = 384;
        testutil::PlantedCorpus corpus = testutil::plant_corpus(rng, opt);
        roll = corpus.rolls[0];
        dict = testutil::as_dictionary(corpus.templates);
    }
};

const Fixture& fixture() {
    static Fixture f;
    return f;
}

void BM_Encode(benchmark::State& state, Strategy strategy) {
    const Fixture& f = fixture();
    EncoderConfig cfg;
    cfg.strategy = strategy;
    cfg.flips = {Flip::None, Flip::Horizontal};
    for (auto _ : state) {
        SparseCode code = encode(f.roll, f.dict, cfg);
        benchmark::DoNotOptimize(code.placements.data());
    }
}
BENCHMARK_CAPTURE(BM_Encode, greedy, Strategy::Greedy)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Encode, efficient, Strategy::Efficient)
    ->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
