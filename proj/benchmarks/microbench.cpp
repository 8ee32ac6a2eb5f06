// Microbenchmarks for the hot paths: transform, band projection, code
// search, encode/decode towers, one full training step, and the container.

#include <benchmark/benchmark.h>

#include <vector>

#include "mbsc/band.hpp"
#include "mbsc/bitstream.hpp"
#include "mbsc/codebook.hpp"
#include "mbsc/dft.hpp"
#include "mbsc/mel_loss.hpp"
#include "mbsc/model.hpp"
#include "mbsc/quantizer.hpp"
#include "mbsc/rng.hpp"
#include "mbsc/synthetic.hpp"
#include "mbsc/trainer.hpp"

using namespace mbsc;

namespace {

Tensor random_tensor(int r, int c, uint64_t seed) {
    Rng rng(seed);
    Tensor t(r, c);
    for (double& x : t.v) x = rng.uniform(-1.0, 1.0);
    return t;
}

void bm_dft_row(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    Rng rng(1);
    std::vector<double> x(n);
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    for (auto _ : state) benchmark::DoNotOptimize(dft_forward(x));
    state.SetItemsProcessed(state.iterations() * n);
}

void bm_band_project(benchmark::State& state) {
    Tensor z = random_tensor(32, static_cast<int>(state.range(0)), 2);
    BandPlan plan = make_band_plan(75.0, {4, 2, 1}, 1);
    const BandRange band = stage_band(plan, 0);
    for (auto _ : state) benchmark::DoNotOptimize(band_project(z, band, plan.latent_rate));
    state.SetItemsProcessed(state.iterations() * z.v.size());
}

void bm_nearest_code(benchmark::State& state) {
    Codebook cb = make_codebook(random_tensor(512, 32, 3));
    Tensor queries = random_tensor(64, 32, 4);
    for (auto _ : state)
        for (int t = 0; t < queries.rows; ++t)
            benchmark::DoNotOptimize(nearest_code(cb, queries.row(t), 32));
    state.SetItemsProcessed(state.iterations() * queries.rows);
}

void bm_rvq_encode(benchmark::State& state) {
    BandPlan plan = make_band_plan(75.0, {4, 2, 1}, 1);
    QuantizerStack stack = make_quantizer_stack(plan, 32, 9);
    Rng rng(5);
    for (Codebook& cb : stack.codebooks) cb = make_codebook(random_tensor(512, 32, rng.index(1000)));
    Tensor z = random_tensor(32, 75, 6);
    for (auto _ : state) benchmark::DoNotOptimize(mbs_rvq_encode(z, stack));
}

void bm_encoder_forward(benchmark::State& state) {
    ModelConfig cfg;
    Model model(cfg);
    Rng rng(7);
    model.init(rng);
    Tensor x = random_tensor(1, 3200, 8);
    for (auto _ : state) benchmark::DoNotOptimize(model.encoder.forward(x));
    state.SetItemsProcessed(state.iterations() * x.cols);
}

void bm_decoder_forward(benchmark::State& state) {
    ModelConfig cfg;
    Model model(cfg);
    Rng rng(9);
    model.init(rng);
    Tensor z = random_tensor(cfg.latent_dim, 10, 10);
    for (auto _ : state) benchmark::DoNotOptimize(model.decoder.forward(z));
}

void bm_mel_loss(benchmark::State& state) {
    Rng rng(11);
    AudioBuffer a = synthetic_segment(rng, 24000, 3200);
    AudioBuffer b = synthetic_segment(rng, 24000, 3200);
    MultiScaleMelLoss loss(24000);
    std::vector<double> grad;
    for (auto _ : state) benchmark::DoNotOptimize(loss.evaluate(a.samples, b.samples, &grad));
}

void bm_train_step(benchmark::State& state) {
    ModelConfig cfg;
    Model model(cfg);
    Rng rng(13);
    model.init(rng);
    QuantizerStack stack =
        make_quantizer_stack(make_band_plan(cfg.latent_rate(), {4, 2, 1}, 1), cfg.latent_dim, 9);
    Trainer trainer(model, stack, {}, 14);
    Rng gen(15);
    std::vector<std::vector<double>> batch;
    for (int i = 0; i < 4; ++i) batch.push_back(synthetic_segment(gen, 24000, 3200).samples);
    for (auto _ : state) benchmark::DoNotOptimize(trainer.step(batch));
}

void bm_serialize(benchmark::State& state) {
    TokenStream t;
    t.frame_rate = 75.0;
    t.n_stages = 4;
    t.bits = 9;
    t.frames = static_cast<int>(state.range(0));
    t.indices.resize(static_cast<size_t>(t.frames) * 4);
    Rng rng(16);
    for (auto& i : t.indices) i = static_cast<uint16_t>(rng.index(512));
    StreamHeader h;
    h.sample_rate = 24000;
    h.frame_rate_num = 75;
    h.frame_rate_den = 1;
    h.n_stages = 4;
    h.bits_per_code = 9;
    h.frame_count = static_cast<uint32_t>(t.frames);
    for (auto _ : state) {
        std::vector<uint8_t> bytes = serialize(t, h);
        benchmark::DoNotOptimize(deserialize(bytes));
    }
    state.SetItemsProcessed(state.iterations() * t.indices.size());
}

} // namespace

BENCHMARK(bm_dft_row)->Arg(64)->Arg(320)->Arg(1024)->Unit(benchmark::kMicrosecond);
BENCHMARK(bm_band_project)->Arg(75)->Arg(512)->Unit(benchmark::kMicrosecond);
BENCHMARK(bm_nearest_code)->Unit(benchmark::kMicrosecond);
BENCHMARK(bm_rvq_encode)->Unit(benchmark::kMicrosecond);
BENCHMARK(bm_encoder_forward)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_decoder_forward)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_mel_loss)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_train_step)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_serialize)->Arg(75)->Arg(750)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
