#include <benchmark/benchmark.h>

#include "recast/diffusion.h"
#include "recast/nn/adam.h"
#include "recast/nn/layers.h"
#include "recast/rng.h"

using namespace recast;
using nn::Array;
using nn::Tensor;

namespace {

Array<float> randn_f(Rng& rng, nn::Shape shape) {
    Array<float> a(std::move(shape));
    for (int64_t i = 0; i < a.numel(); ++i) a[i] = static_cast<float>(rng.normal());
    return a;
}

}  // namespace

static void Conv2dForward(benchmark::State& state) {
    int F = 16, C = static_cast<int>(state.range(0)), S = static_cast<int>(state.range(1));
    Rng rng(1);
    auto x = Tensor<float>::leaf(randn_f(rng, {F, C, S, S}));
    auto w = Tensor<float>::leaf(randn_f(rng, {C, C, 3, 3}));
    auto b = Tensor<float>::leaf(randn_f(rng, {C}));
    for (auto _ : state) {
        nn::NoGradGuard ng;
        auto y = nn::conv2d(x, w, b, 1, 1);
        benchmark::DoNotOptimize(y.val().ptr());
    }
}
BENCHMARK(Conv2dForward)->Args({64, 8})->Args({64, 16})->Args({128, 4})->Args({128, 8});

static void Conv2dTrainStep(benchmark::State& state) {
    int F = 16, C = static_cast<int>(state.range(0)), S = static_cast<int>(state.range(1));
    Rng rng(1);
    nn::ParamStore<float> store;
    auto conv = nn::Conv2dLayer<float>::make(store, "c", C, C, 3, 1, 1, rng);
    auto x = Tensor<float>::leaf(randn_f(rng, {F, C, S, S}));
    for (auto _ : state) {
        store.zero_grads();
        auto loss = nn::mean_all(nn::mul(conv.forward(x), conv.forward(x)));
        loss.backward();
        benchmark::DoNotOptimize(loss.val()[0]);
    }
}
BENCHMARK(Conv2dTrainStep)->Args({64, 8})->Args({128, 4});

static void DdimSweep(benchmark::State& state) {
    auto sched = make_schedule(1000, ScheduleKind::linear);
    Rng rng(3);
    Array<float> x(nn::Shape{16, 4, 8, 8});
    for (int64_t i = 0; i < x.numel(); ++i) x[i] = static_cast<float>(rng.normal());
    auto v = x;
    for (auto _ : state) {
        auto ts = sampling_timesteps(1000, 50);
        Array<float> cur = x;
        for (size_t i = 0; i < ts.size(); ++i)
            cur = ddim_step(cur, v, ts[i], i + 1 < ts.size() ? ts[i + 1] : 0, sched);
        benchmark::DoNotOptimize(cur.ptr());
    }
}
BENCHMARK(DdimSweep);

BENCHMARK_MAIN();
