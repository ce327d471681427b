#include <benchmark/benchmark.h>

#include "mixpath/ops.hpp"
#include "mixpath/rng.hpp"
#include "mixpath/supernet.hpp"

using namespace mixpath;

namespace {

// shapes mirror the reference micro-supernet: 16x16 images, 8 stem channels,
// 12 mid channels, batch 32

Tensor input(int n, int c, int hw, std::uint64_t seed) {
    Rng rng(seed);
    return Tensor::randn({n, c, hw, hw}, rng, 1.0);
}

void conv2d_fwd(benchmark::State& state) {
    const int k = static_cast<int>(state.range(0));
    Rng rng(1);
    const Tensor x = input(32, 12, 16, 2);
    const Tensor w = Tensor::randn({12, 12, k, k}, rng, 0.1);
    for (auto _ : state) benchmark::DoNotOptimize(conv2d_forward(x, w, 1, k / 2));
    state.SetItemsProcessed(state.iterations() * x.numel());
}
BENCHMARK(conv2d_fwd)->Arg(1)->Arg(3)->Arg(5)->Arg(7);

void conv2d_bwd(benchmark::State& state) {
    const int k = static_cast<int>(state.range(0));
    Rng rng(1);
    const Tensor x = input(32, 12, 16, 2);
    Tensor w = Tensor::randn({12, 12, k, k}, rng, 0.1);
    const Tensor y = conv2d_forward(x, w, 1, k / 2);
    Tensor dy = Tensor::randn(y.shape, rng, 1.0);
    for (auto _ : state) {
        Tensor dx = x;
        Tensor dw = w;
        conv2d_backward(dx, dw, dy, 1, k / 2);
        benchmark::DoNotOptimize(dx);
    }
}
BENCHMARK(conv2d_bwd)->Arg(3)->Arg(5);

void depthwise_fwd(benchmark::State& state) {
    const int k = static_cast<int>(state.range(0));
    Rng rng(1);
    const Tensor x = input(32, 12, 16, 2);
    const Tensor w = Tensor::randn({12, 1, k, k}, rng, 0.1);
    for (auto _ : state) benchmark::DoNotOptimize(depthwise_conv2d_forward(x, w, 1, k / 2));
}
BENCHMARK(depthwise_fwd)->Arg(3)->Arg(5)->Arg(7);

void batchnorm_train(benchmark::State& state) {
    const Tensor x = input(32, 12, 16, 2);
    BnState bn;
    bn.gamma.assign(12, 1.0f);
    bn.beta.assign(12, 0.0f);
    bn.running_mean.assign(12, 0.0);
    bn.running_var.assign(12, 1.0);
    for (auto _ : state) {
        BnCache<float> cache;
        benchmark::DoNotOptimize(batchnorm_forward(x, bn, BnMode::Train, &cache, true));
    }
}
BENCHMARK(batchnorm_train);

void submodel_forward(benchmark::State& state) {
    const SearchSpaceSpec spec = make_space(4, {3, 5, 7}, 2);
    const Supernet net = build_supernet(spec, Rng(3));
    const ArchMask mask{{3u, 1u, 5u, 2u}};
    const Tensor x = input(32, 1, spec.image_hw, 4);
    for (auto _ : state) benchmark::DoNotOptimize(forward_submodel(net, mask, x));
}
BENCHMARK(submodel_forward);

void calibrate_pass(benchmark::State& state) {
    const SearchSpaceSpec spec = make_space(4, {3, 5, 7}, 2);
    const Supernet net = build_supernet(spec, Rng(3));
    const ArchMask mask{{3u, 1u, 5u, 2u}};
    const Dataset calib = gen_synthetic(9, 512, spec.image_hw, spec.num_classes);
    for (auto _ : state) benchmark::DoNotOptimize(calibrate_bn(net, mask, calib, 8, 64));
}
BENCHMARK(calibrate_pass);

} // namespace

BENCHMARK_MAIN();
