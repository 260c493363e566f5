// Parallel kernels vs their serial references on training-realistic shapes.
// The OpenMP variants assign whole output elements to threads, so results are
// bit-identical to serial; these benchmarks show what that buys per thread
// count (OMP_NUM_THREADS) and where the break-even sizes sit.

#include "rmk/kernels.hpp"
#include "rmk/rng.hpp"

#include <benchmark/benchmark.h>

#include <vector>

using namespace rmk;

namespace {

std::vector<double> randvec(std::size_t n, std::uint64_t seed) {
    RngState rng = make_rng(seed);
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform01() - 0.5;
    return v;
}

// (b, cin, h, w) -> (b, cout, h, w) with 3x3 kernels, the network's main shape
struct ConvCase {
    int b, cin, cout, hw;
    std::size_t in_n() const { return static_cast<std::size_t>(b) * cin * hw * hw; }
    std::size_t out_n() const { return static_cast<std::size_t>(b) * cout * hw * hw; }
    std::size_t w_n() const { return static_cast<std::size_t>(cout) * cin * 9; }
};

ConvCase conv_case(const benchmark::State& st) {
    return {static_cast<int>(st.range(0)), static_cast<int>(st.range(1)),
            static_cast<int>(st.range(1)), static_cast<int>(st.range(2))};
}

void conv_args(benchmark::internal::Benchmark* b) {
    b->Args({4, 16, 32})->Args({8, 16, 64})->Args({8, 64, 32})->Args({4, 64, 128});
}

template <bool Parallel>
void bm_conv2d_forward(benchmark::State& st) {
    const ConvCase c = conv_case(st);
    const auto in = randvec(c.in_n(), 1);
    const auto w = randvec(c.w_n(), 2);
    const auto bias = randvec(static_cast<std::size_t>(c.cout), 3);
    std::vector<double> out(c.out_n());
    for (auto _ : st) {
        if constexpr (Parallel)
            kernels::conv2d_forward(in.data(), c.b, c.cin, c.hw, c.hw, w.data(), bias.data(),
                                    c.cout, 3, 1, out.data());
        else
            kernels::serial::conv2d_forward(in.data(), c.b, c.cin, c.hw, c.hw, w.data(),
                                            bias.data(), c.cout, 3, 1, out.data());
        benchmark::DoNotOptimize(out.data());
    }
    st.SetItemsProcessed(static_cast<std::int64_t>(st.iterations()) *
                         static_cast<std::int64_t>(c.out_n()) * c.cin * 9);
}

template <bool Parallel>
void bm_conv2d_backward_input(benchmark::State& st) {
    const ConvCase c = conv_case(st);
    const auto gout = randvec(c.out_n(), 4);
    const auto w = randvec(c.w_n(), 5);
    std::vector<double> gin(c.in_n());
    for (auto _ : st) {
        if constexpr (Parallel)
            kernels::conv2d_backward_input(gout.data(), c.b, c.cin, c.hw, c.hw, w.data(), c.cout,
                                           3, 1, gin.data());
        else
            kernels::serial::conv2d_backward_input(gout.data(), c.b, c.cin, c.hw, c.hw, w.data(),
                                                   c.cout, 3, 1, gin.data());
        benchmark::DoNotOptimize(gin.data());
    }
}

template <bool Parallel>
void bm_conv2d_backward_params(benchmark::State& st) {
    const ConvCase c = conv_case(st);
    const auto gout = randvec(c.out_n(), 6);
    const auto in = randvec(c.in_n(), 7);
    std::vector<double> gw(c.w_n());
    std::vector<double> gb(static_cast<std::size_t>(c.cout));
    for (auto _ : st) {
        std::fill(gw.begin(), gw.end(), 0.0);
        std::fill(gb.begin(), gb.end(), 0.0);
        if constexpr (Parallel)
            kernels::conv2d_backward_params(gout.data(), in.data(), c.b, c.cin, c.hw, c.hw,
                                            c.cout, 3, 1, gw.data(), gb.data());
        else
            kernels::serial::conv2d_backward_params(gout.data(), in.data(), c.b, c.cin, c.hw,
                                                    c.hw, c.cout, 3, 1, gw.data(), gb.data());
        benchmark::DoNotOptimize(gw.data());
    }
}

// blur: batch of RGB images, odd kernels as the attack uses (sigma 1..5)
template <bool Parallel>
void bm_blur_reflect(benchmark::State& st) {
    const int b = static_cast<int>(st.range(0));
    const int hw = static_cast<int>(st.range(1));
    const int k = static_cast<int>(st.range(2));
    const auto in = randvec(static_cast<std::size_t>(b) * 3 * hw * hw, 8);
    auto kern = randvec(static_cast<std::size_t>(k) * k, 9);
    double s = 0.0;
    for (double v : kern) s += v;
    for (double& v : kern) v /= s;
    std::vector<double> out(in.size());
    for (auto _ : st) {
        if constexpr (Parallel)
            kernels::blur_reflect_forward(in.data(), b, 3, hw, hw, kern.data(), k, out.data());
        else
            kernels::serial::blur_reflect_forward(in.data(), b, 3, hw, hw, kern.data(), k,
                                                  out.data());
        benchmark::DoNotOptimize(out.data());
    }
}

void blur_args(benchmark::internal::Benchmark* b) {
    b->Args({4, 64, 5})->Args({4, 64, 21})->Args({8, 128, 9});
}

// jpeg approximation's transform stage
template <bool Parallel>
void bm_dct8_zigzag(benchmark::State& st) {
    const int b = static_cast<int>(st.range(0));
    const int hw = static_cast<int>(st.range(1));
    const int kept = static_cast<int>(st.range(2));
    const auto in = randvec(static_cast<std::size_t>(b) * 3 * hw * hw, 10);
    std::vector<double> out(in.size());
    for (auto _ : st) {
        if constexpr (Parallel)
            kernels::dct8_zigzag_mask(in.data(), b, 3, hw, hw, kept, out.data());
        else
            kernels::serial::dct8_zigzag_mask(in.data(), b, 3, hw, hw, kept, out.data());
        benchmark::DoNotOptimize(out.data());
    }
}

void dct_args(benchmark::internal::Benchmark* b) { b->Args({4, 64, 32})->Args({8, 128, 7}); }

BENCHMARK(bm_conv2d_forward<false>)->Name("conv2d_forward/serial")->Apply(conv_args);
BENCHMARK(bm_conv2d_forward<true>)->Name("conv2d_forward/omp")->Apply(conv_args);
BENCHMARK(bm_conv2d_backward_input<false>)->Name("conv2d_backward_input/serial")->Apply(conv_args);
BENCHMARK(bm_conv2d_backward_input<true>)->Name("conv2d_backward_input/omp")->Apply(conv_args);
BENCHMARK(bm_conv2d_backward_params<false>)->Name("conv2d_backward_params/serial")->Apply(conv_args);
BENCHMARK(bm_conv2d_backward_params<true>)->Name("conv2d_backward_params/omp")->Apply(conv_args);
BENCHMARK(bm_blur_reflect<false>)->Name("blur_reflect/serial")->Apply(blur_args);
BENCHMARK(bm_blur_reflect<true>)->Name("blur_reflect/omp")->Apply(blur_args);
BENCHMARK(bm_dct8_zigzag<false>)->Name("dct8_zigzag/serial")->Apply(dct_args);
BENCHMARK(bm_dct8_zigzag<true>)->Name("dct8_zigzag/omp")->Apply(dct_args);

} // namespace

BENCHMARK_MAIN();
