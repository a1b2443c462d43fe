// Serial reference kernels against the OpenMP kernels on WPNet-shaped layers.
// Thread count follows OMP_NUM_THREADS.

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "wifipose/kernels.hpp"
#include "wifipose/kernels_ref.hpp"

namespace {

using wifipose::kernels::ConvGeometry;
using wifipose::nn::Shape4;
using wifipose::nn::Tensor4;

struct ConvCase {
  Tensor4<float> x, y, dy, dx;
  std::vector<float> w, dw, b;
  ConvGeometry g;
};

// args: batch, channels, spatial extent, stride
ConvCase make_case(const benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0));
  const auto c = static_cast<std::size_t>(st.range(1));
  const auto s = static_cast<std::size_t>(st.range(2));
  const auto stride = static_cast<std::size_t>(st.range(3));
  ConvCase k;
  k.g = {c, stride == 1 ? c : 2 * c, 3, stride, 1};
  k.x = Tensor4<float>({n, c, s, s});
  std::mt19937 gen(1);
  std::normal_distribution<float> d;
  for (auto& v : k.x.data) v = d(gen);
  k.w.resize(k.g.weight_size());
  for (auto& v : k.w) v = d(gen) * 0.1f;
  k.dw.resize(k.w.size());
  k.y = Tensor4<float>(k.g.out_shape(k.x.shape));
  k.dy = Tensor4<float>(k.y.shape);
  for (auto& v : k.dy.data) v = d(gen);
  k.dx = Tensor4<float>(k.x.shape);
  return k;
}

void set_flops(benchmark::State& st, const ConvCase& k, double passes) {
  const double macs = static_cast<double>(k.y.shape.size()) * static_cast<double>(k.g.cin * k.g.kernel * k.g.kernel);
  st.counters["GFLOP/s"] = benchmark::Counter(2.0 * macs * passes * static_cast<double>(st.iterations()),
                                              benchmark::Counter::kIsRate, benchmark::Counter::kIs1000);
}

void BM_ConvForwardRef(benchmark::State& st) {
  auto k = make_case(st);
  for (auto _ : st) {
    wifipose::kernels::ref::conv2d_forward<float>(k.x, k.w, k.b, k.g, k.y);
    benchmark::DoNotOptimize(k.y.data.data());
  }
  set_flops(st, k, 1);
}

void BM_ConvForwardParallel(benchmark::State& st) {
  auto k = make_case(st);
  for (auto _ : st) {
    wifipose::kernels::conv2d_forward<float>(k.x, k.w, k.b, k.g, k.y);
    benchmark::DoNotOptimize(k.y.data.data());
  }
  set_flops(st, k, 1);
}

void BM_ConvBackwardRef(benchmark::State& st) {
  auto k = make_case(st);
  for (auto _ : st) {
    wifipose::kernels::ref::conv2d_backward<float>(k.x, k.w, k.g, k.dy, &k.dx, k.dw, {});
    benchmark::DoNotOptimize(k.dx.data.data());
  }
  set_flops(st, k, 2);
}

void BM_ConvBackwardParallel(benchmark::State& st) {
  auto k = make_case(st);
  for (auto _ : st) {
    wifipose::kernels::conv2d_backward<float>(k.x, k.w, k.g, k.dy, &k.dx, k.dw, {});
    benchmark::DoNotOptimize(k.dx.data.data());
  }
  set_flops(st, k, 2);
}

void BM_BatchNormRef(benchmark::State& st) {
  auto k = make_case(st);
  std::vector<float> gamma(k.x.shape.c, 1.0f), beta(k.x.shape.c, 0.0f);
  Tensor4<float> y(k.x.shape);
  for (auto _ : st) {
    wifipose::kernels::ref::batchnorm_forward_train<float>(k.x, gamma, beta, 1e-5f, y);
    benchmark::DoNotOptimize(y.data.data());
  }
}

void BM_BatchNormParallel(benchmark::State& st) {
  auto k = make_case(st);
  std::vector<float> gamma(k.x.shape.c, 1.0f), beta(k.x.shape.c, 0.0f), mean(k.x.shape.c), inv(k.x.shape.c);
  Tensor4<float> y(k.x.shape);
  for (auto _ : st) {
    wifipose::kernels::batchnorm_forward_train<float>(k.x, gamma, beta, 1e-5f, y, mean, inv);
    benchmark::DoNotOptimize(y.data.data());
  }
}

// Stage-2 and stage-4 layers of the quarter-width network, batch 8.
#define CONV_ARGS ->Args({8, 16, 136, 1})->Args({8, 64, 34, 1})->Args({8, 32, 68, 2})->Unit(benchmark::kMillisecond)

BENCHMARK(BM_ConvForwardRef) CONV_ARGS;
BENCHMARK(BM_ConvForwardParallel) CONV_ARGS;
BENCHMARK(BM_ConvBackwardRef) CONV_ARGS;
BENCHMARK(BM_ConvBackwardParallel) CONV_ARGS;
BENCHMARK(BM_BatchNormRef)->Args({8, 16, 136, 1})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BatchNormParallel)->Args({8, 16, 136, 1})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
