// Serial reference kernels against the OpenMP kernels on the layer shapes
// that dominate training. The trailing argument of each OpenMP benchmark is
// the thread count.
//
//   build/bench/fbp_bench --benchmark_filter=conv

#include <benchmark/benchmark.h>
#include <omp.h>

#include "fbp/imageproc/wls.hpp"
#include "fbp/net/kernels.hpp"
#include "fbp/rng.hpp"

using namespace fbp;
using TF = Tensor<float>;

namespace {

struct ConvCase {
  TF x, w, b;
};

// CNN-1 conv-2 on a minibatch of 16: [16,50,21,21] * [100,50,6,6].
ConvCase conv_case() {
  Rng rng(1);
  return {rng_uniform<float>(rng, {16, 50, 21, 21}, -1, 1), rng_uniform<float>(rng, {100, 50, 6, 6}, -0.1f, 0.1f),
          rng_uniform<float>(rng, {100}, -0.1f, 0.1f)};
}

void ConvForwardReference(benchmark::State& st) {
  const auto c = conv_case();
  for (auto _ : st) benchmark::DoNotOptimize(nn::reference::conv2d_forward(c.x, c.w, c.b, true));
}
void ConvForward(benchmark::State& st) {
  omp_set_num_threads(static_cast<int>(st.range(0)));
  const auto c = conv_case();
  for (auto _ : st) benchmark::DoNotOptimize(nn::kernels::conv2d_forward(c.x, c.w, c.b, true));
}

void ConvBackwardReference(benchmark::State& st) {
  const auto c = conv_case();
  const TF y = nn::reference::conv2d_forward(c.x, c.w, c.b, true);
  Rng rng(2);
  const TF d = rng_uniform<float>(rng, y.shape(), -1, 1);
  for (auto _ : st) benchmark::DoNotOptimize(nn::reference::conv2d_backward(c.x, c.w, y, d, true));
}
void ConvBackward(benchmark::State& st) {
  omp_set_num_threads(static_cast<int>(st.range(0)));
  const auto c = conv_case();
  const TF y = nn::kernels::conv2d_forward(c.x, c.w, c.b, true);
  Rng rng(2);
  const TF d = rng_uniform<float>(rng, y.shape(), -1, 1);
  for (auto _ : st) benchmark::DoNotOptimize(nn::kernels::conv2d_backward(c.x, c.w, y, d, true));
}

// CNN-1 FC-1: [16,600] -> 300.
void FcReference(benchmark::State& st) {
  Rng rng(3);
  const TF x = rng_uniform<float>(rng, {16, 150, 2, 2}, -1, 1), w = rng_uniform<float>(rng, {300, 600}, -0.1f, 0.1f),
           b = rng_uniform<float>(rng, {300}, -0.1f, 0.1f);
  for (auto _ : st) benchmark::DoNotOptimize(nn::reference::fc_forward(x, w, b, true));
}
void Fc(benchmark::State& st) {
  omp_set_num_threads(static_cast<int>(st.range(0)));
  Rng rng(3);
  const TF x = rng_uniform<float>(rng, {16, 150, 2, 2}, -1, 1), w = rng_uniform<float>(rng, {300, 600}, -0.1f, 0.1f),
           b = rng_uniform<float>(rng, {300}, -0.1f, 0.1f);
  for (auto _ : st) benchmark::DoNotOptimize(nn::kernels::fc_forward(x, w, b, true));
}

// The WLS system product on a 256x256 plane, the inner loop of each CG step.
void WlsApplySerial(benchmark::State& st) {
  Rng rng(4);
  const auto L = rng_uniform<double>(rng, {1, 256, 256}, 0, 100);
  const auto sys = img::build_wls_system(L, img::WlsParams{});
  std::vector<double> u(L.data().begin(), L.data().end()), out(u.size());
  for (auto _ : st) {
    sys.apply_serial(u, out);
    benchmark::DoNotOptimize(out.data());
  }
}
void WlsApply(benchmark::State& st) {
  omp_set_num_threads(static_cast<int>(st.range(0)));
  Rng rng(4);
  const auto L = rng_uniform<double>(rng, {1, 256, 256}, 0, 100);
  const auto sys = img::build_wls_system(L, img::WlsParams{});
  std::vector<double> u(L.data().begin(), L.data().end()), out(u.size());
  for (auto _ : st) {
    sys.apply(u, out);
    benchmark::DoNotOptimize(out.data());
  }
}

}  // namespace

BENCHMARK(ConvForwardReference)->Unit(benchmark::kMillisecond);
BENCHMARK(ConvForward)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(ConvBackwardReference)->Unit(benchmark::kMillisecond);
BENCHMARK(ConvBackward)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(FcReference)->Unit(benchmark::kMicrosecond);
BENCHMARK(Fc)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMicrosecond);
BENCHMARK(WlsApplySerial)->Unit(benchmark::kMicrosecond);
BENCHMARK(WlsApply)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
