// Copyright 2026 The fsed Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Serial vs OpenMP kernels, and serial vs parallel episode evaluation.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "fsed/encoder.hpp"
#include "fsed/kernels.hpp"
#include "fsed/rng.hpp"
#include "fsed/sampler.hpp"
#include "fsed/trainer.hpp"

namespace {

std::vector<double> random_values(std::size_t n, std::uint64_t seed) {
  fsed::Rng rng(seed);
  std::normal_distribution<double> g;
  std::vector<double> v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

template <auto Kernel>
void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_values(n * n, 1), b = random_values(n * n, 2);
  std::vector<double> c(n * n);
  for (auto _ : state) {
    std::fill(c.begin(), c.end(), 0.0);
    Kernel(a, b, c, n, n, n);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n * n * n));
}

template <auto Kernel>
void BM_Sqdist(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::size_t dim = 64;
  const auto a = random_values(n * dim, 3), b = random_values(n * dim, 4);
  std::vector<double> d(n * n);
  for (auto _ : state) {
    Kernel(a, b, d, n, n, dim);
    benchmark::DoNotOptimize(d.data());
  }
}

BENCHMARK(BM_Matmul<fsed::kernels::serial::matmul_nn>)->Name("matmul_nn/serial")->Arg(64)->Arg(256);
BENCHMARK(BM_Matmul<fsed::kernels::omp::matmul_nn>)->Name("matmul_nn/omp")->Arg(64)->Arg(256);
BENCHMARK(BM_Matmul<fsed::kernels::serial::matmul_nt>)->Name("matmul_nt/serial")->Arg(64)->Arg(256);
BENCHMARK(BM_Matmul<fsed::kernels::omp::matmul_nt>)->Name("matmul_nt/omp")->Arg(64)->Arg(256);
BENCHMARK(BM_Sqdist<fsed::kernels::serial::pairwise_sqdist>)->Name("sqdist/serial")->Arg(128)->Arg(512);
BENCHMARK(BM_Sqdist<fsed::kernels::omp::pairwise_sqdist>)->Name("sqdist/omp")->Arg(128)->Arg(512);

struct EvalFixture {
  fsed::Config config;
  fsed::Dataset data;
  fsed::EncoderParams params;
  EvalFixture() {
    fsed::SynthSpec spec;
    spec.class_count = 8;
    data = fsed::synth_dataset(spec, 5);
    params = fsed::init_params(9, fsed::resolve_dims(config, data));
  }
};

void BM_EvaluateSerial(benchmark::State& state) {
  static const EvalFixture f;
  for (auto _ : state) {
    benchmark::DoNotOptimize(fsed::evaluate_serial(f.params, f.config, f.data, fsed::Stream::kTestEpisodes, 64, 1));
  }
}

void BM_EvaluateParallel(benchmark::State& state) {
  static const EvalFixture f;
  for (auto _ : state) {
    benchmark::DoNotOptimize(fsed::evaluate(f.params, f.config, f.data, fsed::Stream::kTestEpisodes, 64, 1));
  }
}

BENCHMARK(BM_EvaluateSerial)->Name("evaluate/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EvaluateParallel)->Name("evaluate/omp")->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
