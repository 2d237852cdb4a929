// SPDX-License-Identifier: Apache-2.0
//
// nfra: near-field localization with reconfigurable antenna arrays
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------


#include "nfra/config.hpp"
#include "nfra/fim.hpp"
#include "nfra/localizer.hpp"
#include "nfra/precoder.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace nfra;

namespace
{
    ExperimentConfig bench_config(int n)
    {
        ExperimentConfig c;
        c.array_rows = c.array_cols = n;
        c.sample_lattice = {3, 3, 3};
        return c;
    }

    const Vec3 kUe(10.35, 1.67, 0.0);
}

static void BM_EffectiveArv(benchmark::State &state)
{
    const ExperimentConfig c = bench_config(static_cast<int>(state.range(0)));
    const ArrayModel model = c.array_model(static_cast<int>(state.range(1)));
    std::vector<cdouble> out(static_cast<std::size_t>(model.dimension()));
    for (auto _ : state)
    {
        effective_arv_into(model, kUe, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * model.dimension());
}
BENCHMARK(BM_EffectiveArv)->Args({16, 1})->Args({16, 9})->Args({50, 9});

static void BM_Fim(benchmark::State &state)
{
    const ExperimentConfig c = bench_config(static_cast<int>(state.range(0)));
    const ArrayModel model = c.array_model(c.num_bases);
    const Codebook cb = build_codebook(model, c.scenario.region, c.codebook_lattice);
    const CMatrix unit = cb.unit_matrix();
    const StateParams st{kUe, 1e-4, 0.0};
    for (auto _ : state)
        benchmark::DoNotOptimize(fim(model, unit, cb.weights(), st, 1.0, c.scenario.noise_variance()).info);
}
BENCHMARK(BM_Fim)->Arg(16)->Arg(50)->Unit(benchmark::kMicrosecond);

static void BM_AllocatePower(benchmark::State &state)
{
    const ExperimentConfig c = bench_config(16);
    const ArrayModel model = c.array_model(c.num_bases);
    const Codebook cb = build_codebook(model, c.scenario.region, c.codebook_lattice);
    const auto samples = inclusive_lattice(c.scenario.region, c.sample_lattice);
    for (auto _ : state)
        benchmark::DoNotOptimize(allocate_power(cb, samples, model, c.scenario).max_peb_trace);
}
BENCHMARK(BM_AllocatePower)->Unit(benchmark::kMillisecond);

static void BM_CoarseDictionary(benchmark::State &state)
{
    const ExperimentConfig c = bench_config(16);
    const ArrayModel model = c.array_model(c.num_bases);
    const SignalModel signal(model, build_codebook(model, c.scenario.region, c.codebook_lattice));
    const GridSpec grid{c.scenario.region, Vec3::Ones()};
    for (auto _ : state)
        benchmark::DoNotOptimize(build_dictionary(signal, grid).columns.data());
}
BENCHMARK(BM_CoarseDictionary)->Unit(benchmark::kMillisecond);

static void BM_Localize(benchmark::State &state)
{
    const ExperimentConfig c = bench_config(16);
    const ArrayModel model = c.array_model(c.num_bases);
    const SignalModel signal(model, build_codebook(model, c.scenario.region, c.codebook_lattice));
    const Localizer loc(signal, c.scenario.region);
    std::mt19937_64 rng(1);
    CVector y = 1e-3 * signal.model_vector(kUe);
    for (Eigen::Index t = 0; t < y.size(); ++t)
        y[t] += complex_gaussian(rng, 1e-3 * y.squaredNorm() / static_cast<double>(y.size()));
    loc.localize(y); // warm the mid-stage cache
    for (auto _ : state)
        benchmark::DoNotOptimize(loc.localize(y).refined.position);
}
BENCHMARK(BM_Localize)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
