// SPDX-License-Identifier: Apache-2.0
//
// Serial reference loops against the OpenMP kernels. The second range
// argument selects the path: 0 serial, 1 parallel.
#include "fasris/monte_carlo.hpp"
#include "fasris/optimizer.hpp"
#include "fasris/presets.hpp"

#include <benchmark/benchmark.h>
#include <omp.h>

using namespace fasris;

namespace {

void label(benchmark::State& st, bool parallel)
{
    st.SetLabel(parallel ? "omp x" + std::to_string(omp_get_max_threads()) : "serial");
}

void BM_MonteCarlo(benchmark::State& st)
{
    const int M = int(st.range(0));
    const bool par = st.range(1) != 0;
    const Scenario sc = presets::uncommon_linear(M, 12, 32, 80);
    const PortSelection s = PortSelection::first(M, M);
    const PhaseShifts phi = PhaseShifts::zeros(32);
    McOptions o;
    o.trials = 200;
    o.parallel = par;
    const PrecoderKind k = PrecoderKind::rzf(default_regularizer(sc));
    for (auto _ : st) benchmark::DoNotOptimize(empirical_esr(sc, s, phi, k, o).mean);
    label(st, par);
}
BENCHMARK(BM_MonteCarlo)->ArgsProduct({{16, 32}, {0, 1}})->Unit(benchmark::kMillisecond);

void BM_PhaseGradient(benchmark::State& st)
{
    const int M = int(st.range(0));
    const bool par = st.range(1) != 0;
    const Scenario sc = presets::uncommon_linear(M, 12, 32, 80);
    const PortSelection s = PortSelection::first(M, M);
    const PhaseShifts phi = PhaseShifts::zeros(32);
    GradientOptions o;
    o.parallel = par;
    const double z = default_regularizer(sc);
    for (auto _ : st) benchmark::DoNotOptimize(esr_gradient_phases(sc, s, phi, Precoder::rzf, z, o).grad.sum());
    label(st, par);
}
BENCHMARK(BM_PhaseGradient)->ArgsProduct({{16, 32}, {0, 1}})->Unit(benchmark::kMillisecond);

void BM_PortGradient(benchmark::State& st)
{
    const bool par = st.range(0) != 0;
    const Scenario sc = presets::common_planar(20, 8, 80);
    const RVec s = RVec::Constant(sc.dims.M_tot, double(sc.dims.M) / sc.dims.M_tot);
    const PhaseShifts phi = PhaseShifts::zeros(sc.dims.L);
    PortGradientOptions o;
    o.parallel = par;
    for (auto _ : st) benchmark::DoNotOptimize(esr_gradient_ports_zf(sc, s, phi, o).grad.sum());
    label(st, par);
}
BENCHMARK(BM_PortGradient)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
