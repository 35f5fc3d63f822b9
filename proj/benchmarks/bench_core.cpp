#include <benchmark/benchmark.h>

#include <random>

#include "tflab/fft.hpp"
#include "tflab/lab.hpp"
#include "tflab/mfcz.hpp"
#include "tflab/modelsum.hpp"
#include "tflab/osgood.hpp"
#include "tflab/packets.hpp"
#include "tflab/suites.hpp"

using namespace tflab;

namespace {

const InghamTable& table() {
  static const InghamTable t = build_ingham(OsgoodParams(1.0), 0, 1 << 14);
  return t;
}

GridFunction noise(const Grid& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  GridFunction f(g);
  for (std::size_t i = 0; i < g.n(); ++i) f[i] = cplx(d(rng), d(rng));
  return f;
}

void BM_Spectrum(benchmark::State& st) {
  const Grid g(0.0, 64.0, static_cast<std::size_t>(st.range(0)));
  const GridFunction f = noise(g, 1);
  for (auto _ : st) benchmark::DoNotOptimize(spectrum_of(f));
  st.SetComplexityN(st.range(0));
}
BENCHMARK(BM_Spectrum)->RangeMultiplier(4)->Range(1 << 10, 1 << 18)->Complexity(benchmark::oNLogN);

void BM_BuildIngham(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(build_ingham(OsgoodParams(1.0), 0, static_cast<std::size_t>(st.range(0))));
}
BENCHMARK(BM_BuildIngham)->Arg(1 << 12)->Arg(1 << 14)->Arg(1 << 16)->Unit(benchmark::kMillisecond);

void BM_PacketRow(benchmark::State& st) {
  const Grid g(-32.0, 32.0, 1 << 16);
  const Spectrum F = spectrum_of(noise(g, 2));
  const double len = 1.0 / static_cast<double>(st.range(0));
  const auto m = static_cast<std::int64_t>(64.0 / len);
  (void)table();
  for (auto _ : st) benchmark::DoNotOptimize(packet_row_coefficients(F, len, 3.0, kSweepEps, table(), -m / 2, m / 2));
}
BENCHMARK(BM_PacketRow)->Arg(1)->Arg(8)->Arg(64)->Unit(benchmark::kMicrosecond);

void BM_BhtDirect(benchmark::State& st) {
  const Grid g(-4.0, 4.0, static_cast<std::size_t>(st.range(0)));
  const GridFunction f1 = noise(g, 3), f2 = noise(g, 4);
  for (auto _ : st) benchmark::DoNotOptimize(bht_direct(f1, f2, {1.0, -1.0}));
}
BENCHMARK(BM_BhtDirect)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_MaximalFunction(benchmark::State& st) {
  const GridFunction f = random_bumpy(5, static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(maximal_function(f, 1.0));
}
BENCHMARK(BM_MaximalFunction)->Arg(1 << 12)->Arg(1 << 16)->Unit(benchmark::kMicrosecond);

void BM_MfczDecompose(benchmark::State& st) {
  const GridFunction f = random_bumpy(6);
  const std::vector<TopDatum> tops{TopDatum(Interval{30.0, 31.0}, 0.5)};
  MfczOptions mo;
  mo.C = 1.0;
  for (auto _ : st)
    benchmark::DoNotOptimize(mfcz_decompose(f, tops, 1.0, static_cast<int>(st.range(0)), 1.0, OsgoodParams(1.0), mo));
}
BENCHMARK(BM_MfczDecompose)->DenseRange(1, 3)->Unit(benchmark::kMillisecond);

void BM_ModelSum(benchmark::State& st) {
  const TfInstance inst = random_instance(7);
  const Grid g(0.0, 64.0, 4096);
  const GridFunction f = inst.f.on(g);
  const TileCoeffs a = model_coefficients(inst.S, f, f, f, table(), kTfEps);
  for (auto _ : st) benchmark::DoNotOptimize(model_sum_from(inst.S, a));
  st.counters["tritiles"] = static_cast<double>(inst.S.size());
}
BENCHMARK(BM_ModelSum);

void BM_SmallSweep(benchmark::State& st) {
  SweepConfig cfg;
  cfg.grid_n = 4096;
  cfg.m_xi_max = 6;
  cfg.ratios = dyadic_ratios(1, 5);
  cfg.direct = st.range(0) != 0;
  (void)table();
  for (auto _ : st) benchmark::DoNotOptimize(run_sweep(cfg, table()));
}
BENCHMARK(BM_SmallSweep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
