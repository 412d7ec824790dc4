#include <benchmark/benchmark.h>

#include <memory>

#include "spinlab/dobrushin.hpp"
#include "spinlab/measures.hpp"
#include "spinlab/mixing.hpp"
#include "spinlab/models.hpp"
#include "spinlab/samplers.hpp"
#include "spinlab/state_space.hpp"
#include "spinlab/transport.hpp"

namespace {

using namespace spinlab;

Distribution ising_chain(int n, double beta) {
  PairPotential pot;
  pot.beta = beta;
  return LatticeModel(Alphabet(2), SiteSet::chain(n), pot).joint();
}

void BM_W2Distance(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Distribution q = ising_chain(n, 0.3);
  const Distribution p = perturb(q, 0.2, 5);
  W2Options opts;
  opts.keep_coupling = false;
  for (auto _ : state)
    benchmark::DoNotOptimize(w2_distance(p, q, opts).value);
}
BENCHMARK(BM_W2Distance)->Arg(3)->Arg(5)->Arg(7)->Unit(benchmark::kMillisecond);

void BM_SweepKernelApply(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Distribution q = ising_chain(n, 0.3);
  const Distribution p = perturb(q, 0.2, 5);
  const auto kernel = random_scan_gibbs(q);
  for (auto _ : state) benchmark::DoNotOptimize(kernel->apply(p).weights());
}
BENCHMARK(BM_SweepKernelApply)->Arg(6)->Arg(10)->Unit(benchmark::kMicrosecond);

void BM_CouplingMatrix(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Distribution q = ising_chain(n, 0.3);
  for (auto _ : state) benchmark::DoNotOptimize(coupling_matrix(q).norm());
}
BENCHMARK(BM_CouplingMatrix)->Arg(4)->Arg(6)->Unit(benchmark::kMillisecond);

void BM_GoldsteinCoupling(benchmark::State& state) {
  const Distribution q = ising_chain(4, 0.4);
  const LocalSpecEnsemble spec(q);
  const IndexSet block = {0, 1, 2};
  const Distribution mu = *spec.block_conditional(block, {0}).law;
  const Distribution nu = *spec.block_conditional(block, {1}).law;
  const Site k = {4};
  for (auto _ : state)
    benchmark::DoNotOptimize(goldstein_coupling(mu, nu, k).levels.size());
}
BENCHMARK(BM_GoldsteinCoupling)->Unit(benchmark::kMicrosecond);

void BM_EstimatePhi(benchmark::State& state) {
  PairPotential pot;
  pot.beta = 0.4;
  const LatticeModel model(Alphabet(2), SiteSet::chain(4), pot, 1, 0);
  for (auto _ : state)
    benchmark::DoNotOptimize(estimate_phi(model).evaluations);
}
BENCHMARK(BM_EstimatePhi)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
