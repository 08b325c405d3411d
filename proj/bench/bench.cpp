#include <benchmark/benchmark.h>

#include <random>

#include "mdpabs/clustering.hpp"
#include "mdpabs/verification.hpp"
#include "support.hpp"

using namespace mdpabs;

namespace {

std::vector<CellStats> cells(std::size_t n) {
  std::mt19937_64 rng(1);
  std::vector<CellStats> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(testsupport::random_cell(rng, 8, 64));
    out.back().key = {static_cast<int>(i)};
  }
  return out;
}

AbstractMdp big_mdp(std::size_t n) {
  std::mt19937_64 rng(2);
  AbstractMdp m;
  m.n_states = n;
  m.n_actions = 4;
  m.choices.resize(n);
  for (std::size_t s = 0; s < n; ++s)
    for (ActionId a = 0; a < 4; ++a) {
      MdpChoice c;
      c.action = a;
      c.reward = static_cast<double>(rng() % 100) / 10.0;
      for (int b = 0; b < 8; ++b) c.next.emplace_back(static_cast<StateId>(rng() % n), 0.125);
      m.choices[s].push_back(std::move(c));
    }
  m.initial.assign(n, 1.0 / static_cast<double>(n));
  m.labels.assign(n, {});
  m.degenerate.assign(n, 0);
  return m;
}

par::Exec exec_of(const benchmark::State& st) { return st.range(1) ? par::Exec::parallel : par::Exec::serial; }

void pairwise(benchmark::State& st) {
  const auto c = cells(static_cast<std::size_t>(st.range(0)));
  MetricWeights w;
  w.c_temporal = 1.0;
  const CellMetric d(MetricKind::spatiotemporal, w);
  for (auto _ : st) {
    auto m = par::pairwise(exec_of(st), c.size(), [&](std::size_t i, std::size_t j) { return d(c[i], c[j]); });
    benchmark::DoNotOptimize(m.raw().data());
  }
}

void nearest(benchmark::State& st) {
  const auto c = cells(static_cast<std::size_t>(st.range(0)));
  const std::vector<CellStats> centers(c.begin(), c.begin() + 64);
  const CellMetric d(MetricKind::multistep, MetricWeights{});
  std::vector<std::uint32_t> idx(c.size());
  std::vector<double> dist(c.size());
  for (auto _ : st) {
    par::nearest(exec_of(st), c.size(), centers.size(), [&](std::size_t i, std::size_t k) { return d(c[i], centers[k]); },
                 idx, dist);
    benchmark::DoNotOptimize(dist.data());
  }
}

void value_iteration(benchmark::State& st) {
  const auto m = big_mdp(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(bounded_reward_values(m, 60, true, exec_of(st)));
}

void clustering(benchmark::State& st) {
  const auto c = cells(static_cast<std::size_t>(st.range(0)));
  const CellMetric d(MetricKind::spatiotemporal, MetricWeights{});
  for (auto _ : st) benchmark::DoNotOptimize(cluster_cells(c, 20, d, 7, 30, exec_of(st)).cost());
}

}  // namespace

// second argument: 0 = serial reference, 1 = OpenMP
BENCHMARK(pairwise)->ArgsProduct({{500, 2000}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(nearest)->ArgsProduct({{2000, 8000}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(value_iteration)->ArgsProduct({{10000, 100000}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(clustering)->ArgsProduct({{1000}, {0, 1}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
