#include <random>

#include "doctest.h"
#include "mdpabs/interval_abstraction.hpp"
#include "mdpabs/metrics.hpp"
#include "mdpabs/semantics.hpp"
#include "support.hpp"

using namespace mdpabs;
using testsupport::Row;

namespace {

SparseDist dist(std::vector<std::pair<std::uint32_t, double>> e) { return SparseDist{std::move(e)}; }

CellStats cell(std::vector<ActionStats> actions, double step = 0.0) {
  CellStats c;
  c.actions = std::move(actions);
  c.mean_step = step;
  c.theta = {0.0};
  c.occupancy = 1;
  return c;
}

// Brute-force TV over a dense support.
double dense_tv(const SparseDist& p, const SparseDist& q, std::size_t support) {
  double s = 0.0;
  for (std::uint32_t x = 0; x < support; ++x) s += std::abs(p.at(x) - q.at(x));
  return 0.5 * s;
}

}  // namespace

TEST_CASE("euclidean distance") {
  const std::vector<double> a{0, 0};
  const std::vector<double> b{3, 4};
  CHECK(d_euclidean(a, a) == 0.0);
  CHECK(d_euclidean(a, b) == 5.0);
  CHECK_THROWS_AS(d_euclidean(a, std::vector<double>{1.0}), Error);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int i = 0; i < 500; ++i) {
    std::vector<double> x(5);
    std::vector<double> y(5);
    double s = 0.0;
    for (int j = 0; j < 5; ++j) {
      x[j] = u(rng);
      y[j] = u(rng);
      s += (x[j] - y[j]) * (x[j] - y[j]);
    }
    CHECK(d_euclidean(x, y) == doctest::Approx(std::sqrt(s)).epsilon(1e-14));
    CHECK(d_euclidean(x, y) == d_euclidean(y, x));
  }
}

TEST_CASE("total variation distance") {
  const auto p = dist({{0, 0.75}, {1, 0.25}});
  const auto q = dist({{0, 0.5}, {1, 0.5}});
  CHECK(d_tv(p, p) == 0.0);
  CHECK(d_tv(p, q) == doctest::Approx(0.25));
  CHECK(d_tv(dist({{0, 1.0}}), dist({{3, 0.5}, {4, 0.5}})) == 1.0);
  CHECK_THROWS_AS(d_tv(dist({{0, 0.7}}), q), Error);
}

TEST_CASE("sparse TV agrees with a dense computation and stays in [0,1]") {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 1000; ++i) {
    const auto a = testsupport::random_cell(rng, 1, 8);
    const auto b = testsupport::random_cell(rng, 1, 8);
    if (a.actions.empty() || b.actions.empty()) continue;
    const auto& p = a.actions[0].next;
    const auto& q = b.actions[0].next;
    const double tv = d_tv(p, q);
    CHECK(tv == doctest::Approx(dense_tv(p, q, 8)).epsilon(1e-12));
    CHECK(tv >= 0.0);
    CHECK(tv <= 1.0);
  }
}

TEST_CASE("multistep distance examples") {
  MetricWeights w;
  w.c_reward = 1.0;
  w.c_transition = 1.0;
  w.c_availability = 1e6;
  const auto x = cell({{0, 5, 1.0, dist({{0, 1.0}})}});
  const auto y = cell({{0, 5, 0.5, dist({{0, 1.0}})}});
  CHECK(d_multistep(x, x, w) == 0.0);
  CHECK(d_multistep(x, y, w) == doctest::Approx(0.5));
  const auto z = cell({{0, 5, 1.0, dist({{0, 1.0}})}, {1, 2, 0.0, dist({{1, 1.0}})}});
  CHECK(d_multistep(x, z, w) >= 1e6);
  // nothing shared: only the availability term
  const auto only1 = cell({{1, 2, 9.0, dist({{1, 1.0}})}});
  CHECK(d_multistep(x, only1, w) == 1e6);
  // the max over shared actions picks the worst action
  const auto p = cell({{0, 1, 0.0, dist({{0, 1.0}})}, {1, 1, 0.0, dist({{0, 1.0}})}});
  const auto q = cell({{0, 1, 0.2, dist({{0, 1.0}})}, {1, 1, 0.0, dist({{1, 1.0}})}});
  CHECK(d_multistep(p, q, w) == doctest::Approx(1.0));
}

TEST_CASE("spatio-temporal distance adds the temporal term") {
  MetricWeights w;
  w.c_temporal = 2.0;
  w.temporal_window = 0;
  const auto a = cell({{0, 5, 1.0, dist({{0, 1.0}})}}, 3.0);
  const auto b = cell({{0, 5, 1.0, dist({{0, 1.0}})}}, 9.0);
  CHECK(d_spatiotemporal(a, a, w) == 0.0);
  CHECK(d_spatiotemporal(a, b, w) == 2.0);
  w.temporal_window = 12;
  CHECK(d_spatiotemporal(a, b, w) == doctest::Approx(1.0));
  CHECK(temporal_term(0, 30, 12) == 1.0);
  CHECK(temporal_term(4, 4, 0) == 0.0);
  w.c_temporal = 0.0;
  CHECK(d_spatiotemporal(a, b, w) == 0.0);
}

TEST_CASE("metric axioms hold on random statistics") {
  std::mt19937_64 rng(77);
  MetricWeights w;
  w.c_reward = 1.0;
  w.c_transition = 1.0;
  w.c_availability = 1e6;
  w.c_temporal = 1.5;
  w.temporal_window = 10;
  const CellMetric metrics[] = {CellMetric(MetricKind::euclidean, w), CellMetric(MetricKind::multistep, w),
                                CellMetric(MetricKind::spatiotemporal, w)};
  for (int i = 0; i < 1000; ++i) {
    const auto a = testsupport::random_cell(rng, 3, 5);
    const auto b = testsupport::random_cell(rng, 3, 5);
    const auto c = testsupport::random_cell(rng, 3, 5);
    for (const auto& d : metrics) {
      CHECK(d(a, b) >= 0.0);
      CHECK(d(a, a) == 0.0);
      CHECK(d(a, b) == d(b, a));
      CHECK(d(a, c) <= d(a, b) + d(b, c) + 1e-9);
    }
  }
}

TEST_CASE("with no temporal weight the spatio-temporal and multistep distances coincide") {
  std::mt19937_64 rng(78);
  MetricWeights w;
  w.c_temporal = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto a = testsupport::random_cell(rng, 3, 5);
    const auto b = testsupport::random_cell(rng, 3, 5);
    CHECK(d_spatiotemporal(a, b, w) == d_multistep(a, b, w));
  }
}

TEST_CASE("cell statistics count transitions, average rewards and drop unvisited actions") {
  const Schema schema{{"x"}, 1, {}};
  const ActionAbstraction actions({{"a", 0.0, 2.0, 1.0}});
  // states 0..3 live in cell A (x < 0.5), 4..5 in cell B
  const auto ds = testsupport::make_dataset(schema, {
      {{{0.0}, 0.2, 1.0, {}}, {{0.1}, 0.2, 3.0, {}}, {{0.9}, 0.2, 0.0, {}}},
      {{{0.2}, 0.2, 0.0, {}}, {{1.0}, 0.2, 0.0, {}}},
  });
  CompiledMapping cm(SemanticMapping{{{"x", "x", ""}}}, schema.features);
  const auto table = evaluate_semantics(cm, ds);
  const auto cs = build_cells(table, {{{0.0, 0.5}, {0.5, 1.0, true}}}, 1);
  REQUIRE(cs.size() == 2);
  const auto stats = cell_statistics(cs, ds, table, actions);
  const auto a = cs.assignment[0];
  const auto b = cs.assignment[2];
  // cell A: 0->A (r 1), 1->B (r 3), 4->B (r 0); the terminal rows add no transitions
  const auto* as = stats[a].find(0);
  REQUIRE(as != nullptr);
  CHECK(as->count == 3);
  CHECK(as->mean_reward == doctest::Approx(4.0 / 3.0));
  CHECK(as->next.at(a) == doctest::Approx(1.0 / 3.0));
  CHECK(as->next.at(b) == doctest::Approx(2.0 / 3.0));
  CHECK(stats[a].find(1) == nullptr);
  CHECK(stats[a].actions.size() == 1);
  CHECK(stats[a].occupancy == 3);
  CHECK(stats[a].mean_step == doctest::Approx((0.0 + 1.0 + 0.0) / 3.0));
  for (const auto& s : stats)
    for (const auto& act : s.actions) CHECK(act.next.total() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("three-to-one transitions give a 0.75 / 0.25 distribution") {
  const Schema schema{{"x"}, 1, {}};
  const ActionAbstraction actions({{"a", 0.0, 1.0, 1.0}});
  const auto ds = testsupport::make_dataset(schema, {
      {{{0.1}, 0.5, 0.0, {}}, {{0.1}, 0.5, 0.0, {}}, {{0.1}, 0.5, 0.0, {}}, {{0.1}, 0.5, 0.0, {}}},
      {{{0.9}, 0.5, 0.0, {}}},
  });
  // episode 0: A->A three times then A->A(terminal); make the last hop land in B instead
  auto mod = ds;
  mod.states[4].features = {0.9};
  mod.content_hash = dataset_hash(mod);
  CompiledMapping cm(SemanticMapping{{{"x", "x", ""}}}, schema.features);
  const auto table = evaluate_semantics(cm, mod);
  const auto cs = build_cells(table, {{{0.0, 0.5}, {0.5, 1.0, true}}}, 1);
  const auto stats = cell_statistics(cs, mod, table, actions);
  const auto* as = stats[cs.assignment[0]].find(0);
  REQUIRE(as != nullptr);
  CHECK(as->next.at(cs.assignment[0]) == doctest::Approx(0.75));
  CHECK(as->next.at(cs.assignment[4]) == doctest::Approx(0.25));
}

TEST_CASE("centroids average members and keep majority availability") {
  const auto a = cell({{0, 2, 1.0, dist({{0, 1.0}})}, {1, 1, 4.0, dist({{1, 1.0}})}}, 2.0);
  const auto b = cell({{0, 4, 3.0, dist({{1, 1.0}})}}, 4.0);
  const auto c = cell({{2, 1, 0.0, dist({{2, 1.0}})}}, 6.0);
  {
    const CellStats* m[] = {&a, &b};
    const auto z = make_centroid(m);
    // two members: actions held by one of two survive (ties included)
    CHECK(z.actions.size() == 2);
    CHECK(z.find(0)->mean_reward == 2.0);
    CHECK(z.find(0)->next.at(0) == 0.5);
    CHECK(z.find(0)->next.at(1) == 0.5);
    CHECK(z.find(1)->mean_reward == 4.0);
    CHECK(z.mean_step == 3.0);
    CHECK(z.occupancy == 2);
  }
  {
    const CellStats* m[] = {&a, &b, &c};
    const auto z = make_centroid(m);
    REQUIRE(z.actions.size() == 1);
    CHECK(z.actions[0].action == 0);
    CHECK(z.actions[0].next.total() == doctest::Approx(1.0));
  }
}
