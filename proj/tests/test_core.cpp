#include <random>

#include "doctest.h"
#include "mdpabs/core.hpp"

using namespace mdpabs;

namespace {

AbstractionConfig table_defaults() {
  AbstractionConfig c;
  c.limits = {{0.001, 0.005}, {0.001, 0.005}};
  c.n_min = 0.005;
  c.e_mean = 0.005;
  c.e_max = 0.01;
  c.gamma = 0.95;
  return c;
}

bool contains(const std::vector<std::string>& v, const std::string& needle) {
  for (const auto& s : v)
    if (s.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_CASE("validate_config accepts the reference hyper-parameters") {
  CHECK(validate_config(table_defaults()).empty());
}

TEST_CASE("validate_config reports gamma on the boundary") {
  auto c = table_defaults();
  c.gamma = 1.0;
  const auto v = validate_config(c);
  REQUIRE(v.size() == 1);
  CHECK(v[0] == "γ must be in (0,1)");
}

TEST_CASE("validate_config reports inverted interval lengths") {
  auto c = table_defaults();
  c.limits = {{0.005, 0.001}};
  const auto v = validate_config(c);
  REQUIRE(v.size() == 1);
  CHECK(contains(v, "d_MIN ≤ d_MAX violated"));
}

TEST_CASE("validate_config names each broken field") {
  auto c = table_defaults();
  c.n_min = 1.5;
  c.e_mean = 0.1;
  c.reduction_lo = 0.4;
  c.reduction_hi = 0.2;
  c.weights.epsilon = 0.0;
  c.limits.clear();
  const auto v = validate_config(c);
  CHECK(contains(v, "n_MIN"));
  CHECK(contains(v, "e_MEAN"));
  CHECK(contains(v, "r_d band"));
  CHECK(contains(v, "ε"));
  CHECK(contains(v, "J ≥ 1"));
}

TEST_CASE("validate_config is total on arbitrary finite and non-finite input") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const double specials[] = {0.0, 1.0, -1.0, INFINITY, -INFINITY, NAN};
  for (int i = 0; i < 2000; ++i) {
    AbstractionConfig c;
    c.limits = {{u(rng), u(rng)}};
    c.n_min = u(rng);
    c.e_mean = u(rng);
    c.e_max = u(rng);
    c.gamma = specials[i % 6];
    c.delta = u(rng);
    c.weights.epsilon = specials[(i / 6) % 6];
    CHECK_NOTHROW(validate_config(c));
  }
}

TEST_CASE("normalize maps bounds to 0 and 1 and interior points affinely") {
  Bounds b{{"x"}, {0.0}, {10.0}};
  CHECK(normalize(std::vector<double>{0.0}, b)[0] == 0.0);
  CHECK(normalize(std::vector<double>{10.0}, b)[0] == 1.0);
  CHECK(normalize(std::vector<double>{2.5}, b)[0] == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("normalize clamps out-of-range values") {
  Bounds b{{"x", "y"}, {0.0, -1.0}, {10.0, 1.0}};
  const auto u = normalize(std::vector<double>{-3.0, 7.0}, b);
  CHECK(u[0] == 0.0);
  CHECK(u[1] == 1.0);
}

TEST_CASE("normalize rejects a degenerate dimension by name") {
  Bounds b{{"gap", "speed"}, {0.0, 3.0}, {1.0, 3.0}};
  try {
    normalize(std::vector<double>{0.5, 3.0}, b);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("speed") != std::string::npos);
  }
}

TEST_CASE("normalize and denormalize round-trip inside the bounds") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    Bounds b;
    std::vector<double> x;
    for (int j = 0; j < 4; ++j) {
      const double lo = u(rng) * 200.0 - 100.0;
      const double hi = lo + 0.1 + u(rng) * 50.0;
      b.names.push_back("d" + std::to_string(j));
      b.lower.push_back(lo);
      b.upper.push_back(hi);
      x.push_back(lo + u(rng) * (hi - lo));
    }
    const auto back = denormalize(normalize(x, b), b);
    for (int j = 0; j < 4; ++j) CHECK(std::abs(back[j] - x[j]) <= 1e-12 * std::max(1.0, std::abs(x[j])));
  }
}

TEST_CASE("metric and k-method names parse and print symmetrically") {
  for (auto k : {MetricKind::euclidean, MetricKind::multistep, MetricKind::spatiotemporal})
    CHECK(parse_metric_kind(to_string(k)) == k);
  for (auto m : {KMethod::elbow, KMethod::silhouette, KMethod::gap, KMethod::canopy})
    CHECK(parse_k_method(to_string(m)) == m);
  CHECK_THROWS_AS(parse_metric_kind("cosine"), Error);
  CHECK_THROWS_AS(parse_k_method("dbscan"), Error);
}

TEST_CASE("k grid is restricted to [2, cells-1]") {
  KRange r{2, 40, 2};
  CHECK(r.values(10) == std::vector<int>{2, 4, 6, 8});
  CHECK(r.values(2) == std::vector<int>{2});
  CHECK(r.values(1).empty());
  KRange big{20, 200, 20};
  CHECK(big.values(5) == std::vector<int>{4});
}
