#include <fstream>
#include <set>

#include "doctest.h"
#include "mdpabs/dataset.hpp"
#include "support.hpp"

using namespace mdpabs;
using testsupport::Row;

namespace {

const Schema kSchema{{"gap", "speed"}, 1, {"isCrashed"}};

// episodes x rows_per_episode rows, the last row of each episode terminal.
std::string fixture_csv(int episodes, int rows_per_episode) {
  std::string out = "episode,t,gap,speed,action_0,reward,terminal,isCrashed\n";
  for (int e = 0; e < episodes; ++e)
    for (int t = 0; t < rows_per_episode; ++t) {
      const bool last = t + 1 == rows_per_episode;
      out += std::to_string(e) + "," + std::to_string(t) + "," + std::to_string(10 + t) + "," +
             std::to_string(20 - 0.1 * t) + ",0.5," + (last ? "0" : "1") + "," + (last ? "1" : "0") + ",0\n";
    }
  return out;
}

std::vector<std::vector<Row>> constant_episodes(int n, int len) {
  std::vector<std::vector<Row>> eps(static_cast<std::size_t>(n));
  for (int e = 0; e < n; ++e)
    for (int t = 0; t < len; ++t) eps[static_cast<std::size_t>(e)].push_back({{double(e), double(t)}, 0.0, 1.0, {}});
  return eps;
}

}  // namespace

TEST_CASE("a 150-row three-episode file loads with every row") {
  const auto dir = testsupport::temp_dir("ingest_csv");
  const auto path = dir / "three.csv";
  std::ofstream(path) << fixture_csv(3, 50);
  const auto ds = load_trajectories(path, kSchema);
  CHECK(ds.episodes.size() == 3);
  CHECK(ds.size() == 150);
  for (const auto& ep : ds.episodes) {
    CHECK(ep.size() == 50);
    CHECK(ds.states[ep.end - 1].terminal);
    for (std::size_t i = ep.begin; i + 1 < ep.end; ++i) CHECK_FALSE(ds.states[i].terminal);
  }
}

TEST_CASE("an empty file has no episodes") {
  try {
    parse_csv("", kSchema);
    FAIL("expected an error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("no episodes") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_jsonl("\n\n", kSchema), ParseError);
}

TEST_CASE("a row missing its reward field fails at that line") {
  std::string text = fixture_csv(1, 3);
  text += "1,0,5,5,0.1,1\n";  // line 5: reward/terminal/label columns cut short
  try {
    parse_csv(text, kSchema);
    FAIL("expected an error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 5);
  }
}

TEST_CASE("a header without required columns lists them") {
  try {
    parse_csv("episode,t,gap,action_0,terminal,isCrashed\n0,0,1,0,1,0\n", kSchema);
    FAIL("expected an error");
  } catch (const ParseError& e) {
    const std::string what = e.what();
    CHECK(what.find("speed") != std::string::npos);
    CHECK(what.find("reward") != std::string::npos);
  }
}

TEST_CASE("non-numeric values and broken episode structure are rejected") {
  CHECK_THROWS_AS(parse_csv("episode,t,gap,speed,action_0,reward,terminal,isCrashed\n0,0,x,1,0,0,1,0\n", kSchema),
                  ParseError);
  // no terminal row
  CHECK_THROWS_AS(parse_csv("episode,t,gap,speed,action_0,reward,terminal,isCrashed\n0,0,1,1,0,0,0,0\n", kSchema),
                  ParseError);
  // step index going backwards
  CHECK_THROWS_AS(parse_csv("episode,t,gap,speed,action_0,reward,terminal,isCrashed\n0,1,1,1,0,0,0,0\n0,0,1,1,0,0,1,0\n",
                            kSchema),
                  ParseError);
}

TEST_CASE("JSONL rows parse into the same dataset as the CSV form") {
  std::string jsonl;
  jsonl += R"({"episode":0,"t":0,"features":{"gap":10,"speed":20},"action":[0.5],"reward":1,"terminal":false,"labels":{"isCrashed":false}})" "\n";
  jsonl += R"({"episode":0,"t":1,"features":{"gap":11,"speed":19.9},"action":[0.5],"reward":0,"terminal":true,"labels":{"isCrashed":true}})" "\n";
  const auto a = parse_jsonl(jsonl, kSchema);
  const auto b = parse_csv(
      "episode,t,gap,speed,action_0,reward,terminal,isCrashed\n0,0,10,20,0.5,1,0,0\n0,1,11,19.9,0.5,0,1,1\n", kSchema);
  CHECK(to_csv(a) == to_csv(b));
  CHECK_THROWS_AS(parse_jsonl(R"({"episode":0,"t":0})" "\n", kSchema), ParseError);
  try {
    parse_jsonl(jsonl + "{not json}\n", kSchema);
    FAIL("expected an error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("CSV write and reload preserve the dataset") {
  const auto ds = testsupport::make_dataset(kSchema, constant_episodes(4, 7));
  const auto dir = testsupport::temp_dir("ingest_roundtrip");
  write_csv(ds, dir / "ds.csv");
  const auto back = load_trajectories(dir / "ds.csv", kSchema);
  CHECK(to_csv(back) == to_csv(ds));
  CHECK(dataset_hash(back) == dataset_hash(ds));
}

TEST_CASE("split of 1000 episodes at 8:2 gives 800/200") {
  const auto ds = testsupport::make_dataset(kSchema, constant_episodes(1000, 2));
  const auto [m, v] = split_dataset(ds, {8, 2}, 42);
  CHECK(m.episodes.size() == 800);
  CHECK(v.episodes.size() == 200);
}

TEST_CASE("split of 5 episodes at 8:2 gives 4/1") {
  const auto ds = testsupport::make_dataset(kSchema, constant_episodes(5, 3));
  const auto [m, v] = split_dataset(ds, {8, 2}, 1);
  CHECK(m.episodes.size() == 4);
  CHECK(v.episodes.size() == 1);
}

TEST_CASE("split is deterministic per seed and varies with it") {
  const auto ds = testsupport::make_dataset(kSchema, constant_episodes(10, 3));
  const auto a = split_dataset(ds, {8, 2}, 9);
  const auto b = split_dataset(ds, {8, 2}, 9);
  CHECK(to_csv(a.second) == to_csv(b.second));
  bool differs = false;
  for (std::uint64_t s = 0; s < 20 && !differs; ++s) differs = to_csv(split_dataset(ds, {8, 2}, s).second) != to_csv(a.second);
  CHECK(differs);
}

TEST_CASE("split is episode-atomic and partitions the episodes") {
  const auto ds = testsupport::make_dataset(kSchema, constant_episodes(37, 4));
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto [m, v] = split_dataset(ds, {8, 2}, seed);
    std::multiset<std::int64_t> ids;
    for (const auto& e : m.episodes) ids.insert(e.id);
    for (const auto& e : v.episodes) ids.insert(e.id);
    CHECK(ids.size() == 37);
    CHECK(std::set<std::int64_t>(ids.begin(), ids.end()).size() == 37);
    CHECK(m.size() + v.size() == ds.size());
    for (const auto* part : {&m, &v})
      for (const auto& e : part->episodes) CHECK(e.size() == 5);
  }
  const auto one = testsupport::make_dataset(kSchema, constant_episodes(1, 4));
  CHECK_THROWS_AS(split_dataset(one, {8, 2}, 0), Error);
}

TEST_CASE("returns follow the discounted backward sum") {
  std::vector<std::vector<Row>> eps{{{{0, 0}, 0, 1.0, {}}, {{0, 0}, 0, 1.0, {}}, {{0, 0}, 0, 1.0, {}}}};
  // make_dataset appends a zero-reward terminal row
  const auto ds = annotate_returns(testsupport::make_dataset(kSchema, eps), 0.5);
  CHECK(ds.states[0].v_hat == doctest::Approx(1.75));
  CHECK(ds.states[1].v_hat == doctest::Approx(1.5));
  CHECK(ds.states[2].v_hat == doctest::Approx(1.0));
  CHECK(ds.states[3].v_hat == 0.0);
}

TEST_CASE("returns of a rewardless dataset are zero and a single step keeps its reward") {
  auto zero = annotate_returns(testsupport::make_dataset(kSchema, {{{{0, 0}, 0, 0.0, {}}, {{0, 0}, 0, 0.0, {}}}}), 0.9);
  for (const auto& s : zero.states) CHECK(s.v_hat == 0.0);
  auto single = annotate_returns(testsupport::make_dataset(kSchema, {{{{0, 0}, 0, 7.0, {}}}}), 0.95);
  CHECK(single.states[0].v_hat == 7.0);
}

TEST_CASE("returns satisfy the one-step recursion exactly on random data") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  std::vector<std::vector<Row>> eps(20);
  for (auto& ep : eps) {
    const int len = 1 + static_cast<int>(rng() % 30);
    for (int t = 0; t < len; ++t) ep.push_back({{0, 0}, 0, u(rng), {}});
  }
  const double g = 0.93;
  const auto ds = annotate_returns(testsupport::make_dataset(kSchema, eps), g);
  for (std::size_t i = 0; i < ds.size(); ++i)
    if (!ds.states[i].terminal) CHECK(ds.states[i].v_hat == ds.states[i].reward + g * ds.states[i + 1].v_hat);
  CHECK_THROWS_AS(annotate_returns(ds, 1.0), Error);
}
