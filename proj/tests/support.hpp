#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "mdpabs/abstract_mdp.hpp"
#include "mdpabs/dataset.hpp"
#include "mdpabs/metrics.hpp"

namespace testsupport {

using namespace mdpabs;

struct Row {
  std::vector<double> features;
  double action = 0.0;
  double reward = 0.0;
  std::vector<std::uint8_t> labels;
};

// Each episode gets a trailing terminal row that copies the last row's features and labels.
inline TrajectoryDataset make_dataset(const Schema& schema, const std::vector<std::vector<Row>>& episodes) {
  TrajectoryDataset ds;
  ds.schema = schema;
  for (std::size_t e = 0; e < episodes.size(); ++e) {
    const auto& ep = episodes[e];
    for (std::size_t t = 0; t <= ep.size(); ++t) {
      ConcreteState s;
      s.episode = static_cast<std::int64_t>(e);
      s.t = static_cast<std::int64_t>(t);
      const Row& src = t < ep.size() ? ep[t] : ep.back();
      s.features = src.features;
      s.labels = src.labels.empty() ? std::vector<std::uint8_t>(schema.labels.size(), 0) : src.labels;
      s.action.assign(schema.action_dim, 0.0);
      if (t < ep.size()) {
        s.action[0] = src.action;
        s.reward = src.reward;
      } else {
        s.terminal = true;
      }
      ds.states.push_back(std::move(s));
    }
  }
  ds.reindex();
  ds.content_hash = dataset_hash(ds);
  return ds;
}

inline std::filesystem::path temp_dir(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() / ("mdpabs_test_" + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// ---- random MDPs and exhaustive oracles ----

inline AbstractMdp random_mdp(std::mt19937_64& rng, std::size_t max_states, std::size_t max_actions) {
  std::uniform_int_distribution<std::size_t> ns(1, max_states);
  std::uniform_int_distribution<std::size_t> na(1, max_actions);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  AbstractMdp m;
  m.n_states = ns(rng);
  m.n_actions = na(rng);
  m.gamma = 0.9;
  m.choices.resize(m.n_states);
  for (std::size_t s = 0; s < m.n_states; ++s) {
    std::vector<ActionId> acts;
    for (ActionId a = 0; a < m.n_actions; ++a)
      if (u(rng) < 0.7) acts.push_back(a);
    if (acts.empty()) acts.push_back(static_cast<ActionId>(rng() % m.n_actions));
    for (auto a : acts) {
      MdpChoice c;
      c.action = a;
      c.count = 1;
      c.reward = std::round((u(rng) * 4.0 - 1.0) * 100.0) / 100.0;
      std::vector<double> w(m.n_states);
      double sum = 0.0;
      for (auto& x : w) {
        x = u(rng) < 0.5 ? u(rng) : 0.0;
        sum += x;
      }
      if (sum == 0.0) {
        w[rng() % m.n_states] = 1.0;
        sum = 1.0;
      }
      for (std::size_t t = 0; t < m.n_states; ++t)
        if (w[t] > 0) c.next.emplace_back(static_cast<StateId>(t), w[t] / sum);
      m.choices[s].push_back(std::move(c));
    }
  }
  std::vector<double> init(m.n_states);
  double sum = 0.0;
  for (auto& x : init) {
    x = u(rng) < 0.6 ? u(rng) : 0.0;
    sum += x;
  }
  if (sum == 0.0) {
    init[0] = 1.0;
    sum = 1.0;
  }
  for (auto& x : init) x /= sum;
  m.initial = init;
  m.label_names = {"goal"};
  m.labels.assign(m.n_states, {0});
  for (auto& l : m.labels) l[0] = u(rng) < 0.3;
  m.degenerate.assign(m.n_states, 0);
  m.validate();
  return m;
}

// Optimum over every history-dependent deterministic policy, by explicit
// recursion over the history tree (no sharing of subproblems between histories).
inline double history_reward(const AbstractMdp& m, std::size_t s, int steps, bool minimize) {
  if (steps == 0) return 0.0;
  double best = minimize ? INFINITY : -INFINITY;
  for (const auto& c : m.choices[s]) {
    double v = c.reward;
    for (const auto& [t, p] : c.next) v += p * history_reward(m, t, steps - 1, minimize);
    best = minimize ? std::min(best, v) : std::max(best, v);
  }
  return best;
}

inline double history_reach(const AbstractMdp& m, std::size_t s, int steps) {
  if (m.labels[s][0]) return 1.0;
  if (steps == 0) return 0.0;
  double best = 0.0;
  for (const auto& c : m.choices[s]) {
    double v = 0.0;
    for (const auto& [t, p] : c.next) v += p * history_reach(m, t, steps - 1);
    best = std::max(best, v);
  }
  return best;
}

inline double oracle_reward_min(const AbstractMdp& m, int n) {
  double v = 0.0;
  for (std::size_t s = 0; s < m.n_states; ++s)
    if (m.initial[s] > 0) v += m.initial[s] * history_reward(m, s, n, true);
  return v;
}

inline double oracle_reach_max(const AbstractMdp& m, int n) {
  double v = 0.0;
  for (std::size_t s = 0; s < m.n_states; ++s)
    if (m.initial[s] > 0) v += m.initial[s] * history_reach(m, s, n);
  return v;
}

// Number of Markov deterministic policies (one choice per state and step).
inline double policy_count(const AbstractMdp& m, int n) {
  double c = 1.0;
  for (const auto& ch : m.choices) c *= std::pow(static_cast<double>(ch.size()), n);
  return c;
}

// Visits every Markov deterministic policy; `eval` receives choice[t][s].
inline void for_each_policy(const AbstractMdp& m, int n,
                            const std::function<void(const std::vector<std::vector<std::size_t>>&)>& eval) {
  std::vector<std::vector<std::size_t>> pick(static_cast<std::size_t>(n), std::vector<std::size_t>(m.n_states, 0));
  for (;;) {
    eval(pick);
    std::size_t t = 0;
    std::size_t s = 0;
    for (;;) {
      if (++pick[t][s] < m.choices[s].size()) break;
      pick[t][s] = 0;
      if (++s == m.n_states) {
        s = 0;
        if (++t == static_cast<std::size_t>(n)) return;
      }
    }
  }
}

// Expected cumulative reward of one policy by forward propagation of the state distribution.
inline double policy_reward(const AbstractMdp& m, const std::vector<std::vector<std::size_t>>& pick) {
  std::vector<double> dist = m.initial;
  double total = 0.0;
  for (const auto& row : pick) {
    std::vector<double> next(m.n_states, 0.0);
    for (std::size_t s = 0; s < m.n_states; ++s) {
      if (dist[s] == 0.0) continue;
      const auto& c = m.choices[s][row[s]];
      total += dist[s] * c.reward;
      for (const auto& [t, p] : c.next) next[t] += dist[s] * p;
    }
    dist = std::move(next);
  }
  return total;
}

// Probability of visiting a goal state within the horizon; goal mass is absorbed.
inline double policy_reach(const AbstractMdp& m, const std::vector<std::vector<std::size_t>>& pick) {
  std::vector<double> dist = m.initial;
  double hit = 0.0;
  for (std::size_t s = 0; s < m.n_states; ++s)
    if (m.labels[s][0]) {
      hit += dist[s];
      dist[s] = 0.0;
    }
  for (const auto& row : pick) {
    std::vector<double> next(m.n_states, 0.0);
    for (std::size_t s = 0; s < m.n_states; ++s) {
      if (dist[s] == 0.0) continue;
      for (const auto& [t, p] : m.choices[s][row[s]].next) next[t] += dist[s] * p;
    }
    for (std::size_t s = 0; s < m.n_states; ++s)
      if (m.labels[s][0]) {
        hit += next[s];
        next[s] = 0.0;
      }
    dist = std::move(next);
  }
  return hit;
}

// The MDP behind tests/golden/three_state.prism.
inline AbstractMdp three_state_mdp() {
  AbstractMdp m;
  m.n_states = 3;
  m.n_actions = 2;
  m.choices = {
      {{0, 4, 1.0, {{1, 1.0}}, 0.0}, {1, 3, 0.5, {{0, 1.0 / 3.0}, {1, 1.0 / 3.0}, {2, 1.0 / 3.0}}, 0.0}},
      {{0, 2, 2.0, {{2, 1.0}}, 0.0}},
      {{kNoAction, 0, 0.0, {{2, 1.0}}, 0.0}},
  };
  m.initial = {1.0, 0.0, 0.0};
  m.label_names = {"goal"};
  m.labels = {{0}, {0}, {1}};
  m.degenerate = {0, 0, 1};
  return m;
}

// ---- random cell statistics ----

inline CellStats random_cell(std::mt19937_64& rng, std::size_t n_actions, std::size_t n_targets) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  CellStats c;
  for (ActionId a = 0; a < n_actions; ++a) {
    if (u(rng) < 0.4) continue;
    ActionStats st;
    st.action = a;
    st.count = 1 + rng() % 20;
    st.mean_reward = u(rng) * 4.0 - 2.0;
    std::vector<double> w(n_targets);
    double sum = 0.0;
    for (auto& x : w) {
      x = u(rng) < 0.5 ? u(rng) : 0.0;
      sum += x;
    }
    if (sum == 0.0) {
      w[0] = 1.0;
      sum = 1.0;
    }
    for (std::size_t t = 0; t < n_targets; ++t)
      if (w[t] > 0) st.next.entries.emplace_back(static_cast<std::uint32_t>(t), w[t] / sum);
    c.actions.push_back(std::move(st));
  }
  c.mean_step = std::floor(u(rng) * 50.0);
  c.mean_value = u(rng) * 10.0;
  c.theta = {u(rng), u(rng)};
  c.occupancy = 1 + rng() % 30;
  return c;
}

}  // namespace testsupport
