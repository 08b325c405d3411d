#include "mdpabs/abstract_mdp.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace mdpabs {

bool AbstractMdp::has_label(const std::string& name) const {
  return std::find(label_names.begin(), label_names.end(), name) != label_names.end();
}

std::vector<std::uint8_t> AbstractMdp::label_mask(const std::string& name) const {
  const auto it = std::find(label_names.begin(), label_names.end(), name);
  if (it == label_names.end()) throw Error("unknown label '" + name + "'");
  const auto j = static_cast<std::size_t>(it - label_names.begin());
  std::vector<std::uint8_t> mask(n_states, 0);
  for (std::size_t s = 0; s < n_states; ++s) mask[s] = labels[s][j];
  return mask;
}

void AbstractMdp::validate() const {
  if (choices.size() != n_states || initial.size() != n_states) throw Error("abstract MDP: size mismatch");
  double init = 0.0;
  for (double p : initial) init += p;
  if (std::abs(init - 1.0) > 1e-9) throw Error("abstract MDP: initial distribution sums to " + std::to_string(init));
  for (std::size_t s = 0; s < n_states; ++s) {
    if (choices[s].empty()) throw Error("abstract MDP: state " + std::to_string(s) + " has no action");
    for (const auto& c : choices[s]) {
      double total = 0.0;
      for (const auto& [t, p] : c.next) {
        if (t >= n_states) throw Error("abstract MDP: successor out of range");
        total += p;
      }
      if (std::abs(total - 1.0) > 1e-9)
        throw Error("abstract MDP: row (" + std::to_string(s) + ", " + std::to_string(c.action) + ") sums to " +
                    std::to_string(total));
      if (!std::isfinite(c.reward)) throw Error("abstract MDP: non-finite reward");
    }
  }
}

double hoeffding_bound(std::size_t n, double delta) {
  if (n == 0) throw Error("hoeffding_bound: n must be positive");
  if (!(delta > 0 && delta < 1)) throw Error("hoeffding_bound: δ must be in (0,1)");
  return std::sqrt(std::log(2.0 / delta) / (2.0 * static_cast<double>(n)));
}

AbstractMdp build_abstract_mdp(const TrajectoryDataset& ds, std::span<const StateId> state_map, std::size_t n_states,
                               const ActionAbstraction& actions, double gamma, double delta, double p_tol) {
  if (state_map.size() != ds.size()) throw Error("build_abstract_mdp: state map does not cover the dataset");
  if (n_states == 0) throw Error("build_abstract_mdp: no abstract states");
  struct Acc {
    std::size_t count = 0;
    double reward = 0.0;
    std::map<StateId, std::size_t> next;
  };
  std::vector<std::map<ActionId, Acc>> acc(n_states);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (state_map[i] >= n_states) throw Error("build_abstract_mdp: abstract state out of range");
    const auto succ = ds.successor(i);
    if (succ == TrajectoryDataset::npos) continue;
    auto& a = acc[state_map[i]][actions.abstract_id(ds.states[i].action)];
    a.count += 1;
    a.reward += ds.states[i].reward;
    a.next[state_map[succ]] += 1;
  }

  AbstractMdp mdp;
  mdp.n_states = n_states;
  mdp.n_actions = actions.action_count();
  mdp.gamma = gamma;
  mdp.choices.resize(n_states);
  mdp.degenerate.assign(n_states, 0);
  for (std::size_t s = 0; s < n_states; ++s) {
    for (const auto& [action, a] : acc[s]) {
      const double bound = hoeffding_bound(a.count, delta);
      if (bound > p_tol) {
        mdp.pruned.push_back({static_cast<StateId>(s), action, a.count, bound});
        continue;
      }
      MdpChoice c;
      c.action = action;
      c.count = a.count;
      c.bound = bound;
      c.reward = a.reward / static_cast<double>(a.count);
      for (const auto& [t, k] : a.next) c.next.emplace_back(t, static_cast<double>(k) / static_cast<double>(a.count));
      mdp.choices[s].push_back(std::move(c));
    }
    if (mdp.choices[s].empty()) {
      mdp.degenerate[s] = 1;
      mdp.choices[s].push_back({kNoAction, 0, 0.0, {{static_cast<StateId>(s), 1.0}}, 0.0});
    }
  }

  mdp.initial.assign(n_states, 0.0);
  for (const auto& ep : ds.episodes) mdp.initial[state_map[ep.begin]] += 1.0;
  for (auto& p : mdp.initial) p /= static_cast<double>(ds.episodes.size());

  attach_labels(mdp, ds, state_map);
  return mdp;
}

void attach_labels(AbstractMdp& mdp, const TrajectoryDataset& ds, std::span<const StateId> state_map) {
  mdp.label_names = ds.schema.labels;
  const std::size_t m = mdp.label_names.size();
  mdp.labels.assign(mdp.n_states, std::vector<std::uint8_t>(m, 0));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& l = ds.states[i].labels;
    for (std::size_t j = 0; j < m && j < l.size(); ++j)
      if (l[j]) mdp.labels[state_map[i]][j] = 1;
  }
}

}  // namespace mdpabs
