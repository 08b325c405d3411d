#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mdpabs/action_abstraction.hpp"
#include "mdpabs/core.hpp"
#include "mdpabs/dataset.hpp"

namespace mdpabs {

// Action id of the self-loop given to states without any retained action.
inline constexpr ActionId kNoAction = std::numeric_limits<ActionId>::max();

struct MdpChoice {
  ActionId action = 0;
  std::size_t count = 0;
  double reward = 0.0;
  std::vector<std::pair<StateId, double>> next;  // sorted by target
  double bound = 0.0;                            // Hoeffding half-width for `count`
};

struct PrunedPair {
  StateId state = 0;
  ActionId action = 0;
  std::size_t count = 0;
  double bound = 0.0;
};

struct AbstractMdp {
  std::size_t n_states = 0;
  std::size_t n_actions = 0;  // size of the abstract action space
  double gamma = 0.95;
  std::vector<std::vector<MdpChoice>> choices;  // per state, sorted by action
  std::vector<double> initial;
  std::vector<std::string> label_names;
  std::vector<std::vector<std::uint8_t>> labels;  // [state][label]
  std::vector<std::uint8_t> degenerate;
  std::vector<PrunedPair> pruned;

  bool has_label(const std::string& name) const;
  std::vector<std::uint8_t> label_mask(const std::string& name) const;  // throws if unknown
  // Throws unless every row is stochastic within 1e-9 and the initial distribution sums to 1.
  void validate() const;
};

/// sqrt(ln(2/δ) / (2n)).
double hoeffding_bound(std::size_t n, double delta);

/// Pools every non-terminal transition of `ds` through `state_map`
/// (concrete state index -> abstract state). Pairs whose Hoeffding half-width
/// exceeds p_tol are dropped; p_tol = +inf keeps everything. States left
/// without actions become absorbing self-loops with reward 0.
AbstractMdp build_abstract_mdp(const TrajectoryDataset& ds, std::span<const StateId> state_map, std::size_t n_states,
                               const ActionAbstraction& actions, double gamma, double delta, double p_tol);

/// A state carries a label iff any of its member concrete states does.
void attach_labels(AbstractMdp& mdp, const TrajectoryDataset& ds, std::span<const StateId> state_map);

}  // namespace mdpabs
