#pragma once

#include <span>
#include <utility>
#include <vector>

#include "mdpabs/action_abstraction.hpp"
#include "mdpabs/core.hpp"
#include "mdpabs/dataset.hpp"
#include "mdpabs/interval_abstraction.hpp"
#include "mdpabs/semantics.hpp"

namespace mdpabs {

/// Sparse probability distribution, entries sorted by target id.
struct SparseDist {
  std::vector<std::pair<std::uint32_t, double>> entries;

  double total() const;
  double at(std::uint32_t id) const;
};

struct ActionStats {
  ActionId action = 0;
  std::size_t count = 0;
  double mean_reward = 0.0;
  SparseDist next;  // over successor cells
};

/// Aggregated per-cell MDP statistics. `actions` is sorted by action id and
/// holds exactly the available actions (count > 0).
struct CellStats {
  std::vector<int> key;  // stable identity (interval index tuple); empty for virtual centroids
  std::vector<ActionStats> actions;
  double mean_step = 0.0;   // average step index of member states
  double mean_value = 0.0;  // average v_hat of member states
  std::vector<double> theta;  // mean normalized semantic vector
  std::size_t occupancy = 0;

  const ActionStats* find(ActionId a) const;
  bool same_availability(const CellStats& other) const;
};

/// Frequencies over (cell, abstract action, successor cell) from every
/// non-terminal state of `ds`; terminal states contribute occupancy only.
std::vector<CellStats> cell_statistics(const CellSpace& cs, const TrajectoryDataset& ds, const SemanticTable& table,
                                       const ActionAbstraction& actions);

double d_euclidean(std::span<const double> a, std::span<const double> b);

/// Total variation: 0.5 * sum |p - q| over the support union. Inputs must each
/// sum to 1 within 1e-6.
double d_tv(const SparseDist& p, const SparseDist& q);

/// max over shared actions of {c_R |dR| + c_P d_tv} plus c_D when availability differs.
double d_multistep(const CellStats& a, const CellStats& b, const MetricWeights& w);

/// d_multistep plus c_T * min(1, |dt| / temporal_window) on mean step index.
double d_spatiotemporal(const CellStats& a, const CellStats& b, const MetricWeights& w);

double temporal_term(double step_a, double step_b, int window);

/// Distance selected by kind; euclidean compares mean semantic vectors.
class CellMetric {
 public:
  CellMetric(MetricKind kind, MetricWeights weights) : kind_(kind), w_(weights) {}

  double operator()(const CellStats& a, const CellStats& b) const;
  MetricKind kind() const { return kind_; }
  const MetricWeights& weights() const { return w_; }

 private:
  MetricKind kind_;
  MetricWeights w_;
};

/// Virtual centroid: mean reward per action over members offering it, mixture
/// of their transition distributions, majority availability (ties included),
/// mean step/value/theta.
CellStats make_centroid(std::span<const CellStats* const> members);

}  // namespace mdpabs
