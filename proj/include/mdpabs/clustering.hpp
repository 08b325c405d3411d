#pragma once

#include <cstdint>
#include <vector>

#include "mdpabs/core.hpp"
#include "mdpabs/metrics.hpp"
#include "mdpabs/parallel.hpp"

namespace mdpabs {

struct ClusterResult {
  std::size_t k = 0;
  std::vector<std::uint32_t> phi;  // cell -> abstract state
  std::vector<CellStats> centroids;
  std::vector<double> objective;   // sum of member-to-centroid distances after each iteration
  int iterations = 0;
  bool converged = false;

  double cost() const { return objective.empty() ? 0.0 : objective.back(); }
  std::vector<std::vector<std::uint32_t>> members() const;
};

/// k-means style alternation under an arbitrary cell metric. Cells are
/// processed in key order so the partition does not depend on input order.
/// A centroid is only replaced when the new one does not raise its cluster's
/// cost, which keeps the objective non-increasing.
ClusterResult cluster_cells(const std::vector<CellStats>& cells, std::size_t k, const CellMetric& metric,
                            std::uint64_t seed, int max_iters = 100, par::Exec exec = par::default_exec());

struct KSelection {
  KMethod method = KMethod::silhouette;
  int k = 0;
  std::vector<int> grid;
  std::vector<double> scores;  // W(k), mean silhouette or Gap(k); canopy leaves this empty
  int raw_canopies = 0;        // canopy count before clamping into the grid
};

KSelection select_k(const std::vector<CellStats>& cells, KMethod method, const KRange& range, const CellMetric& metric,
                    std::uint64_t seed, int max_iters = 100, par::Exec exec = par::default_exec());

/// Mean silhouette of a labelling over a precomputed distance matrix.
double mean_silhouette(const par::CondensedMatrix& d, const std::vector<std::uint32_t>& labels, std::size_t k);

/// Number of canopies for thresholds T1 = 2*T2, T2 = median pairwise distance.
int canopy_count(const par::CondensedMatrix& d, std::uint64_t seed);

/// Random reference cells for the gap statistic, shaped like `cells`.
std::vector<CellStats> gap_reference(const std::vector<CellStats>& cells, MetricKind kind, std::uint64_t seed);

struct EpsilonReport {
  double epsilon = 0.0;
  std::vector<double> diameters;  // per abstract state, after any splits
  std::vector<std::uint32_t> split;  // ids of clusters that were bisected
  bool satisfied = true;
};

double cluster_diameter(const std::vector<CellStats>& cells, const std::vector<std::uint32_t>& members,
                        const CellMetric& metric);

/// Checks max intra-cluster distance <= epsilon; with auto_split the widest
/// offending cluster is bisected by 2-means, up to `budget` times.
EpsilonReport validate_epsilon(const std::vector<CellStats>& cells, ClusterResult& clusters, const CellMetric& metric,
                               double epsilon, bool auto_split = false, int budget = 32, std::uint64_t seed = 7);

}  // namespace mdpabs
