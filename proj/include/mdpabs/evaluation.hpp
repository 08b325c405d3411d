#pragma once

#include <string>
#include <vector>

#include "mdpabs/clustering.hpp"
#include "mdpabs/core.hpp"
#include "mdpabs/interval_abstraction.hpp"
#include "mdpabs/metrics.hpp"
#include "mdpabs/semantics.hpp"

namespace mdpabs {

/// |abstract| / |concrete|.
double compression_ratio(std::size_t n_abstract, std::size_t n_concrete);

/// Per abstract state: occupancy-weighted mean of member cell semantic vectors, in raw units.
std::vector<std::vector<double>> abstract_centroids_raw(const std::vector<CellStats>& cells,
                                                        const ClusterResult& clusters, const Bounds& bounds);

/// Validation states go to their cell (nearest occupied cell when outside the
/// modeled region), then to that cell's abstract state. Error per state is the
/// mean over dimensions of |centroid - actual| in raw units.
double mean_absolute_error(const CellSpace& cs, const std::vector<CellStats>& cells, const ClusterResult& clusters,
                           const SemanticTable& validation);

struct EvalRow {
  MetricKind metric = MetricKind::spatiotemporal;
  KMethod method = KMethod::silhouette;
  int k = 0;
  std::size_t cells = 0;            // after interval abstraction
  std::size_t abstract_states = 0;  // after clustering
  double cr = 0.0;                  // abstract states / modeling states
  double mae = 0.0;
};

struct EvalReport {
  std::string dataset;
  std::uint64_t modeling_hash = 0;
  std::uint64_t validation_hash = 0;
  std::size_t modeling_states = 0;
  std::size_t validation_states = 0;
  MetricKind k_metric = MetricKind::spatiotemporal;
  std::vector<EvalRow> rows;

  const EvalRow* find(MetricKind metric, KMethod method) const;
  std::string table() const;  // aligned plain text
};

}  // namespace mdpabs
