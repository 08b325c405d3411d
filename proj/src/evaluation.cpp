#include "mdpabs/evaluation.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace mdpabs {

double compression_ratio(std::size_t n_abstract, std::size_t n_concrete) {
  if (n_concrete == 0) throw Error("compression_ratio: no concrete states");
  return static_cast<double>(n_abstract) / static_cast<double>(n_concrete);
}

std::vector<std::vector<double>> abstract_centroids_raw(const std::vector<CellStats>& cells,
                                                        const ClusterResult& clusters, const Bounds& bounds) {
  const std::size_t dims = bounds.size();
  std::vector<std::vector<double>> sum(clusters.k, std::vector<double>(dims, 0.0));
  std::vector<double> weight(clusters.k, 0.0);
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const auto a = clusters.phi[c];
    const auto w = static_cast<double>(cells[c].occupancy);
    weight[a] += w;
    for (std::size_t j = 0; j < dims; ++j) sum[a][j] += w * cells[c].theta[j];
  }
  for (std::size_t a = 0; a < clusters.k; ++a) {
    if (weight[a] > 0)
      for (auto& x : sum[a]) x /= weight[a];
    sum[a] = denormalize(sum[a], bounds);
  }
  return sum;
}

double mean_absolute_error(const CellSpace& cs, const std::vector<CellStats>& cells, const ClusterResult& clusters,
                           const SemanticTable& validation) {
  const std::size_t n = validation.size();
  if (n == 0) throw Error("mean_absolute_error: empty validation set");
  const auto centroids = abstract_centroids_raw(cells, clusters, validation.bounds);
  const auto dims = static_cast<double>(validation.dims);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& y = centroids[clusters.phi[cs.locate(validation.row(i))]];
    const auto actual = validation.raw_row(i);
    double e = 0.0;
    for (std::size_t j = 0; j < validation.dims; ++j) e += std::abs(y[j] - actual[j]);
    total += e / dims;
  }
  return total / static_cast<double>(n);
}

const EvalRow* EvalReport::find(MetricKind metric, KMethod method) const {
  for (const auto& r : rows)
    if (r.metric == metric && r.method == method) return &r;
  return nullptr;
}

std::string EvalReport::table() const {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "%-15s %-11s %5s %8s %8s %9s %12s\n", "metric", "k-method", "k", "cells",
                "states", "CR(%)", "MAE");
  os << line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-15s %-11s %5d %8zu %8zu %9.3f %12.6f\n", to_string(r.metric).c_str(),
                  to_string(r.method).c_str(), r.k, r.cells, r.abstract_states, 100.0 * r.cr, r.mae);
    os << line;
  }
  return os.str();
}

}  // namespace mdpabs
