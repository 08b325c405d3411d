#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "mdpabs/core.hpp"
#include "mdpabs/semantics.hpp"

namespace mdpabs {

/// [lower, upper) in normalized units; the last interval of a dimension is closed.
struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  bool closed = false;
  std::size_t count = 0;
  bool underfull = false;

  double length() const { return upper - lower; }
  bool contains(double x) const { return x >= lower && (x < upper || (closed && x <= upper)); }
};

/// Greedy left-to-right cover of sorted values in [0,1]. Each interval starts at
/// the smallest uncovered value and spans d_max; the final interval is closed
/// and trimmed to the data (but never shorter than d_min). Intervals holding
/// fewer than n_min_count values are flagged underfull rather than rejected.
std::vector<Interval> partition_dimension(std::span<const double> sorted, double d_min, double d_max,
                                          std::size_t n_min_count);

// Interval containing x, or the nearest one when x falls in a gap or outside.
std::size_t locate_interval(const std::vector<Interval>& intervals, double x, bool* exact = nullptr);

struct IntervalCell {
  std::vector<int> index;  // one interval index per semantic dimension
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<StateId> members;
  bool underfull = false;
};

struct CellSpace {
  std::vector<std::vector<Interval>> partitions;
  std::vector<IntervalCell> cells;  // lexicographic by index
  std::vector<CellId> assignment;   // modeling state -> cell
  std::size_t n_min_count = 1;

  std::size_t size() const { return cells.size(); }
  std::size_t dims() const { return partitions.size(); }

  // Exact cell for theta; otherwise the occupied cell whose center is nearest
  // (theta is clamped into [0,1] first). `exact` reports which case applied.
  CellId locate(std::span<const double> theta, bool* exact = nullptr) const;
  void rebuild_lookup();

 private:
  std::map<std::vector<int>, CellId> lookup_;
};

CellSpace build_cells(const SemanticTable& table, std::vector<std::vector<Interval>> partitions,
                      std::size_t n_min_count);

struct ErrorSummary {
  double mean = 0.0;
  double max = 0.0;
};

/// Deviation of each state's semantic value from its cell mean, per dimension.
ErrorSummary compute_errors(const CellSpace& cs, const SemanticTable& table);

/// |cells| / |states|.
double reduction_level(const CellSpace& cs, std::size_t n_states);

struct RefineRecord {
  int iteration = 0;
  std::vector<double> d_max;
  double n_min = 0.0;
  std::size_t cells = 0;
  double e_mean = 0.0;
  double e_max = 0.0;
  double reduction = 0.0;
  std::vector<std::string> violations;
};

struct RefineResult {
  CellSpace cells;
  std::vector<RefineRecord> log;
  int best_iteration = 0;
  bool converged = false;
  std::vector<std::string> unmet;  // constraints still violated by the returned space
  ErrorSummary errors;
  double reduction = 0.0;
};

/// Iterates partition -> map -> error -> reduction. d_max shrinks (x0.8) when
/// an error bound fails or the reduction level drops below the band, and
/// d_max/n_min grow (x1.25) when the reduction level exceeds the band; d_max
/// stays inside [d_min, configured d_max].
/// Returns the best iteration by (violation count, e_mean).
RefineResult refine(const SemanticTable& table, const AbstractionConfig& config);

}  // namespace mdpabs
