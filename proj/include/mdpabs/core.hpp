#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mdpabs {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised for malformed input files; carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

using CellId = std::uint32_t;
using ActionId = std::uint32_t;
using StateId = std::uint32_t;

/// Per-dimension min/max used to map raw semantic values onto [0,1].
struct Bounds {
  std::vector<std::string> names;
  std::vector<double> lower;
  std::vector<double> upper;

  std::size_t size() const { return lower.size(); }
};

/// (x - min)/(max - min) clamped to [0,1]. Throws if any dimension is degenerate.
std::vector<double> normalize(std::span<const double> raw, const Bounds& bounds);
void normalize_into(std::span<const double> raw, const Bounds& bounds, std::span<double> out);
std::vector<double> denormalize(std::span<const double> unit, const Bounds& bounds);

// Throws naming the first degenerate dimension.
void check_bounds(const Bounds& bounds);

struct SemanticVector {
  std::vector<double> theta;  // normalized, length J
  double v_hat = 0.0;
};

enum class DistributionDistance { total_variation };

struct MetricWeights {
  double c_reward = 1.0;
  double c_transition = 1.0;
  double c_availability = 1e6;
  double c_temporal = 0.0;
  double epsilon = 1.0;
  int temporal_window = 5;  // steps
  DistributionDistance dp = DistributionDistance::total_variation;
};

enum class MetricKind { euclidean, multistep, spatiotemporal };
enum class KMethod { elbow, silhouette, gap, canopy };

std::string to_string(MetricKind kind);
std::string to_string(KMethod method);
MetricKind parse_metric_kind(const std::string& text);
KMethod parse_k_method(const std::string& text);

struct KRange {
  int min = 2;
  int max = 40;
  int step = 2;

  // Grid restricted to [2, n_cells - 1]; always contains at least one value when n_cells >= 2.
  std::vector<int> values(std::size_t n_cells) const;
};

struct DimensionLimits {
  double d_min = 0.01;
  double d_max = 0.05;
};

struct AbstractionConfig {
  std::vector<DimensionLimits> limits;
  double n_min = 0.005;  // fraction of modeling states
  double e_mean = 0.005;
  double e_max = 0.01;
  double reduction_lo = 0.10;
  double reduction_hi = 0.30;
  double gamma = 0.95;
  double delta = 0.05;
  double p_tol = 0.25;
  std::uint64_t seed = 7;
  KMethod k_method = KMethod::silhouette;
  KRange k_range;
  double alpha = 0.5;
  double beta = 0.5;
  int max_refine_iters = 50;
  int max_cluster_iters = 100;
  MetricKind metric = MetricKind::spatiotemporal;
  MetricWeights weights;
  bool auto_split = false;
  int split_budget = 32;
};

/// Empty iff every invariant holds. Never throws.
std::vector<std::string> validate_config(const AbstractionConfig& config);

}  // namespace mdpabs
