#include "mdpabs/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mdpabs {

void check_bounds(const Bounds& bounds) {
  if (bounds.lower.size() != bounds.upper.size()) throw Error("bounds: lower/upper length mismatch");
  for (std::size_t j = 0; j < bounds.size(); ++j) {
    const double lo = bounds.lower[j];
    const double hi = bounds.upper[j];
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
      const std::string name = j < bounds.names.size() ? bounds.names[j] : std::to_string(j);
      throw Error("degenerate semantic dimension '" + name + "': min must be < max");
    }
  }
}

void normalize_into(std::span<const double> raw, const Bounds& bounds, std::span<double> out) {
  if (raw.size() != bounds.size() || out.size() != bounds.size())
    throw Error("normalize: dimension mismatch");
  for (std::size_t j = 0; j < raw.size(); ++j) {
    const double x = (raw[j] - bounds.lower[j]) / (bounds.upper[j] - bounds.lower[j]);
    out[j] = std::clamp(x, 0.0, 1.0);
  }
}

std::vector<double> normalize(std::span<const double> raw, const Bounds& bounds) {
  check_bounds(bounds);
  std::vector<double> out(raw.size());
  normalize_into(raw, bounds, out);
  return out;
}

std::vector<double> denormalize(std::span<const double> unit, const Bounds& bounds) {
  if (unit.size() != bounds.size()) throw Error("denormalize: dimension mismatch");
  std::vector<double> out(unit.size());
  for (std::size_t j = 0; j < unit.size(); ++j)
    out[j] = bounds.lower[j] + unit[j] * (bounds.upper[j] - bounds.lower[j]);
  return out;
}

std::string to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::euclidean: return "euclidean";
    case MetricKind::multistep: return "multistep";
    case MetricKind::spatiotemporal: return "spatiotemporal";
  }
  return "?";
}

std::string to_string(KMethod method) {
  switch (method) {
    case KMethod::elbow: return "elbow";
    case KMethod::silhouette: return "silhouette";
    case KMethod::gap: return "gap";
    case KMethod::canopy: return "canopy";
  }
  return "?";
}

MetricKind parse_metric_kind(const std::string& text) {
  if (text == "euclidean") return MetricKind::euclidean;
  if (text == "multistep") return MetricKind::multistep;
  if (text == "spatiotemporal") return MetricKind::spatiotemporal;
  throw Error("unknown metric '" + text + "' (expected euclidean|multistep|spatiotemporal)");
}

KMethod parse_k_method(const std::string& text) {
  if (text == "elbow") return KMethod::elbow;
  if (text == "silhouette") return KMethod::silhouette;
  if (text == "gap") return KMethod::gap;
  if (text == "canopy") return KMethod::canopy;
  throw Error("unknown k-method '" + text + "' (expected elbow|silhouette|gap|canopy)");
}

std::vector<int> KRange::values(std::size_t n_cells) const {
  std::vector<int> out;
  if (n_cells < 2) return out;
  const int upper_cap = std::max(2, static_cast<int>(n_cells) - 1);
  const int lo = std::max(2, min);
  const int hi = std::min(max, upper_cap);
  const int stride = std::max(1, step);
  for (int k = lo; k <= hi; k += stride) out.push_back(k);
  if (out.empty()) out.push_back(std::min(lo, upper_cap));
  return out;
}

namespace {

bool finite_all(std::initializer_list<double> xs) {
  return std::all_of(xs.begin(), xs.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

std::vector<std::string> validate_config(const AbstractionConfig& c) {
  std::vector<std::string> v;
  if (c.limits.empty()) v.emplace_back("limits: at least one semantic dimension required (J ≥ 1)");
  for (std::size_t j = 0; j < c.limits.size(); ++j) {
    const auto& l = c.limits[j];
    const std::string where = " (dimension " + std::to_string(j) + ")";
    if (!finite_all({l.d_min, l.d_max})) {
      v.push_back("d_MIN/d_MAX must be finite" + where);
      continue;
    }
    if (!(l.d_min > 0)) v.push_back("d_MIN must be > 0" + where);
    if (!(l.d_min <= l.d_max)) v.push_back("d_MIN ≤ d_MAX violated" + where);
  }
  if (!std::isfinite(c.n_min) || !(c.n_min > 0 && c.n_min < 1)) v.emplace_back("n_MIN must be in (0,1)");
  if (!finite_all({c.e_mean, c.e_max}) || !(c.e_mean <= c.e_max))
    v.emplace_back("e_MEAN ≤ e_MAX violated");
  if (!finite_all({c.reduction_lo, c.reduction_hi}) ||
      !(c.reduction_lo > 0 && c.reduction_lo <= c.reduction_hi && c.reduction_hi < 1))
    v.emplace_back("r_d band must satisfy 0 < lo ≤ hi < 1");
  if (!std::isfinite(c.gamma) || !(c.gamma > 0 && c.gamma < 1)) v.emplace_back("γ must be in (0,1)");
  if (!std::isfinite(c.delta) || !(c.delta > 0 && c.delta < 1)) v.emplace_back("δ must be in (0,1)");
  if (std::isnan(c.p_tol) || !(c.p_tol > 0)) v.emplace_back("p_tol must be > 0");
  if (!finite_all({c.alpha, c.beta}) || c.alpha < 0 || c.beta < 0 || c.alpha + c.beta <= 0)
    v.emplace_back("α, β must be ≥ 0 with α + β > 0");
  if (c.k_range.min < 2 || c.k_range.max < c.k_range.min || c.k_range.step < 1)
    v.emplace_back("k_range must satisfy 2 ≤ min ≤ max, step ≥ 1");
  if (c.max_refine_iters < 1) v.emplace_back("max_refine_iters must be ≥ 1");
  if (c.max_cluster_iters < 1) v.emplace_back("max_cluster_iters must be ≥ 1");
  const auto& w = c.weights;
  if (!finite_all({w.c_reward, w.c_transition, w.c_availability, w.c_temporal}))
    v.emplace_back("metric weights must be finite");
  else if (w.c_reward < 0 || w.c_transition < 0 || w.c_availability < 0 || w.c_temporal < 0)
    v.emplace_back("metric weights must be ≥ 0");
  if (std::isnan(w.epsilon) || !(w.epsilon > 0)) v.emplace_back("ε must be > 0");
  if (w.temporal_window < 0) v.emplace_back("temporal_window must be ≥ 0");
  if (c.split_budget < 0) v.emplace_back("split_budget must be ≥ 0");
  return v;
}

}  // namespace mdpabs
