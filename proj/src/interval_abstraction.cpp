#include "mdpabs/interval_abstraction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mdpabs {

std::vector<Interval> partition_dimension(std::span<const double> sorted, double d_min, double d_max,
                                          std::size_t n_min_count) {
  if (sorted.empty()) throw Error("partition_dimension: no values");
  if (!(d_min > 0 && d_min <= d_max)) throw Error("partition_dimension: need 0 < d_min <= d_max");
  std::vector<Interval> out;
  const std::size_t n = sorted.size();
  const double hi = sorted.back();
  double prev_upper = -std::numeric_limits<double>::infinity();
  std::size_t i = 0;
  while (i < n) {
    Interval iv;
    iv.lower = sorted[i];
    if (iv.lower + d_max >= hi) {
      iv.upper = std::min(1.0, std::max(hi, iv.lower + d_min));
      if (iv.upper - iv.lower < d_min) iv.lower = std::max(prev_upper, iv.upper - d_min);
      iv.closed = true;
      iv.count = n - i;
      i = n;
    } else {
      iv.upper = iv.lower + d_max;
      const auto end = std::lower_bound(sorted.begin() + static_cast<std::ptrdiff_t>(i), sorted.end(), iv.upper);
      const auto next = static_cast<std::size_t>(end - sorted.begin());
      iv.count = next - i;
      i = next;
    }
    iv.underfull = iv.count < n_min_count;
    prev_upper = iv.upper;
    out.push_back(iv);
  }
  return out;
}

std::size_t locate_interval(const std::vector<Interval>& intervals, double x, bool* exact) {
  if (intervals.empty()) throw Error("locate_interval: empty partition");
  const auto it = std::upper_bound(intervals.begin(), intervals.end(), x,
                                   [](double v, const Interval& iv) { return v < iv.lower; });
  if (it == intervals.begin()) {
    if (exact) *exact = false;
    return 0;
  }
  const auto k = static_cast<std::size_t>(it - intervals.begin()) - 1;
  if (intervals[k].contains(x)) {
    if (exact) *exact = true;
    return k;
  }
  if (exact) *exact = false;
  if (k + 1 < intervals.size() && intervals[k + 1].lower - x < x - intervals[k].upper) return k + 1;
  return k;
}

void CellSpace::rebuild_lookup() {
  lookup_.clear();
  for (std::size_t c = 0; c < cells.size(); ++c) lookup_.emplace(cells[c].index, static_cast<CellId>(c));
}

CellId CellSpace::locate(std::span<const double> theta, bool* exact) const {
  if (theta.size() != partitions.size()) throw Error("CellSpace::locate: dimension mismatch");
  if (cells.empty()) throw Error("CellSpace::locate: empty cell space");
  std::vector<int> index(theta.size());
  bool all_exact = true;
  for (std::size_t j = 0; j < theta.size(); ++j) {
    bool e = false;
    index[j] = static_cast<int>(locate_interval(partitions[j], std::clamp(theta[j], 0.0, 1.0), &e));
    all_exact = all_exact && e;
  }
  if (const auto it = lookup_.find(index); it != lookup_.end()) {
    if (exact) *exact = all_exact;
    return it->second;
  }
  if (exact) *exact = false;
  double best = std::numeric_limits<double>::infinity();
  CellId arg = 0;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    double d2 = 0.0;
    for (std::size_t j = 0; j < theta.size(); ++j) {
      const double center = 0.5 * (cells[c].lower[j] + cells[c].upper[j]);
      const double diff = std::clamp(theta[j], 0.0, 1.0) - center;
      d2 += diff * diff;
    }
    if (d2 < best) {
      best = d2;
      arg = static_cast<CellId>(c);
    }
  }
  return arg;
}

CellSpace build_cells(const SemanticTable& table, std::vector<std::vector<Interval>> partitions,
                      std::size_t n_min_count) {
  if (partitions.size() != table.dims) throw Error("build_cells: need one partition per semantic dimension");
  CellSpace cs;
  cs.partitions = std::move(partitions);
  cs.n_min_count = n_min_count;
  const std::size_t n = table.size();
  const std::size_t dims = table.dims;

  std::vector<std::vector<int>> keys(n, std::vector<int>(dims));
  std::map<std::vector<int>, std::vector<StateId>> groups;
  for (std::size_t i = 0; i < n; ++i) {
    const auto theta = table.row(i);
    for (std::size_t j = 0; j < dims; ++j)
      keys[i][j] = static_cast<int>(locate_interval(cs.partitions[j], theta[j]));
    groups[keys[i]].push_back(static_cast<StateId>(i));
  }
  cs.cells.reserve(groups.size());
  cs.assignment.assign(n, 0);
  for (auto& [key, members] : groups) {
    IntervalCell cell;
    cell.index = key;
    bool interval_underfull = false;
    for (std::size_t j = 0; j < dims; ++j) {
      const auto& iv = cs.partitions[j][static_cast<std::size_t>(key[j])];
      cell.lower.push_back(iv.lower);
      cell.upper.push_back(iv.upper);
      interval_underfull = interval_underfull || iv.underfull;
    }
    cell.members = std::move(members);
    cell.underfull = interval_underfull || cell.members.size() < n_min_count;
    const auto id = static_cast<CellId>(cs.cells.size());
    for (StateId s : cell.members) cs.assignment[s] = id;
    cs.cells.push_back(std::move(cell));
  }
  cs.rebuild_lookup();
  return cs;
}

ErrorSummary compute_errors(const CellSpace& cs, const SemanticTable& table) {
  if (cs.cells.empty()) throw Error("compute_errors: no cells");
  const std::size_t dims = table.dims;
  ErrorSummary e;
  double sum = 0.0;
  std::size_t terms = 0;
  std::vector<double> mean(dims);
  for (const auto& cell : cs.cells) {
    std::fill(mean.begin(), mean.end(), 0.0);
    for (StateId s : cell.members)
      for (std::size_t j = 0; j < dims; ++j) mean[j] += table.row(s)[j];
    for (auto& m : mean) m /= static_cast<double>(cell.members.size());
    for (StateId s : cell.members)
      for (std::size_t j = 0; j < dims; ++j) {
        const double dev = std::abs(table.row(s)[j] - mean[j]);
        sum += dev;
        e.max = std::max(e.max, dev);
        ++terms;
      }
  }
  e.mean = terms ? sum / static_cast<double>(terms) : 0.0;
  return e;
}

double reduction_level(const CellSpace& cs, std::size_t n_states) {
  if (n_states == 0) throw Error("reduction_level: no states");
  return static_cast<double>(cs.cells.size()) / static_cast<double>(n_states);
}

namespace {

std::size_t occupancy_threshold(double n_min, std::size_t n) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(n_min * static_cast<double>(n) - 1e-9)));
}

}  // namespace

RefineResult refine(const SemanticTable& table, const AbstractionConfig& config) {
  if (auto violations = validate_config(config); !violations.empty())
    throw Error("refine: invalid config: " + violations.front());
  if (config.limits.size() != table.dims)
    throw Error("refine: config has " + std::to_string(config.limits.size()) + " dimension limits, semantics have " +
                std::to_string(table.dims));
  const std::size_t n = table.size();
  if (n == 0) throw Error("refine: no states");
  const std::size_t dims = table.dims;

  std::vector<std::vector<double>> sorted(dims, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < dims; ++j) sorted[j][i] = table.row(i)[j];
  for (auto& col : sorted) std::sort(col.begin(), col.end());

  std::vector<double> d_max(dims);
  for (std::size_t j = 0; j < dims; ++j) d_max[j] = config.limits[j].d_max;
  double n_min = config.n_min;

  RefineResult result;
  std::pair<std::size_t, double> best_score{std::numeric_limits<std::size_t>::max(), 0.0};

  for (int iter = 1; iter <= config.max_refine_iters; ++iter) {
    const std::size_t n_min_count = occupancy_threshold(n_min, n);
    std::vector<std::vector<Interval>> partitions(dims);
    for (std::size_t j = 0; j < dims; ++j)
      partitions[j] = partition_dimension(sorted[j], config.limits[j].d_min, d_max[j], n_min_count);
    CellSpace cs = build_cells(table, std::move(partitions), n_min_count);
    const auto err = compute_errors(cs, table);
    const double red = reduction_level(cs, n);

    RefineRecord rec{iter, d_max, n_min, cs.size(), err.mean, err.max, red, {}};
    const bool mean_bad = err.mean > config.e_mean;
    const bool max_bad = err.max > config.e_max;
    const bool too_fine = red > config.reduction_hi;
    const bool too_coarse = red < config.reduction_lo;
    if (mean_bad) rec.violations.emplace_back("e_mean > e_MEAN");
    if (max_bad) rec.violations.emplace_back("e_max > e_MAX");
    if (too_fine) rec.violations.emplace_back("reduction > r_d hi");
    if (too_coarse) rec.violations.emplace_back("reduction < r_d lo");

    const std::pair<std::size_t, double> score{rec.violations.size(), err.mean};
    if (score < best_score) {
      best_score = score;
      result.cells = std::move(cs);
      result.best_iteration = iter;
      result.unmet = rec.violations;
      result.errors = err;
      result.reduction = red;
    }
    result.log.push_back(rec);
    if (rec.violations.empty()) {
      result.converged = true;
      break;
    }

    const auto previous = d_max;
    const double previous_n_min = n_min;
    const bool shrink = mean_bad || max_bad || too_coarse;
    for (std::size_t j = 0; j < dims; ++j) {
      if (shrink) d_max[j] *= 0.8;
      if (too_fine) d_max[j] *= 1.25;
      d_max[j] = std::clamp(d_max[j], config.limits[j].d_min, config.limits[j].d_max);
    }
    if (too_fine) n_min *= 1.25;
    if (too_coarse && !too_fine) n_min *= 0.8;
    n_min = std::clamp(n_min, 1e-12, 0.5);
    if (d_max == previous && n_min == previous_n_min) break;  // nothing left to adjust
  }
  return result;
}

}  // namespace mdpabs
