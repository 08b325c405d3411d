#include "mdpabs/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

namespace mdpabs {

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<std::size_t> canonical_order(const std::vector<CellStats>& cells) {
  std::vector<std::size_t> order(cells.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return cells[a].key < cells[b].key; });
  return order;
}

}  // namespace

std::vector<std::vector<std::uint32_t>> ClusterResult::members() const {
  std::vector<std::vector<std::uint32_t>> out(k);
  for (std::size_t i = 0; i < phi.size(); ++i) out[phi[i]].push_back(static_cast<std::uint32_t>(i));
  return out;
}

ClusterResult cluster_cells(const std::vector<CellStats>& cells, std::size_t k, const CellMetric& metric,
                            std::uint64_t seed, int max_iters, par::Exec exec) {
  const std::size_t n = cells.size();
  if (k == 0) throw Error("cluster_cells: k must be positive");
  if (k > n) throw Error("cluster_cells: k = " + std::to_string(k) + " exceeds " + std::to_string(n) + " cells");
  const auto order = canonical_order(cells);
  std::vector<const CellStats*> s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = &cells[order[i]];

  // k-means++ seeding: each further seed drawn with probability ~ D^2 to the nearest seed so far.
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> pick{std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)};
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::vector<double> fresh(n);
  std::vector<std::uint8_t> taken(n, 0);
  taken[pick[0]] = 1;
  while (pick.size() < k) {
    const CellStats& last = *s[pick.back()];
    par::map(exec, n, fresh, [&](std::size_t i) { return metric(*s[i], last); });
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], fresh[i] * fresh[i]);
      if (!taken[i]) total += d2[i];
    }
    std::size_t next = n;
    if (total > 0.0 && std::isfinite(total)) {
      double x = std::uniform_real_distribution<double>(0.0, total)(rng);
      for (std::size_t i = 0; i < n; ++i) {
        if (taken[i] || d2[i] == 0.0) continue;
        next = i;
        if ((x -= d2[i]) < 0.0) break;
      }
    }
    if (next == n) {  // remaining cells coincide with seeds
      std::vector<std::size_t> free;
      for (std::size_t i = 0; i < n; ++i)
        if (!taken[i]) free.push_back(i);
      next = free[std::uniform_int_distribution<std::size_t>(0, free.size() - 1)(rng)];
    }
    taken[next] = 1;
    pick.push_back(next);
  }
  std::sort(pick.begin(), pick.end());

  ClusterResult r;
  r.k = k;
  r.centroids.reserve(k);
  for (std::size_t c = 0; c < k; ++c) r.centroids.push_back(*s[pick[c]]);

  std::vector<std::uint32_t> assign(n, std::numeric_limits<std::uint32_t>::max());
  std::vector<std::uint32_t> idx(n);
  std::vector<double> dist(n);
  std::vector<std::size_t> counts(k);
  for (int iter = 1; iter <= max_iters; ++iter) {
    par::nearest(exec, n, k, [&](std::size_t i, std::size_t c) { return metric(*s[i], r.centroids[c]); }, idx, dist);

    std::fill(counts.begin(), counts.end(), 0);
    for (auto c : idx) ++counts[c];
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) continue;
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i)
        if (counts[idx[i]] > 1 && (far == n || dist[i] > dist[far])) far = i;
      if (far == n) break;
      --counts[idx[far]];
      idx[far] = static_cast<std::uint32_t>(c);
      counts[c] = 1;
      r.centroids[c] = *s[far];
      dist[far] = 0.0;
    }
    const bool changed = idx != assign;
    assign = idx;

    std::vector<std::vector<const CellStats*>> groups(k);
    std::vector<double> cost(k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      groups[assign[i]].push_back(s[i]);
      cost[assign[i]] += dist[i];
    }
    double total = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      if (changed && groups[c].size() > 1) {
        CellStats cand = make_centroid(groups[c]);
        double cand_cost = 0.0;
        for (const CellStats* m : groups[c]) cand_cost += metric(*m, cand);
        if (cand_cost <= cost[c]) {
          r.centroids[c] = std::move(cand);
          cost[c] = cand_cost;
        }
      }
      total += cost[c];
    }
    r.objective.push_back(total);
    r.iterations = iter;
    if (!changed) {
      r.converged = true;
      break;
    }
  }
  r.phi.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) r.phi[order[i]] = assign[i];
  return r;
}

double mean_silhouette(const par::CondensedMatrix& d, const std::vector<std::uint32_t>& labels, std::size_t k) {
  const std::size_t n = labels.size();
  if (n == 0) return 0.0;
  std::vector<std::size_t> size(k, 0);
  for (auto l : labels) ++size[l];
  double total = 0.0;
  std::vector<double> sums(k);
  for (std::size_t i = 0; i < n; ++i) {
    const auto own = labels[i];
    if (size[own] <= 1) continue;  // singleton: s = 0
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) sums[labels[j]] += d(i, j);
    const double a = sums[own] / static_cast<double>(size[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c)
      if (c != own && size[c] > 0) b = std::min(b, sums[c] / static_cast<double>(size[c]));
    if (!std::isfinite(b)) continue;
    const double denom = std::max(a, b);
    if (denom > 0) total += (b - a) / denom;
  }
  return total / static_cast<double>(n);
}

int canopy_count(const par::CondensedMatrix& d, std::uint64_t seed) {
  const std::size_t n = d.size();
  if (n == 0) return 0;
  if (n == 1) return 1;
  std::vector<double> all = d.raw();
  const auto mid = all.begin() + static_cast<std::ptrdiff_t>(all.size() / 2);
  std::nth_element(all.begin(), mid, all.end());
  const double t2 = *mid;
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> remaining(n);
  std::iota(remaining.begin(), remaining.end(), 0);
  int canopies = 0;
  while (!remaining.empty()) {
    std::uniform_int_distribution<std::size_t> u(0, remaining.size() - 1);
    const std::size_t center = remaining[u(rng)];
    ++canopies;
    std::erase_if(remaining, [&](std::size_t j) { return d(center, j) <= t2; });
  }
  return canopies;
}

std::vector<CellStats> gap_reference(const std::vector<CellStats>& cells, MetricKind kind, std::uint64_t seed) {
  const std::size_t n = cells.size();
  std::vector<CellStats> out(n);
  if (n == 0) return out;
  std::mt19937_64 rng(seed);
  const std::size_t dims = cells.front().theta.size();
  std::vector<double> lo(dims, std::numeric_limits<double>::infinity());
  std::vector<double> hi(dims, -std::numeric_limits<double>::infinity());
  double step_lo = std::numeric_limits<double>::infinity();
  double step_hi = -step_lo;
  std::map<ActionId, std::vector<const ActionStats*>> by_action;
  for (const auto& c : cells) {
    for (std::size_t j = 0; j < dims; ++j) {
      lo[j] = std::min(lo[j], c.theta[j]);
      hi[j] = std::max(hi[j], c.theta[j]);
    }
    step_lo = std::min(step_lo, c.mean_step);
    step_hi = std::max(step_hi, c.mean_step);
    for (const auto& a : c.actions) by_action[a.action].push_back(&a);
  }
  auto uniform = [&](double a, double b) { return a < b ? std::uniform_real_distribution<double>(a, b)(rng) : a; };
  std::uniform_int_distribution<std::size_t> any_cell(0, n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    auto& r = out[i];
    r.key = {static_cast<int>(i)};
    r.occupancy = 1;
    r.theta.resize(dims);
    for (std::size_t j = 0; j < dims; ++j) r.theta[j] = uniform(lo[j], hi[j]);
    if (kind == MetricKind::euclidean) continue;
    r.mean_step = uniform(step_lo, step_hi);
    for (const auto& templ : cells[any_cell(rng)].actions) {
      const auto& pool = by_action[templ.action];
      double rlo = std::numeric_limits<double>::infinity();
      double rhi = -rlo;
      for (const auto* a : pool) {
        rlo = std::min(rlo, a->mean_reward);
        rhi = std::max(rhi, a->mean_reward);
      }
      ActionStats as;
      as.action = templ.action;
      as.count = 1;
      as.mean_reward = uniform(rlo, rhi);
      as.next = pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)]->next;
      r.actions.push_back(std::move(as));
    }
  }
  return out;
}

KSelection select_k(const std::vector<CellStats>& cells, KMethod method, const KRange& range, const CellMetric& metric,
                    std::uint64_t seed, int max_iters, par::Exec exec) {
  KSelection sel;
  sel.method = method;
  sel.grid = range.values(cells.size());
  if (sel.grid.empty()) throw Error("select_k: empty k range for " + std::to_string(cells.size()) + " cells");
  const auto& grid = sel.grid;
  if (grid.size() == 1 && method != KMethod::canopy) {
    sel.k = grid.front();
    return sel;
  }

  auto matrix = [&] {
    const auto order = canonical_order(cells);
    return par::pairwise(exec, cells.size(),
                         [&](std::size_t i, std::size_t j) { return metric(cells[order[i]], cells[order[j]]); });
  };

  switch (method) {
    case KMethod::elbow: {
      for (int k : grid) sel.scores.push_back(cluster_cells(cells, k, metric, seed, max_iters, exec).cost());
      sel.k = grid.front();
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
        const double second = sel.scores[i - 1] - 2.0 * sel.scores[i] + sel.scores[i + 1];
        if (second > best) {
          best = second;
          sel.k = grid[i];
        }
      }
      break;
    }
    case KMethod::silhouette: {
      const auto order = canonical_order(cells);
      const auto d = matrix();
      double best = -std::numeric_limits<double>::infinity();
      for (int k : grid) {
        const auto r = cluster_cells(cells, k, metric, seed, max_iters, exec);
        std::vector<std::uint32_t> labels(cells.size());
        for (std::size_t i = 0; i < cells.size(); ++i) labels[i] = r.phi[order[i]];
        const double s = mean_silhouette(d, labels, k);
        sel.scores.push_back(s);
        if (s > best) {
          best = s;
          sel.k = k;
        }
      }
      break;
    }
    case KMethod::gap: {
      constexpr int B = 10;
      std::vector<double> gap(grid.size());
      std::vector<double> sd(grid.size());
      std::vector<std::vector<double>> ref_logw(grid.size());
      for (int b = 0; b < B; ++b) {
        const auto ref = gap_reference(cells, metric.kind(), mix_seed(seed, static_cast<std::uint64_t>(b)));
        for (std::size_t i = 0; i < grid.size(); ++i)
          ref_logw[i].push_back(std::log(cluster_cells(ref, grid[i], metric, seed, max_iters, exec).cost() + 1e-12));
      }
      for (std::size_t i = 0; i < grid.size(); ++i) {
        const double logw = std::log(cluster_cells(cells, grid[i], metric, seed, max_iters, exec).cost() + 1e-12);
        const double mean = std::accumulate(ref_logw[i].begin(), ref_logw[i].end(), 0.0) / B;
        double var = 0.0;
        for (double x : ref_logw[i]) var += (x - mean) * (x - mean);
        sd[i] = std::sqrt(var / B) * std::sqrt(1.0 + 1.0 / B);
        gap[i] = mean - logw;
      }
      sel.scores = gap;
      sel.k = grid.back();
      for (std::size_t i = 0; i + 1 < grid.size(); ++i)
        if (gap[i] >= gap[i + 1] - sd[i + 1]) {
          sel.k = grid[i];
          break;
        }
      break;
    }
    case KMethod::canopy: {
      sel.raw_canopies = canopy_count(matrix(), seed);
      sel.k = std::clamp(sel.raw_canopies, grid.front(), grid.back());
      break;
    }
  }
  return sel;
}

double cluster_diameter(const std::vector<CellStats>& cells, const std::vector<std::uint32_t>& members,
                        const CellMetric& metric) {
  double d = 0.0;
  for (std::size_t a = 0; a < members.size(); ++a)
    for (std::size_t b = a + 1; b < members.size(); ++b) d = std::max(d, metric(cells[members[a]], cells[members[b]]));
  return d;
}

EpsilonReport validate_epsilon(const std::vector<CellStats>& cells, ClusterResult& clusters, const CellMetric& metric,
                               double epsilon, bool auto_split, int budget, std::uint64_t seed) {
  EpsilonReport rep;
  rep.epsilon = epsilon;
  auto groups = clusters.members();
  rep.diameters.resize(groups.size());
  for (std::size_t c = 0; c < groups.size(); ++c) rep.diameters[c] = cluster_diameter(cells, groups[c], metric);

  for (int used = 0; auto_split && used < budget; ++used) {
    std::size_t worst = groups.size();
    for (std::size_t c = 0; c < groups.size(); ++c)
      if (rep.diameters[c] > epsilon && groups[c].size() > 1 && (worst == groups.size() || rep.diameters[c] > rep.diameters[worst]))
        worst = c;
    if (worst == groups.size()) break;

    std::vector<CellStats> sub;
    for (auto m : groups[worst]) sub.push_back(cells[m]);
    const auto halves = cluster_cells(sub, 2, metric, seed, 100, par::Exec::serial);
    const auto fresh = static_cast<std::uint32_t>(groups.size());
    std::vector<std::uint32_t> keep;
    std::vector<std::uint32_t> moved;
    for (std::size_t i = 0; i < sub.size(); ++i) (halves.phi[i] == 0 ? keep : moved).push_back(groups[worst][i]);
    for (auto m : moved) clusters.phi[m] = fresh;
    clusters.centroids[worst] = halves.centroids[0];
    clusters.centroids.push_back(halves.centroids[1]);
    clusters.k += 1;
    groups[worst] = keep;
    groups.push_back(moved);
    rep.diameters[worst] = cluster_diameter(cells, keep, metric);
    rep.diameters.push_back(cluster_diameter(cells, moved, metric));
    rep.split.push_back(static_cast<std::uint32_t>(worst));
  }
  rep.satisfied = std::all_of(rep.diameters.begin(), rep.diameters.end(), [&](double d) { return d <= epsilon; });
  return rep;
}

}  // namespace mdpabs
