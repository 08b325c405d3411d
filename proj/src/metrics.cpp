#include "mdpabs/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace mdpabs {

double SparseDist::total() const {
  double s = 0.0;
  for (const auto& [id, p] : entries) s += p;
  return s;
}

double SparseDist::at(std::uint32_t id) const {
  const auto it = std::lower_bound(entries.begin(), entries.end(), id,
                                   [](const auto& e, std::uint32_t v) { return e.first < v; });
  return it != entries.end() && it->first == id ? it->second : 0.0;
}

const ActionStats* CellStats::find(ActionId a) const {
  const auto it = std::lower_bound(actions.begin(), actions.end(), a,
                                   [](const ActionStats& s, ActionId v) { return s.action < v; });
  return it != actions.end() && it->action == a ? &*it : nullptr;
}

bool CellStats::same_availability(const CellStats& other) const {
  if (actions.size() != other.actions.size()) return false;
  for (std::size_t i = 0; i < actions.size(); ++i)
    if (actions[i].action != other.actions[i].action) return false;
  return true;
}

std::vector<CellStats> cell_statistics(const CellSpace& cs, const TrajectoryDataset& ds, const SemanticTable& table,
                                       const ActionAbstraction& actions) {
  if (cs.assignment.size() != ds.size() || table.size() != ds.size())
    throw Error("cell_statistics: cell space, semantics and dataset sizes differ");
  struct Acc {
    std::size_t count = 0;
    double reward = 0.0;
    std::map<std::uint32_t, std::size_t> next;
  };
  std::vector<CellStats> out(cs.size());
  std::vector<std::map<ActionId, Acc>> acc(cs.size());
  for (std::size_t c = 0; c < cs.size(); ++c) {
    out[c].key = cs.cells[c].index;
    out[c].theta.assign(table.dims, 0.0);
  }
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const CellId c = cs.assignment[i];
    const auto& s = ds.states[i];
    auto& st = out[c];
    st.occupancy += 1;
    st.mean_step += static_cast<double>(s.t);
    st.mean_value += s.v_hat;
    const auto theta = table.row(i);
    for (std::size_t j = 0; j < table.dims; ++j) st.theta[j] += theta[j];
    const auto succ = ds.successor(i);
    if (succ == TrajectoryDataset::npos) continue;
    auto& a = acc[c][actions.abstract_id(s.action)];
    a.count += 1;
    a.reward += s.reward;
    a.next[cs.assignment[succ]] += 1;
  }
  for (std::size_t c = 0; c < cs.size(); ++c) {
    auto& st = out[c];
    const double n = static_cast<double>(std::max<std::size_t>(1, st.occupancy));
    st.mean_step /= n;
    st.mean_value /= n;
    for (auto& x : st.theta) x /= n;
    for (const auto& [action, a] : acc[c]) {
      ActionStats as;
      as.action = action;
      as.count = a.count;
      as.mean_reward = a.reward / static_cast<double>(a.count);
      for (const auto& [target, k] : a.next)
        as.next.entries.emplace_back(target, static_cast<double>(k) / static_cast<double>(a.count));
      st.actions.push_back(std::move(as));
    }
  }
  return out;
}

double d_euclidean(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error("d_euclidean: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = b[i] - a[i];
    s += d * d;
  }
  return std::sqrt(s);
}

namespace {

double tv_unchecked(const SparseDist& p, const SparseDist& q) {
  double s = 0.0;
  std::size_t i = 0;
  std::size_t j = 0;
  const auto& a = p.entries;
  const auto& b = q.entries;
  while (i < a.size() || j < b.size()) {
    if (j == b.size() || (i < a.size() && a[i].first < b[j].first)) {
      s += std::abs(a[i++].second);
    } else if (i == a.size() || b[j].first < a[i].first) {
      s += std::abs(b[j++].second);
    } else {
      s += std::abs(a[i++].second - b[j++].second);
    }
  }
  return std::min(1.0, 0.5 * s);
}

}  // namespace

double d_tv(const SparseDist& p, const SparseDist& q) {
  if (std::abs(p.total() - 1.0) > 1e-6 || std::abs(q.total() - 1.0) > 1e-6)
    throw Error("d_tv: distributions must sum to 1");
  return tv_unchecked(p, q);
}

double d_multistep(const CellStats& a, const CellStats& b, const MetricWeights& w) {
  double best = 0.0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.actions.size() && j < b.actions.size()) {
    const auto& x = a.actions[i];
    const auto& y = b.actions[j];
    if (x.action < y.action) {
      ++i;
    } else if (y.action < x.action) {
      ++j;
    } else {
      const double term = w.c_reward * std::abs(x.mean_reward - y.mean_reward) + w.c_transition * tv_unchecked(x.next, y.next);
      best = std::max(best, term);
      ++i;
      ++j;
    }
  }
  return a.same_availability(b) ? best : best + w.c_availability;
}

double temporal_term(double step_a, double step_b, int window) {
  const double gap = std::abs(step_a - step_b);
  if (window <= 0) return gap > 0 ? 1.0 : 0.0;
  return std::min(1.0, gap / static_cast<double>(window));
}

double d_spatiotemporal(const CellStats& a, const CellStats& b, const MetricWeights& w) {
  const double base = d_multistep(a, b, w);
  if (w.c_temporal == 0.0) return base;
  return base + w.c_temporal * temporal_term(a.mean_step, b.mean_step, w.temporal_window);
}

double CellMetric::operator()(const CellStats& a, const CellStats& b) const {
  switch (kind_) {
    case MetricKind::euclidean: return d_euclidean(a.theta, b.theta);
    case MetricKind::multistep: return d_multistep(a, b, w_);
    case MetricKind::spatiotemporal: return d_spatiotemporal(a, b, w_);
  }
  return 0.0;
}

CellStats make_centroid(std::span<const CellStats* const> members) {
  CellStats c;
  if (members.empty()) return c;
  const auto m = static_cast<double>(members.size());
  c.theta.assign(members.front()->theta.size(), 0.0);

  struct Acc {
    std::size_t holders = 0;
    std::size_t count = 0;
    double reward = 0.0;
    std::map<std::uint32_t, double> next;
  };
  std::map<ActionId, Acc> acc;
  for (const CellStats* s : members) {
    c.mean_step += s->mean_step;
    c.mean_value += s->mean_value;
    c.occupancy += s->occupancy;
    for (std::size_t j = 0; j < c.theta.size(); ++j) c.theta[j] += s->theta[j];
    for (const auto& as : s->actions) {
      auto& a = acc[as.action];
      a.holders += 1;
      a.count += as.count;
      a.reward += as.mean_reward;
      for (const auto& [target, p] : as.next.entries) a.next[target] += p;
    }
  }
  c.mean_step /= m;
  c.mean_value /= m;
  for (auto& x : c.theta) x /= m;
  for (const auto& [action, a] : acc) {
    if (2 * a.holders < members.size()) continue;
    ActionStats as;
    as.action = action;
    as.count = a.count;
    const auto h = static_cast<double>(a.holders);
    as.mean_reward = a.reward / h;
    for (const auto& [target, p] : a.next) as.next.entries.emplace_back(target, p / h);
    c.actions.push_back(std::move(as));
  }
  return c;
}

}  // namespace mdpabs
