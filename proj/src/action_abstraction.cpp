#include "mdpabs/action_abstraction.hpp"

#include <algorithm>
#include <cmath>

namespace mdpabs {

ActionAbstraction::ActionAbstraction(std::vector<ActionRange> ranges) : ranges_(std::move(ranges)) {
  if (ranges_.empty()) throw Error("action abstraction needs at least one dimension");
  total_ = 1;
  for (const auto& r : ranges_) {
    if (!(std::isfinite(r.lower) && std::isfinite(r.upper) && r.lower < r.upper))
      throw Error("action '" + r.name + "': lower must be < upper");
    if (!(std::isfinite(r.granularity) && r.granularity > 0))
      throw Error("action '" + r.name + "': granularity must be > 0");
    // Guard against (u - l)/g landing a hair above an integer.
    const double ratio = (r.upper - r.lower) / r.granularity;
    const double rounded = std::round(ratio);
    const int k = std::abs(ratio - rounded) < 1e-9 ? static_cast<int>(rounded) : static_cast<int>(std::ceil(ratio));
    counts_.push_back(std::max(1, k));
    total_ *= static_cast<std::size_t>(counts_.back());
  }
}

ActionIndex ActionAbstraction::abstract_action(std::span<const double> action) const {
  if (action.size() != ranges_.size()) throw Error("abstract_action: dimension mismatch");
  ActionIndex k(ranges_.size());
  for (std::size_t i = 0; i < ranges_.size(); ++i) {
    const auto& r = ranges_[i];
    const double raw = std::floor((action[i] - r.lower) / r.granularity);
    const double clamped = std::clamp(std::isnan(raw) ? 0.0 : raw, 0.0, static_cast<double>(counts_[i] - 1));
    k[i] = static_cast<int>(clamped);
  }
  return k;
}

bool ActionAbstraction::clamps(std::span<const double> action) const {
  for (std::size_t i = 0; i < ranges_.size() && i < action.size(); ++i)
    if (action[i] < ranges_[i].lower || action[i] > ranges_[i].upper) return true;
  return false;
}

std::vector<double> ActionAbstraction::representative_action(const ActionIndex& index) const {
  if (index.size() != ranges_.size()) throw Error("representative_action: dimension mismatch");
  std::vector<double> a(ranges_.size());
  for (std::size_t i = 0; i < ranges_.size(); ++i) {
    if (index[i] < 0 || index[i] >= counts_[i])
      throw Error("representative_action: index " + std::to_string(index[i]) + " out of range [0, " +
                  std::to_string(counts_[i] - 1) + "] in dimension '" + ranges_[i].name + "'");
    const auto& r = ranges_[i];
    a[i] = std::min(r.lower + (index[i] + 0.5) * r.granularity, r.upper);
  }
  return a;
}

std::vector<double> ActionAbstraction::clamp(std::span<const double> action) const {
  if (action.size() != ranges_.size()) throw Error("clamp: dimension mismatch");
  std::vector<double> a(action.begin(), action.end());
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = std::clamp(a[i], ranges_[i].lower, ranges_[i].upper);
  return a;
}

std::vector<double> ActionAbstraction::zero_action() const {
  return clamp(std::vector<double>(ranges_.size(), 0.0));
}

ActionId ActionAbstraction::flatten(const ActionIndex& index) const {
  if (index.size() != ranges_.size()) throw Error("flatten: dimension mismatch");
  std::size_t id = 0;
  for (std::size_t i = 0; i < ranges_.size(); ++i) {
    if (index[i] < 0 || index[i] >= counts_[i]) throw Error("flatten: index out of range");
    id = id * static_cast<std::size_t>(counts_[i]) + static_cast<std::size_t>(index[i]);
  }
  return static_cast<ActionId>(id);
}

ActionIndex ActionAbstraction::unflatten(ActionId id) const {
  if (id >= total_) throw Error("unflatten: action id " + std::to_string(id) + " out of range");
  ActionIndex k(ranges_.size());
  std::size_t rest = id;
  for (std::size_t i = ranges_.size(); i-- > 0;) {
    k[i] = static_cast<int>(rest % static_cast<std::size_t>(counts_[i]));
    rest /= static_cast<std::size_t>(counts_[i]);
  }
  return k;
}

}  // namespace mdpabs
