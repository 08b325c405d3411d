#pragma once

#include <span>
#include <string>
#include <vector>

#include "mdpabs/core.hpp"

namespace mdpabs {

struct ActionRange {
  std::string name;
  double lower = 0.0;
  double upper = 1.0;
  double granularity = 0.1;
};

using ActionIndex = std::vector<int>;

/// Uniform interval-box partition of a box-shaped continuous action space.
/// Index k_i = floor((a_i - l_i) / g_i) clamped to [0, K_i - 1]; the last
/// interval may be shorter than g_i.
class ActionAbstraction {
 public:
  ActionAbstraction() = default;
  explicit ActionAbstraction(std::vector<ActionRange> ranges);

  std::size_t dims() const { return ranges_.size(); }
  const std::vector<ActionRange>& ranges() const { return ranges_; }
  int cells(std::size_t dim) const { return counts_[dim]; }
  std::size_t action_count() const { return total_; }

  ActionIndex abstract_action(std::span<const double> action) const;
  ActionId abstract_id(std::span<const double> action) const { return flatten(abstract_action(action)); }
  // True if any component lies outside [l_i, u_i].
  bool clamps(std::span<const double> action) const;

  std::vector<double> representative_action(const ActionIndex& index) const;
  std::vector<double> representative_action(ActionId id) const { return representative_action(unflatten(id)); }
  std::vector<double> clamp(std::span<const double> action) const;
  std::vector<double> zero_action() const;

  // Row-major (first dimension most significant).
  ActionId flatten(const ActionIndex& index) const;
  ActionIndex unflatten(ActionId id) const;

 private:
  std::vector<ActionRange> ranges_;
  std::vector<int> counts_;
  std::size_t total_ = 0;
};

}  // namespace mdpabs
