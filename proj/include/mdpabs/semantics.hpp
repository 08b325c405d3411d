#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mdpabs/core.hpp"

namespace mdpabs {

struct TrajectoryDataset;

struct SemanticDimension {
  std::string name;
  std::string expression;  // arithmetic over feature names, t, reward, v_hat
  std::string unit;
};

struct SemanticMapping {
  std::vector<SemanticDimension> dimensions;

  std::size_t size() const { return dimensions.size(); }
  std::vector<std::string> names() const;
};

/// Parsed arithmetic expression. Supports + - * / ^, unary minus, parentheses,
/// numeric literals and the functions abs, sqrt, exp, log, sin, cos, min, max.
class Expression {
 public:
  struct Node;

  // Identifiers resolve against `variables`; unknown identifiers throw.
  static Expression compile(const std::string& text, const std::vector<std::string>& variables);

  double evaluate(std::span<const double> values) const;
  bool uses(std::size_t variable) const;
  const std::string& text() const { return text_; }

 private:
  std::shared_ptr<const Node> root_;
  std::vector<bool> used_;
  std::string text_;
};

/// SemanticMapping bound to a dataset schema. Variable order is
/// [features..., t, reward, v_hat].
class CompiledMapping {
 public:
  CompiledMapping(const SemanticMapping& mapping, const std::vector<std::string>& feature_names);

  std::size_t dims() const { return exprs_.size(); }
  const SemanticMapping& mapping() const { return mapping_; }
  bool uses_v_hat() const;

  void evaluate(std::span<const double> features, double t, double reward, double v_hat,
                std::span<double> out) const;

 private:
  SemanticMapping mapping_;
  std::size_t n_features_;
  std::vector<Expression> exprs_;
};

/// Row-major n x J table of raw and normalized semantic values for a dataset.
struct SemanticTable {
  std::size_t dims = 0;
  std::vector<double> raw;
  std::vector<double> unit;
  Bounds bounds;

  std::size_t size() const { return dims ? raw.size() / dims : 0; }
  std::span<const double> raw_row(std::size_t i) const { return {raw.data() + i * dims, dims}; }
  std::span<const double> row(std::size_t i) const { return {unit.data() + i * dims, dims}; }
};

/// Evaluates the mapping on every state. When `fixed` is null the bounds are
/// computed from `ds` itself; otherwise values are normalized against `fixed`
/// and clamped into [0,1].
SemanticTable evaluate_semantics(const CompiledMapping& mapping, const TrajectoryDataset& ds,
                                 const Bounds* fixed = nullptr);

}  // namespace mdpabs
