#include "mdpabs/semantics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include "mdpabs/dataset.hpp"

namespace mdpabs {

std::vector<std::string> SemanticMapping::names() const {
  std::vector<std::string> out;
  out.reserve(dimensions.size());
  for (const auto& d : dimensions) out.push_back(d.name);
  return out;
}

struct Expression::Node {
  enum class Kind { number, variable, neg, add, sub, mul, div, pow, call } kind;
  double value = 0.0;
  std::size_t variable = 0;
  std::string function;
  std::vector<std::shared_ptr<const Node>> args;

  double eval(std::span<const double> vars) const {
    switch (kind) {
      case Kind::number: return value;
      case Kind::variable: return vars[variable];
      case Kind::neg: return -args[0]->eval(vars);
      case Kind::add: return args[0]->eval(vars) + args[1]->eval(vars);
      case Kind::sub: return args[0]->eval(vars) - args[1]->eval(vars);
      case Kind::mul: return args[0]->eval(vars) * args[1]->eval(vars);
      case Kind::div: return args[0]->eval(vars) / args[1]->eval(vars);
      case Kind::pow: return std::pow(args[0]->eval(vars), args[1]->eval(vars));
      case Kind::call: {
        const double a = args[0]->eval(vars);
        if (function == "abs") return std::abs(a);
        if (function == "sqrt") return std::sqrt(a);
        if (function == "exp") return std::exp(a);
        if (function == "log") return std::log(a);
        if (function == "sin") return std::sin(a);
        if (function == "cos") return std::cos(a);
        const double b = args[1]->eval(vars);
        if (function == "min") return std::min(a, b);
        return std::max(a, b);
      }
    }
    return std::numeric_limits<double>::quiet_NaN();
  }
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Kind = Expression::Node::Kind;

class Parser {
 public:
  Parser(const std::string& text, const std::vector<std::string>& vars) : s_(text), vars_(vars) {}

  NodePtr parse(std::vector<bool>& used) {
    used_ = &used;
    auto n = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return n;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw Error("expression '" + s_ + "': " + msg + " at offset " + std::to_string(pos_));
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  static NodePtr make(Kind k, std::vector<NodePtr> args) {
    auto n = std::make_shared<Expression::Node>();
    n->kind = k;
    n->args = std::move(args);
    return n;
  }

  NodePtr expr() {
    auto lhs = term();
    for (;;) {
      if (eat('+')) lhs = make(Kind::add, {lhs, term()});
      else if (eat('-')) lhs = make(Kind::sub, {lhs, term()});
      else return lhs;
    }
  }
  NodePtr term() {
    auto lhs = unary();
    for (;;) {
      if (eat('*')) lhs = make(Kind::mul, {lhs, unary()});
      else if (eat('/')) lhs = make(Kind::div, {lhs, unary()});
      else return lhs;
    }
  }
  NodePtr unary() {
    if (eat('-')) return make(Kind::neg, {unary()});
    if (eat('+')) return unary();
    return power();
  }
  NodePtr power() {
    auto base = primary();
    if (eat('^')) return make(Kind::pow, {base, unary()});
    return base;
  }
  NodePtr primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end");
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      auto n = expr();
      if (!eat(')')) fail("expected ')'");
      return n;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(s_.substr(pos_), &used);
      } catch (const std::exception&) {
        fail("bad number");
      }
      pos_ += used;
      auto n = std::make_shared<Expression::Node>();
      n->kind = Kind::number;
      n->value = v;
      return n;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
        ++pos_;
      const std::string id = s_.substr(start, pos_ - start);
      if (eat('(')) return call(id);
      const auto it = std::find(vars_.begin(), vars_.end(), id);
      if (it == vars_.end()) fail("unknown identifier '" + id + "'");
      auto n = std::make_shared<Expression::Node>();
      n->kind = Kind::variable;
      n->variable = static_cast<std::size_t>(it - vars_.begin());
      (*used_)[n->variable] = true;
      return n;
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }
  NodePtr call(const std::string& fn) {
    static const std::vector<std::string> unary_fns = {"abs", "sqrt", "exp", "log", "sin", "cos"};
    static const std::vector<std::string> binary_fns = {"min", "max"};
    const bool is_unary = std::find(unary_fns.begin(), unary_fns.end(), fn) != unary_fns.end();
    const bool is_binary = std::find(binary_fns.begin(), binary_fns.end(), fn) != binary_fns.end();
    if (!is_unary && !is_binary) fail("unknown function '" + fn + "'");
    std::vector<NodePtr> args{expr()};
    if (is_binary) {
      if (!eat(',')) fail("expected ',' in " + fn + "()");
      args.push_back(expr());
    }
    if (!eat(')')) fail("expected ')'");
    auto n = std::make_shared<Expression::Node>();
    n->kind = Kind::call;
    n->function = fn;
    n->args = std::move(args);
    return n;
  }

  const std::string& s_;
  const std::vector<std::string>& vars_;
  std::vector<bool>* used_ = nullptr;
  std::size_t pos_ = 0;
};

}  // namespace

Expression Expression::compile(const std::string& text, const std::vector<std::string>& variables) {
  Expression e;
  e.text_ = text;
  e.used_.assign(variables.size(), false);
  e.root_ = Parser(text, variables).parse(e.used_);
  return e;
}

double Expression::evaluate(std::span<const double> values) const { return root_->eval(values); }

bool Expression::uses(std::size_t variable) const {
  return variable < used_.size() && used_[variable];
}

CompiledMapping::CompiledMapping(const SemanticMapping& mapping,
                                 const std::vector<std::string>& feature_names)
    : mapping_(mapping), n_features_(feature_names.size()) {
  if (mapping.dimensions.empty()) throw Error("semantic mapping needs at least one dimension");
  std::vector<std::string> vars = feature_names;
  vars.insert(vars.end(), {"t", "reward", "v_hat"});
  for (const auto& d : mapping.dimensions) exprs_.push_back(Expression::compile(d.expression, vars));
}

bool CompiledMapping::uses_v_hat() const {
  return std::any_of(exprs_.begin(), exprs_.end(),
                     [&](const Expression& e) { return e.uses(n_features_ + 2); });
}

void CompiledMapping::evaluate(std::span<const double> features, double t, double reward,
                               double v_hat, std::span<double> out) const {
  if (features.size() != n_features_) throw Error("semantic mapping: feature length mismatch");
  std::vector<double> vars(features.begin(), features.end());
  vars.insert(vars.end(), {t, reward, v_hat});
  for (std::size_t j = 0; j < exprs_.size(); ++j) out[j] = exprs_[j].evaluate(vars);
}

SemanticTable evaluate_semantics(const CompiledMapping& mapping, const TrajectoryDataset& ds,
                                 const Bounds* fixed) {
  SemanticTable table;
  table.dims = mapping.dims();
  const std::size_t n = ds.states.size();
  table.raw.resize(n * table.dims);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = ds.states[i];
    mapping.evaluate(s.features, static_cast<double>(s.t), s.reward, s.v_hat,
                     {table.raw.data() + i * table.dims, table.dims});
  }
  if (fixed) {
    table.bounds = *fixed;
  } else {
    table.bounds.names = mapping.mapping().names();
    table.bounds.lower.assign(table.dims, std::numeric_limits<double>::infinity());
    table.bounds.upper.assign(table.dims, -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < table.dims; ++j) {
        table.bounds.lower[j] = std::min(table.bounds.lower[j], table.raw[i * table.dims + j]);
        table.bounds.upper[j] = std::max(table.bounds.upper[j], table.raw[i * table.dims + j]);
      }
  }
  check_bounds(table.bounds);
  table.unit.resize(table.raw.size());
  for (std::size_t i = 0; i < n; ++i)
    normalize_into(table.raw_row(i), table.bounds, {table.unit.data() + i * table.dims, table.dims});
  return table;
}

}  // namespace mdpabs
