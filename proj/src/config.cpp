#include "mdpabs/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>

namespace mdpabs {

using nlohmann::json;

namespace {

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : "; ") + s;
  return out;
}

// Reads keys of one JSON object, recording type errors and unknown keys.
class Section {
 public:
  Section(const json& j, std::string path, std::vector<std::string>& errors) : j_(j), path_(std::move(path)), errors_(errors) {
    if (!j_.is_object()) errors_.push_back(path_ + ": expected an object");
  }
  ~Section() {
    if (!j_.is_object()) return;
    for (const auto& [key, value] : j_.items())
      if (!known_.count(key)) errors_.push_back("unknown key '" + where(key) + "'");
  }

  bool has(const std::string& key) {
    known_.insert(key);
    return j_.is_object() && j_.contains(key);
  }

  const json* raw(const std::string& key) { return has(key) ? &j_.at(key) : nullptr; }

  template <class T>
  void get(const std::string& key, T& out, bool required = false) {
    if (!has(key)) {
      if (required) errors_.push_back("missing key '" + where(key) + "'");
      return;
    }
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      errors_.push_back("'" + where(key) + "' has the wrong type");
    }
  }

  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  const json& j_;
  std::string path_;
  std::vector<std::string>& errors_;
  std::set<std::string> known_;
};

json empty_object() { return json::object(); }

// A number, or the string "inf".
void get_extended(Section& s, const std::string& key, double& out, std::vector<std::string>& errors) {
  const json* p = s.raw(key);
  if (!p) return;
  if (p->is_number())
    out = p->get<double>();
  else if (p->is_string() && p->get<std::string>() == "inf")
    out = std::numeric_limits<double>::infinity();
  else
    errors.push_back("'" + s.where(key) + "' must be a number or \"inf\"");
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> violations)
    : Error("invalid configuration: " + join(violations)), violations_(std::move(violations)) {}

PipelineConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
  PipelineConfig c;
  std::vector<std::string> errors;
  {
    Section top(doc, "", errors);
    top.get("name", c.name);

    const json none = empty_object();
    const json* ds = top.raw("dataset");
    if (!ds) errors.emplace_back("missing key 'dataset'");
    {
      Section s(ds ? *ds : none, "dataset", errors);
      std::string path;
      s.get("path", path, ds != nullptr);
      if (!path.empty()) c.dataset = std::filesystem::path(path).is_absolute() ? std::filesystem::path(path) : base_dir / path;
    }

    const json* schema = top.raw("schema");
    if (!schema) errors.emplace_back("missing key 'schema'");
    {
      Section s(schema ? *schema : none, "schema", errors);
      s.get("features", c.schema.features, schema != nullptr);
      s.get("action_dim", c.schema.action_dim);
      s.get("labels", c.schema.labels);
    }

    const json* sem = top.raw("semantics");
    if (!sem || !sem->is_array() || sem->empty()) {
      errors.emplace_back("'semantics' must be a nonempty array");
    } else {
      for (std::size_t i = 0; i < sem->size(); ++i) {
        Section s((*sem)[i], "semantics[" + std::to_string(i) + "]", errors);
        SemanticDimension d;
        DimensionLimits lim;
        s.get("name", d.name, true);
        s.get("expr", d.expression, true);
        s.get("unit", d.unit);
        s.get("d_min", lim.d_min);
        s.get("d_max", lim.d_max);
        c.semantics.dimensions.push_back(d);
        c.abstraction.limits.push_back(lim);
      }
    }

    const json* acts = top.raw("actions");
    if (!acts || !acts->is_array() || acts->empty()) {
      errors.emplace_back("'actions' must be a nonempty array");
    } else {
      for (std::size_t i = 0; i < acts->size(); ++i) {
        Section s((*acts)[i], "actions[" + std::to_string(i) + "]", errors);
        ActionRange r;
        s.get("name", r.name);
        s.get("lower", r.lower, true);
        s.get("upper", r.upper, true);
        s.get("granularity", r.granularity, true);
        c.actions.push_back(r);
      }
    }

    if (const json* ab = top.raw("abstraction")) {
      Section s(*ab, "abstraction", errors);
      auto& x = c.abstraction;
      s.get("n_min", x.n_min);
      s.get("e_mean", x.e_mean);
      s.get("e_max", x.e_max);
      std::vector<double> band;
      s.get("reduction", band);
      if (!band.empty()) {
        if (band.size() != 2) {
          errors.emplace_back("'abstraction.reduction' must be [lo, hi]");
        } else {
          x.reduction_lo = band[0];
          x.reduction_hi = band[1];
        }
      }
      s.get("gamma", x.gamma);
      s.get("delta", x.delta);
      get_extended(s, "p_tol", x.p_tol, errors);
      s.get("seed", x.seed);
      std::string text;
      if (s.has("metric")) {
        s.get("metric", text);
        try {
          x.metric = parse_metric_kind(text);
        } catch (const Error& e) {
          errors.emplace_back(e.what());
        }
      }
      if (s.has("k_method")) {
        s.get("k_method", text);
        try {
          x.k_method = parse_k_method(text);
        } catch (const Error& e) {
          errors.emplace_back(e.what());
        }
      }
      if (const json* kr = s.raw("k_range")) {
        Section k(*kr, "abstraction.k_range", errors);
        k.get("min", x.k_range.min);
        k.get("max", x.k_range.max);
        k.get("step", x.k_range.step);
      }
      s.get("max_refine_iters", x.max_refine_iters);
      s.get("max_cluster_iters", x.max_cluster_iters);
      s.get("auto_split", x.auto_split);
      s.get("split_budget", x.split_budget);
      s.get("alpha", x.alpha);
      s.get("beta", x.beta);
    }

    if (const json* w = top.raw("weights")) {
      Section s(*w, "weights", errors);
      auto& x = c.abstraction.weights;
      s.get("c_reward", x.c_reward);
      s.get("c_transition", x.c_transition);
      s.get("c_availability", x.c_availability);
      s.get("c_temporal", x.c_temporal);
      get_extended(s, "epsilon", x.epsilon, errors);
      s.get("temporal_window", x.temporal_window);
    }

    if (const json* sp = top.raw("split")) {
      Section s(*sp, "split", errors);
      s.get("modeling", c.split.modeling);
      s.get("validation", c.split.validation);
      s.get("seed", c.split_seed);
    }

    std::vector<std::string> props;
    top.get("properties", props);
    for (const auto& p : props) {
      try {
        c.properties.push_back(parse_property(p));
      } catch (const Error& e) {
        errors.emplace_back(e.what());
      }
    }

    if (const json* ev = top.raw("eval")) {
      Section s(*ev, "eval", errors);
      try {
        std::vector<std::string> names;
        if (s.has("metrics")) {
          s.get("metrics", names);
          c.eval.metrics.clear();
          for (const auto& n : names) c.eval.metrics.push_back(parse_metric_kind(n));
        }
        if (s.has("k_methods")) {
          names.clear();
          s.get("k_methods", names);
          c.eval.methods.clear();
          for (const auto& n : names) c.eval.methods.push_back(parse_k_method(n));
        }
        if (s.has("k_metric")) {
          std::string n;
          s.get("k_metric", n);
          c.eval.k_metric = parse_metric_kind(n);
        }
      } catch (const Error& e) {
        errors.emplace_back(e.what());
      }
    }

    if (const json* g = top.raw("guide")) {
      Section s(*g, "guide", errors);
      auto& x = c.guide;
      s.get("env", x.env);
      s.get("episodes", x.episodes);
      s.get("seeds", x.seeds);
      s.get("learning_rate", x.learning_rate);
      s.get("epsilon_start", x.epsilon_start);
      s.get("epsilon_end", x.epsilon_end);
      s.get("window", x.window);
      s.get("threshold_fraction", x.threshold_fraction);
      s.get("planning_horizon", x.planning_horizon);
    }

    if (const json* sim = top.raw("simulate")) {
      Section s(*sim, "simulate", errors);
      auto& x = c.simulate;
      s.get("env", x.env);
      s.get("episodes", x.episodes);
      s.get("seed", x.seed);
      s.get("lka_sin2", x.lka_sin2);
    }
  }

  for (auto& v : validate_config(c.abstraction)) errors.push_back(v);
  if (c.split.modeling <= 0 || c.split.validation <= 0) errors.emplace_back("split parts must be positive");
  if (c.schema.action_dim != c.actions.size())
    errors.emplace_back("schema.action_dim must equal the number of action ranges");
  for (const auto& r : c.actions)
    if (!(r.lower < r.upper) || !(r.granularity > 0))
      errors.emplace_back("action '" + r.name + "': need lower < upper and granularity > 0");
  for (const auto& p : c.properties)
    if (p.kind == PropertySpec::Kind::PmaxF && c.schema.label_index(p.label) < 0)
      errors.emplace_back("property " + p.name() + " uses undeclared label '" + p.label + "'");
  if (c.guide.episodes == 0 || c.guide.seeds < 1 || c.guide.planning_horizon < 1)
    errors.emplace_back("guide: episodes, seeds and planning_horizon must be positive");
  if (c.guide.window < 1 || c.guide.window > c.guide.episodes)
    errors.emplace_back("guide: window must lie in [1, episodes]");
  if (errors.empty()) {
    try {
      CompiledMapping check(c.semantics, c.schema.features);
    } catch (const Error& e) {
      errors.emplace_back(std::string("semantics: ") + e.what());
    }
  }
  if (!errors.empty()) throw ConfigError(errors);
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot read config file " + path.string()});
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError({"config is not valid JSON: " + std::string(e.what())});
  }
  return parse_config(doc, path.parent_path());
}

json config_to_json(const PipelineConfig& c) {
  json j;
  j["name"] = c.name;
  j["dataset"] = {{"path", c.dataset.string()}};
  j["schema"] = {{"features", c.schema.features}, {"action_dim", c.schema.action_dim}, {"labels", c.schema.labels}};
  json sem = json::array();
  for (std::size_t i = 0; i < c.semantics.size(); ++i) {
    const auto& d = c.semantics.dimensions[i];
    sem.push_back({{"name", d.name},
                   {"expr", d.expression},
                   {"unit", d.unit},
                   {"d_min", c.abstraction.limits[i].d_min},
                   {"d_max", c.abstraction.limits[i].d_max}});
  }
  j["semantics"] = sem;
  json acts = json::array();
  for (const auto& r : c.actions)
    acts.push_back({{"name", r.name}, {"lower", r.lower}, {"upper", r.upper}, {"granularity", r.granularity}});
  j["actions"] = acts;
  const auto& a = c.abstraction;
  j["abstraction"] = {{"n_min", a.n_min},
                      {"e_mean", a.e_mean},
                      {"e_max", a.e_max},
                      {"reduction", {a.reduction_lo, a.reduction_hi}},
                      {"gamma", a.gamma},
                      {"delta", a.delta},
                      {"p_tol", std::isfinite(a.p_tol) ? json(a.p_tol) : json("inf")},
                      {"seed", a.seed},
                      {"metric", to_string(a.metric)},
                      {"k_method", to_string(a.k_method)},
                      {"k_range", {{"min", a.k_range.min}, {"max", a.k_range.max}, {"step", a.k_range.step}}},
                      {"max_refine_iters", a.max_refine_iters},
                      {"max_cluster_iters", a.max_cluster_iters},
                      {"auto_split", a.auto_split},
                      {"split_budget", a.split_budget},
                      {"alpha", a.alpha},
                      {"beta", a.beta}};
  const auto& w = a.weights;
  j["weights"] = {{"c_reward", w.c_reward},       {"c_transition", w.c_transition},
                  {"c_availability", w.c_availability}, {"c_temporal", w.c_temporal},
                  {"epsilon", std::isfinite(w.epsilon) ? json(w.epsilon) : json("inf")},
                  {"temporal_window", w.temporal_window}};
  j["split"] = {{"modeling", c.split.modeling}, {"validation", c.split.validation}, {"seed", c.split_seed}};
  json props = json::array();
  for (const auto& p : c.properties)
    props.push_back(p.kind == PropertySpec::Kind::RminC ? "RminC:" + std::to_string(p.horizon)
                                                        : "PmaxF:" + std::to_string(p.horizon) + ":" + p.label);
  j["properties"] = props;
  json metrics = json::array();
  for (auto m : c.eval.metrics) metrics.push_back(to_string(m));
  json methods = json::array();
  for (auto m : c.eval.methods) methods.push_back(to_string(m));
  j["eval"] = {{"metrics", metrics}, {"k_methods", methods}, {"k_metric", to_string(c.eval.k_metric)}};
  const auto& g = c.guide;
  j["guide"] = {{"env", g.env},
                {"episodes", g.episodes},
                {"seeds", g.seeds},
                {"learning_rate", g.learning_rate},
                {"epsilon_start", g.epsilon_start},
                {"epsilon_end", g.epsilon_end},
                {"window", g.window},
                {"threshold_fraction", g.threshold_fraction},
                {"planning_horizon", g.planning_horizon}};
  j["simulate"] = {{"env", c.simulate.env},
                   {"episodes", c.simulate.episodes},
                   {"seed", c.simulate.seed},
                   {"lka_sin2", c.simulate.lka_sin2}};
  return j;
}

std::uint64_t config_hash(const PipelineConfig& config) { return fnv1a64(config_to_json(config).dump()); }

}  // namespace mdpabs
