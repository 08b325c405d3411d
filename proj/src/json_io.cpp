#include "mdpabs/json_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

namespace mdpabs {

using nlohmann::json;

json number(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

double number_from(const json& j) {
  if (j.is_number()) return j.get<double>();
  const auto s = j.get<std::string>();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  throw Error("expected a number, got '" + s + "'");
}

json mdp_to_json(const AbstractMdp& mdp) {
  json states = json::array();
  for (std::size_t s = 0; s < mdp.n_states; ++s) {
    json choices = json::array();
    for (const auto& c : mdp.choices[s]) {
      json next = json::array();
      for (const auto& [t, p] : c.next) next.push_back({t, p});
      choices.push_back({{"action", c.action == kNoAction ? json(nullptr) : json(c.action)},
                         {"count", c.count},
                         {"reward", c.reward},
                         {"bound", c.bound},
                         {"next", next}});
    }
    json labels = json::array();
    for (std::size_t j = 0; j < mdp.label_names.size(); ++j)
      if (mdp.labels[s][j]) labels.push_back(mdp.label_names[j]);
    states.push_back({{"id", s},
                      {"initial", mdp.initial[s]},
                      {"degenerate", static_cast<bool>(mdp.degenerate[s])},
                      {"labels", labels},
                      {"choices", choices}});
  }
  json pruned = json::array();
  for (const auto& p : mdp.pruned)
    pruned.push_back({{"state", p.state}, {"action", p.action}, {"count", p.count}, {"bound", p.bound}});
  return {{"n_states", mdp.n_states}, {"n_actions", mdp.n_actions}, {"gamma", mdp.gamma},
          {"label_names", mdp.label_names}, {"states", states},   {"pruned", pruned}};
}

AbstractMdp mdp_from_json(const json& j) {
  AbstractMdp mdp;
  mdp.n_states = j.at("n_states").get<std::size_t>();
  mdp.n_actions = j.at("n_actions").get<std::size_t>();
  mdp.gamma = j.at("gamma").get<double>();
  mdp.label_names = j.at("label_names").get<std::vector<std::string>>();
  mdp.choices.resize(mdp.n_states);
  mdp.initial.assign(mdp.n_states, 0.0);
  mdp.degenerate.assign(mdp.n_states, 0);
  mdp.labels.assign(mdp.n_states, std::vector<std::uint8_t>(mdp.label_names.size(), 0));
  const auto& states = j.at("states");
  if (states.size() != mdp.n_states) throw Error("mdp artifact: state count mismatch");
  for (std::size_t s = 0; s < mdp.n_states; ++s) {
    const auto& js = states[s];
    mdp.initial[s] = js.at("initial").get<double>();
    mdp.degenerate[s] = js.at("degenerate").get<bool>();
    for (const auto& name : js.at("labels")) {
      const auto it = std::find(mdp.label_names.begin(), mdp.label_names.end(), name.get<std::string>());
      if (it == mdp.label_names.end()) throw Error("mdp artifact: unknown label");
      mdp.labels[s][static_cast<std::size_t>(it - mdp.label_names.begin())] = 1;
    }
    for (const auto& jc : js.at("choices")) {
      MdpChoice c;
      c.action = jc.at("action").is_null() ? kNoAction : jc.at("action").get<ActionId>();
      c.count = jc.at("count").get<std::size_t>();
      c.reward = jc.at("reward").get<double>();
      c.bound = jc.at("bound").get<double>();
      for (const auto& e : jc.at("next")) c.next.emplace_back(e.at(0).get<StateId>(), e.at(1).get<double>());
      mdp.choices[s].push_back(std::move(c));
    }
  }
  for (const auto& p : j.at("pruned"))
    mdp.pruned.push_back({p.at("state").get<StateId>(), p.at("action").get<ActionId>(), p.at("count").get<std::size_t>(),
                          p.at("bound").get<double>()});
  mdp.validate();
  return mdp;
}

json partitions_to_json(const CellSpace& cs) {
  json out = json::array();
  for (const auto& dim : cs.partitions) {
    json d = json::array();
    for (const auto& iv : dim)
      d.push_back({{"lower", iv.lower},
                   {"upper", iv.upper},
                   {"closed", iv.closed},
                   {"count", iv.count},
                   {"underfull", iv.underfull}});
    out.push_back(d);
  }
  return out;
}

std::vector<std::vector<Interval>> partitions_from_json(const json& j) {
  std::vector<std::vector<Interval>> out;
  for (const auto& d : j) {
    std::vector<Interval> dim;
    for (const auto& e : d) {
      Interval iv;
      iv.lower = e.at("lower").get<double>();
      iv.upper = e.at("upper").get<double>();
      iv.closed = e.at("closed").get<bool>();
      iv.count = e.at("count").get<std::size_t>();
      iv.underfull = e.at("underfull").get<bool>();
      dim.push_back(iv);
    }
    out.push_back(std::move(dim));
  }
  return out;
}

json cells_to_json(const CellSpace& cs) {
  json out = json::array();
  for (const auto& c : cs.cells)
    out.push_back({{"index", c.index},
                   {"lower", c.lower},
                   {"upper", c.upper},
                   {"occupancy", c.members.size()},
                   {"underfull", c.underfull}});
  return out;
}

json refine_to_json(const RefineResult& r) {
  json log = json::array();
  for (const auto& rec : r.log)
    log.push_back({{"iteration", rec.iteration},
                   {"d_max", rec.d_max},
                   {"n_min", rec.n_min},
                   {"cells", rec.cells},
                   {"e_mean", rec.e_mean},
                   {"e_max", rec.e_max},
                   {"reduction", rec.reduction},
                   {"violations", rec.violations}});
  return {{"log", log},
          {"best_iteration", r.best_iteration},
          {"converged", r.converged},
          {"not_converged", r.unmet},
          {"e_mean", r.errors.mean},
          {"e_max", r.errors.max},
          {"reduction", r.reduction},
          {"cells", r.cells.size()},
          {"n_min_count", r.cells.n_min_count}};
}

json selection_to_json(const KSelection& s) {
  json scores = json::array();
  for (double x : s.scores) scores.push_back(number(x));
  return {{"method", to_string(s.method)}, {"k", s.k}, {"grid", s.grid}, {"scores", scores},
          {"raw_canopies", s.raw_canopies}};
}

json clusters_to_json(const ClusterResult& c) {
  return {{"k", c.k}, {"phi", c.phi}, {"objective", c.objective}, {"iterations", c.iterations},
          {"converged", c.converged}};
}

json epsilon_to_json(const EpsilonReport& e) {
  return {{"epsilon", number(e.epsilon)}, {"diameters", e.diameters}, {"split", e.split}, {"satisfied", e.satisfied}};
}

json eval_to_json(const EvalReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"metric", to_string(row.metric)},
                    {"k_method", to_string(row.method)},
                    {"k", row.k},
                    {"cells", row.cells},
                    {"abstract_states", row.abstract_states},
                    {"cr", row.cr},
                    {"mae", row.mae}});
  return {{"dataset", r.dataset},
          {"modeling_hash", r.modeling_hash},
          {"validation_hash", r.validation_hash},
          {"modeling_states", r.modeling_states},
          {"validation_states", r.validation_states},
          {"k_metric", to_string(r.k_metric)},
          {"rows", rows}};
}

json gap_to_json(const GapReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"property", row.property},
                    {"verified", row.verified},
                    {"empirical", row.empirical},
                    {"error", row.error},
                    {"std_error", row.std_error}});
  return {{"episodes", r.episodes}, {"rows", rows}};
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << "\n";
  if (!out) throw Error("write failed: " + path.string());
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

}  // namespace mdpabs
