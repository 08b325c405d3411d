#include "mdpabs/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <numeric>
#include <sstream>

#include "mdpabs/json_io.hpp"
#include "mdpabs/verification.hpp"

namespace mdpabs {

using nlohmann::json;
namespace fs = std::filesystem;

Prepared prepare(const PipelineConfig& config) {
  return prepare(config, load_trajectories(config.dataset, config.schema));
}

Prepared prepare(const PipelineConfig& config, const TrajectoryDataset& full) {
  Prepared p;
  p.source_hash = full.content_hash;
  p.source_states = full.size();
  auto [modeling, validation] = split_dataset(full, config.split, config.split_seed);
  p.modeling = annotate_returns(std::move(modeling), config.abstraction.gamma);
  p.validation = annotate_returns(std::move(validation), config.abstraction.gamma);
  p.mapping = std::make_unique<CompiledMapping>(config.semantics, config.schema.features);
  p.model_table = evaluate_semantics(*p.mapping, p.modeling);
  p.val_table = evaluate_semantics(*p.mapping, p.validation, &p.model_table.bounds);
  p.actions = ActionAbstraction(config.actions);
  return p;
}

AbstractionResult run_abstraction(const Prepared& data, const PipelineConfig& config, MetricKind metric,
                                  KMethod method, std::optional<int> fixed_k) {
  const auto& ac = config.abstraction;
  AbstractionResult r;
  r.refine = refine(data.model_table, ac);
  r.stats = cell_statistics(r.refine.cells, data.modeling, data.model_table, data.actions);
  const CellMetric d(metric, ac.weights);
  if (fixed_k) {
    r.selection.method = method;
    r.selection.k = *fixed_k;
  } else if (r.stats.size() < 3) {
    r.selection.method = method;
    r.selection.k = static_cast<int>(r.stats.size());
  } else {
    r.selection = select_k(r.stats, method, ac.k_range, d, ac.seed, ac.max_cluster_iters);
  }
  r.clusters = cluster_cells(r.stats, static_cast<std::size_t>(r.selection.k), d, ac.seed, ac.max_cluster_iters);
  r.epsilon = validate_epsilon(r.stats, r.clusters, d, ac.weights.epsilon, ac.auto_split, ac.split_budget, ac.seed);
  return r;
}

std::vector<StateId> modeling_state_map(const CellSpace& cs, const ClusterResult& clusters) {
  std::vector<StateId> map(cs.assignment.size());
  for (std::size_t i = 0; i < map.size(); ++i) map[i] = clusters.phi.at(cs.assignment[i]);
  return map;
}

AbstractMdp build_mdp(const Prepared& data, const CellSpace& cs, const ClusterResult& clusters,
                      const AbstractionConfig& config) {
  const auto map = modeling_state_map(cs, clusters);
  return build_abstract_mdp(data.modeling, map, clusters.k, data.actions, config.gamma, config.delta, config.p_tol);
}

AbstractMdp identity_mdp(const TrajectoryDataset& ds, const ActionAbstraction& actions, double gamma, double delta,
                         double p_tol) {
  std::vector<StateId> map(ds.size());
  std::iota(map.begin(), map.end(), 0);
  return build_abstract_mdp(ds, map, ds.size(), actions, gamma, delta, p_tol);
}

EvalReport compare_metrics(const Prepared& data, const PipelineConfig& config) {
  const auto& ac = config.abstraction;
  EvalReport rep;
  rep.dataset = config.dataset.filename().string();
  rep.modeling_hash = data.modeling.content_hash;
  rep.validation_hash = data.validation.content_hash;
  rep.modeling_states = data.modeling.size();
  rep.validation_states = data.validation.size();
  rep.k_metric = config.eval.k_metric;

  const auto refined = refine(data.model_table, ac);
  const auto& cs = refined.cells;
  const auto stats = cell_statistics(cs, data.modeling, data.model_table, data.actions);
  std::vector<int> ks;
  for (auto method : config.eval.methods) {
    const CellMetric km(config.eval.k_metric, ac.weights);
    ks.push_back(select_k(stats, method, ac.k_range, km, ac.seed, ac.max_cluster_iters).k);
  }
  for (auto metric : config.eval.metrics) {
    const CellMetric d(metric, ac.weights);
    for (std::size_t m = 0; m < config.eval.methods.size(); ++m) {
      const auto clusters = cluster_cells(stats, static_cast<std::size_t>(ks[m]), d, ac.seed, ac.max_cluster_iters);
      EvalRow row;
      row.metric = metric;
      row.method = config.eval.methods[m];
      row.k = ks[m];
      row.cells = cs.size();
      row.abstract_states = clusters.k;
      row.cr = compression_ratio(clusters.k, data.modeling.size());
      row.mae = mean_absolute_error(cs, stats, clusters, data.val_table);
      rep.rows.push_back(row);
    }
  }
  return rep;
}

double median(std::vector<double> values) {
  if (values.empty()) throw Error("median of an empty list");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

GuideSummary run_guide(const Prepared& data, const CellSpace& cs, const ClusterResult& clusters,
                       const AbstractMdp& mdp, const PipelineConfig& config) {
  const auto& g = config.guide;
  auto env = make_environment(g.env, config.simulate.lka_sin2);
  const StateEncoder encoder(*data.mapping, data.model_table.bounds, cs);
  const Guide guide = make_guide(mdp, clusters.phi, g.planning_horizon);

  LearnerConfig lc;
  lc.episodes = g.episodes;
  lc.learning_rate = g.learning_rate;
  lc.epsilon_start = g.epsilon_start;
  lc.epsilon_end = g.epsilon_end;
  lc.gamma = config.abstraction.gamma;
  lc.alpha = config.abstraction.alpha;
  lc.beta = config.abstraction.beta;
  LearnerConfig zero = lc;
  zero.beta = 0.0;

  GuideSummary out;
  std::vector<double> base_ett;
  std::vector<double> guided_ett;
  for (int s = 0; s < g.seeds; ++s) {
    GuideRun run;
    run.seed = episode_seed(config.abstraction.seed, 1000 + static_cast<std::uint64_t>(s));
    const auto scripted = scripted_returns(*env, g.episodes, run.seed);
    // Same smoothing as the learner curve; a single lucky episode would set an unreachable bar.
    const auto smoothed = trailing_means(scripted, g.window);
    run.threshold = g.threshold_fraction * *std::max_element(smoothed.begin(), smoothed.end());
    run.baseline = train_guided(*env, encoder, data.actions, nullptr, lc, run.seed);
    run.guided = train_guided(*env, encoder, data.actions, &guide, lc, run.seed);
    run.beta_zero = train_guided(*env, encoder, data.actions, &guide, zero, run.seed);
    run.baseline_episodes = episodes_to_threshold(run.baseline, run.threshold, g.window);
    run.guided_episodes = episodes_to_threshold(run.guided, run.threshold, g.window);
    out.beta_zero_identical = out.beta_zero_identical && run.beta_zero == run.baseline;
    base_ett.push_back(static_cast<double>(run.baseline_episodes));
    guided_ett.push_back(static_cast<double>(run.guided_episodes));
    out.runs.push_back(std::move(run));
  }
  out.median_baseline = median(base_ett);
  out.median_guided = median(guided_ett);
  return out;
}

void apply_overrides(PipelineConfig& config, const StageOverrides& o) {
  if (o.seed) {
    config.abstraction.seed = *o.seed;
    config.split_seed = *o.seed;
  }
  if (o.metric) config.abstraction.metric = *o.metric;
  if (o.k_method) config.abstraction.k_method = *o.k_method;
  if (o.property) {
    PropertySpec spec;
    try {
      if (o.property->find(':') != std::string::npos) {
        spec = parse_property(*o.property);
      } else if (*o.property == "RminC") {
        spec.kind = PropertySpec::Kind::RminC;
        spec.horizon = o.horizon.value_or(51);
      } else if (*o.property == "PmaxF") {
        if (!o.label) throw Error("--property PmaxF needs --label");
        spec.kind = PropertySpec::Kind::PmaxF;
        spec.horizon = o.horizon.value_or(51);
        spec.label = *o.label;
      } else {
        throw Error("--property must be RminC, PmaxF or a full spec such as PmaxF:60:isCrashed");
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError({e.what()});
    }
    if (spec.kind == PropertySpec::Kind::PmaxF && config.schema.label_index(spec.label) < 0)
      throw ConfigError({"label '" + spec.label + "' is not declared in the schema"});
    config.properties = {spec};
  } else if (o.label) {
    throw ConfigError({"--label requires --property PmaxF"});
  }
  if (o.horizon) {
    if (*o.horizon < 1) throw ConfigError({"--horizon must be >= 1"});
    for (auto& p : config.properties) p.horizon = *o.horizon;
  }
}

const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names{"ingest", "abstract", "build",  "export-prism", "check",
                                              "gap",    "eval",     "guide",  "report",       "simulate"};
  return names;
}

namespace {

std::string hex(std::uint64_t h) {
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

json header(const std::string& stage, const PipelineConfig& config) {
  return {{"stage", stage},
          {"version", 1},
          {"config_hash", hex(config_hash(config))},
          {"seed", config.abstraction.seed},
          {"config", config_to_json(config)}};
}

json require(const fs::path& out_dir, const std::string& file, const std::string& stage, const PipelineConfig& config) {
  const auto path = out_dir / file;
  if (!fs::exists(path)) throw MissingPrerequisite(stage);
  json j = read_json(path);
  if (j.value("config_hash", std::string()) != hex(config_hash(config))) throw MissingPrerequisite(stage);
  return j;
}

std::string fmt(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

// Cell space and clustering as recorded by the abstract stage.
struct StoredAbstraction {
  CellSpace cells;
  ClusterResult clusters;
};

StoredAbstraction load_abstraction(const json& art, const Prepared& data) {
  StoredAbstraction s;
  const auto n_min_count = art.at("refine").at("n_min_count").get<std::size_t>();
  s.cells = build_cells(data.model_table, partitions_from_json(art.at("partitions")), n_min_count);
  s.clusters.k = art.at("clusters").at("k").get<std::size_t>();
  s.clusters.phi = art.at("clusters").at("phi").get<std::vector<std::uint32_t>>();
  if (s.clusters.phi.size() != s.cells.size()) throw Error("abstract artifact does not match the modeling data");
  return s;
}

void record_timing(const fs::path& out_dir, const std::string& stage, double seconds) {
  const auto path = out_dir / "timings.json";
  json t = json::object();
  if (fs::exists(path)) {
    try {
      t = read_json(path);
    } catch (const Error&) {
      t = json::object();
    }
  }
  t[stage] = seconds;
  write_json(path, t);
}

std::string stage_ingest(const PipelineConfig& config, const fs::path& out) {
  const auto data = prepare(config);
  json j = header("ingest", config);
  std::vector<std::int64_t> mod_ids;
  std::vector<std::int64_t> val_ids;
  for (const auto& e : data.modeling.episodes) mod_ids.push_back(e.id);
  for (const auto& e : data.validation.episodes) val_ids.push_back(e.id);
  j["source"] = {{"path", config.dataset.filename().string()}, {"hash", hex(data.source_hash)}, {"states", data.source_states}};
  j["modeling"] = {{"hash", hex(data.modeling.content_hash)},
                   {"episodes", mod_ids.size()},
                   {"states", data.modeling.size()},
                   {"episode_ids", mod_ids}};
  j["validation"] = {{"hash", hex(data.validation.content_hash)},
                     {"episodes", val_ids.size()},
                     {"states", data.validation.size()},
                     {"episode_ids", val_ids}};
  const auto& b = data.model_table.bounds;
  j["bounds"] = {{"names", b.names}, {"lower", b.lower}, {"upper", b.upper}};
  write_json(out / "ingest.json", j);
  std::ostringstream os;
  os << "ingest: " << data.source_states << " states; modeling " << mod_ids.size() << " episodes / "
     << data.modeling.size() << " states; validation " << val_ids.size() << " episodes / " << data.validation.size()
     << " states\n";
  return os.str();
}

std::string stage_abstract(const PipelineConfig& config, const fs::path& out) {
  require(out, "ingest.json", "ingest", config);
  const auto data = prepare(config);
  const auto& ac = config.abstraction;
  const auto r = run_abstraction(data, config, ac.metric, ac.k_method);
  json j = header("abstract", config);
  j["metric"] = to_string(ac.metric);
  j["k_method"] = to_string(ac.k_method);
  j["refine"] = refine_to_json(r.refine);
  j["partitions"] = partitions_to_json(r.refine.cells);
  j["cells"] = cells_to_json(r.refine.cells);
  j["k_selection"] = selection_to_json(r.selection);
  j["clusters"] = clusters_to_json(r.clusters);
  j["epsilon"] = epsilon_to_json(r.epsilon);
  write_json(out / "abstract.json", j);
  std::ostringstream os;
  os << "abstract: " << r.refine.cells.size() << " cells (reduction " << fmt(r.refine.reduction) << ", e_mean "
     << fmt(r.refine.errors.mean) << ", e_max " << fmt(r.refine.errors.max) << ", "
     << (r.refine.converged ? "converged" : "not converged") << "); k = " << r.selection.k << " via "
     << to_string(ac.k_method) << " under " << to_string(ac.metric) << "\n";
  return os.str();
}

std::string stage_build(const PipelineConfig& config, const fs::path& out) {
  const auto art = require(out, "abstract.json", "abstract", config);
  const auto data = prepare(config);
  const auto stored = load_abstraction(art, data);
  const auto mdp = build_mdp(data, stored.cells, stored.clusters, config.abstraction);
  json j = header("build", config);
  j["mdp"] = mdp_to_json(mdp);
  write_json(out / "mdp.json", j);
  std::size_t degenerate = 0;
  for (auto d : mdp.degenerate) degenerate += d;
  std::ostringstream os;
  os << "build: " << mdp.n_states << " abstract states, " << mdp.pruned.size() << " pruned pairs, " << degenerate
     << " degenerate states\n";
  return os.str();
}

AbstractMdp load_mdp(const PipelineConfig& config, const fs::path& out) {
  return mdp_from_json(require(out, "mdp.json", "build", config).at("mdp"));
}

std::string stage_export(const PipelineConfig& config, const fs::path& out) {
  const auto mdp = load_mdp(config, out);
  write_text(out / (config.name + ".prism"), export_prism(mdp));
  write_text(out / (config.name + ".props"), export_properties(config.properties, mdp));
  return "export-prism: wrote " + config.name + ".prism and " + config.name + ".props\n";
}

std::string stage_check(const PipelineConfig& config, const fs::path& out) {
  const auto mdp = load_mdp(config, out);
  json j = header("check", config);
  json results = json::array();
  std::ostringstream os;
  for (const auto& spec : config.properties) {
    const double v = check_property(mdp, spec);
    results.push_back({{"property", spec.prism()}, {"value", v}});
    os << spec.prism() << " = " << fmt(v) << "\n";
  }
  j["results"] = results;
  write_json(out / "check.json", j);
  return os.str();
}

std::string stage_gap(const PipelineConfig& config, const fs::path& out) {
  const auto mdp = load_mdp(config, out);
  const auto data = prepare(config);
  const auto rep = semantic_gap(mdp, data.validation, config.properties);
  json j = header("gap", config);
  j["report"] = gap_to_json(rep);
  write_json(out / (config.name + ".gap.json"), j);
  std::ostringstream os;
  for (const auto& r : rep.rows)
    os << r.property << ": verified " << fmt(r.verified) << ", empirical " << fmt(r.empirical) << ", error "
       << fmt(r.error) << "\n";
  return os.str();
}

std::string stage_eval(const PipelineConfig& config, const fs::path& out) {
  require(out, "ingest.json", "ingest", config);
  const auto data = prepare(config);
  const auto rep = compare_metrics(data, config);
  json j = header("eval", config);
  j["report"] = eval_to_json(rep);
  write_json(out / (config.name + ".eval.json"), j);
  return rep.table();
}

std::string stage_guide(const PipelineConfig& config, const fs::path& out) {
  const auto mdp = load_mdp(config, out);
  const auto art = require(out, "abstract.json", "abstract", config);
  const auto data = prepare(config);
  const auto stored = load_abstraction(art, data);
  const auto summary = run_guide(data, stored.cells, stored.clusters, mdp, config);

  std::string csv = "episode,return,arm,seed\n";
  json runs = json::array();
  for (const auto& run : summary.runs) {
    const auto emit = [&](const std::vector<double>& curve, const char* arm) {
      for (std::size_t e = 0; e < curve.size(); ++e)
        csv += std::to_string(e) + "," + fmt(curve[e]) + "," + arm + "," + std::to_string(run.seed) + "\n";
    };
    emit(run.baseline, "baseline");
    emit(run.guided, "guided");
    emit(run.beta_zero, "beta0");
    runs.push_back({{"seed", run.seed},
                    {"threshold", run.threshold},
                    {"baseline_episodes", run.baseline_episodes},
                    {"guided_episodes", run.guided_episodes}});
  }
  write_text(out / "guide.csv", csv);
  json j = header("guide", config);
  j["runs"] = runs;
  j["median_baseline"] = summary.median_baseline;
  j["median_guided"] = summary.median_guided;
  j["beta_zero_identical"] = summary.beta_zero_identical;
  write_json(out / "guide.json", j);
  std::ostringstream os;
  os << "guide: median episodes to threshold: guided " << fmt(summary.median_guided) << ", baseline "
     << fmt(summary.median_baseline) << "; beta=0 identical to baseline: "
     << (summary.beta_zero_identical ? "yes" : "no") << "\n";
  return os.str();
}

std::string stage_report(const PipelineConfig& config, const fs::path& out) {
  const auto ingest = require(out, "ingest.json", "ingest", config);
  json j = header("report", config);
  j["ingest"] = {{"modeling", ingest.at("modeling").at("states")}, {"validation", ingest.at("validation").at("states")}};
  std::ostringstream os;
  os << "report for " << config.name << "\n";
  os << "  modeling states: " << ingest.at("modeling").at("states") << ", validation states: "
     << ingest.at("validation").at("states") << "\n";
  const auto load = [&](const std::string& file) -> std::optional<json> {
    const auto p = out / file;
    if (!fs::exists(p)) return std::nullopt;
    json a = read_json(p);
    if (a.value("config_hash", std::string()) != hex(config_hash(config))) return std::nullopt;
    return a;
  };
  if (auto a = load("abstract.json")) {
    j["abstract"] = {{"cells", (*a)["refine"]["cells"]},
                     {"reduction", (*a)["refine"]["reduction"]},
                     {"converged", (*a)["refine"]["converged"]},
                     {"k", (*a)["k_selection"]["k"]}};
    os << "  cells: " << (*a)["refine"]["cells"] << ", k: " << (*a)["k_selection"]["k"] << "\n";
  }
  if (auto a = load("mdp.json")) {
    j["mdp"] = {{"states", (*a)["mdp"]["n_states"]}, {"pruned", (*a)["mdp"]["pruned"].size()}};
    os << "  abstract states: " << (*a)["mdp"]["n_states"] << "\n";
  }
  if (auto a = load("check.json")) {
    j["check"] = (*a)["results"];
    for (const auto& r : (*a)["results"]) os << "  " << r["property"].get<std::string>() << " = " << r["value"] << "\n";
  }
  if (auto a = load(config.name + ".gap.json")) {
    j["gap"] = (*a)["report"];
    for (const auto& r : (*a)["report"]["rows"])
      os << "  gap " << r["property"].get<std::string>() << ": " << r["error"] << "\n";
  }
  if (auto a = load(config.name + ".eval.json")) {
    j["eval"] = (*a)["report"]["rows"];
    os << "  eval rows: " << (*a)["report"]["rows"].size() << "\n";
  }
  if (auto a = load("guide.json")) {
    j["guide"] = {{"median_baseline", (*a)["median_baseline"]}, {"median_guided", (*a)["median_guided"]}};
    os << "  guide medians: guided " << (*a)["median_guided"] << ", baseline " << (*a)["median_baseline"] << "\n";
  }
  write_json(out / "report.json", j);
  return os.str();
}

std::string stage_simulate(const PipelineConfig& config) {
  auto env = make_environment(config.simulate.env, config.simulate.lka_sin2);
  const auto ds = simulate(*env, config.simulate.episodes, config.simulate.seed);
  if (config.dataset.has_parent_path()) fs::create_directories(config.dataset.parent_path());
  write_csv(ds, config.dataset);
  return "simulate: wrote " + std::to_string(ds.episodes.size()) + " episodes / " + std::to_string(ds.size()) +
         " states to " + config.dataset.string() + "\n";
}

}  // namespace

std::string run_stage(const std::string& stage, const PipelineConfig& config, const fs::path& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  std::string text;
  if (stage == "simulate") return stage_simulate(config);
  fs::create_directories(out_dir);
  if (stage == "ingest") {
    text = stage_ingest(config, out_dir);
  } else if (stage == "abstract") {
    text = stage_abstract(config, out_dir);
  } else if (stage == "build") {
    text = stage_build(config, out_dir);
  } else if (stage == "export-prism") {
    text = stage_export(config, out_dir);
  } else if (stage == "check") {
    text = stage_check(config, out_dir);
  } else if (stage == "gap") {
    text = stage_gap(config, out_dir);
  } else if (stage == "eval") {
    text = stage_eval(config, out_dir);
  } else if (stage == "guide") {
    text = stage_guide(config, out_dir);
  } else if (stage == "report") {
    text = stage_report(config, out_dir);
  } else {
    throw ConfigError({"unknown stage '" + stage + "'"});
  }
  const std::chrono::duration<double> secs = std::chrono::steady_clock::now() - start;
  record_timing(out_dir, stage, secs.count());
  return text;
}

}  // namespace mdpabs
