#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "mdpabs/pipeline.hpp"

namespace {

enum Exit { kOk = 0, kConfigError = 1, kMissing = 2, kRuntime = 3 };

struct Options {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<std::string> metric;
  std::optional<std::string> k_method;
  std::optional<int> horizon;
  std::optional<std::string> property;
  std::optional<std::string> label;
};

int run(const std::string& stage, const Options& o) {
  using namespace mdpabs;
  PipelineConfig config;
  try {
    config = load_config(o.config);
    StageOverrides ov;
    ov.seed = o.seed;
    if (o.metric) ov.metric = parse_metric_kind(*o.metric);
    if (o.k_method) ov.k_method = parse_k_method(*o.k_method);
    ov.horizon = o.horizon;
    ov.property = o.property;
    ov.label = o.label;
    apply_overrides(config, ov);
  } catch (const ConfigError& e) {
    std::cerr << "config error:\n";
    for (const auto& v : e.violations()) std::cerr << "  " << v << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  }
  try {
    std::cout << run_stage(stage, config, o.out);
    return kOk;
  } catch (const MissingPrerequisite& e) {
    std::cerr << e.what() << "\n";
    return kMissing;
  } catch (const ConfigError& e) {
    std::cerr << "config error:\n";
    for (const auto& v : e.violations()) std::cerr << "  " << v << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interval and cluster abstraction of trajectory data into verifiable MDPs"};
  app.require_subcommand(1);
  Options o;
  const std::map<std::string, std::string> about{
      {"ingest", "load, annotate and split the dataset"},
      {"abstract", "interval refinement, k selection and clustering"},
      {"build", "estimate the abstract MDP"},
      {"export-prism", "write the PRISM model and property file"},
      {"check", "bounded model checking of the configured properties"},
      {"gap", "verified vs empirical values on the validation split"},
      {"eval", "compression and MAE per metric and k method"},
      {"guide", "baseline vs guided learner on the simulator"},
      {"report", "collect stage results into report.json"},
      {"simulate", "generate a dataset from the configured simulator"}};
  for (const auto& name : mdpabs::stage_names()) {
    auto* sub = app.add_subcommand(name, about.count(name) ? about.at(name) : "");
    sub->add_option("--config", o.config, "pipeline config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "artifact directory");
    sub->add_option("--seed", o.seed, "overrides every seed in the config");
    sub->add_option("--metric", o.metric, "euclidean|multistep|spatiotemporal");
    sub->add_option("--k-method", o.k_method, "elbow|silhouette|gap|canopy");
    sub->add_option("--horizon", o.horizon, "property horizon");
    sub->add_option("--property", o.property, "RminC, PmaxF or e.g. PmaxF:60:isCrashed");
    sub->add_option("--label", o.label, "goal label for PmaxF");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kConfigError;
  }
  return run(app.get_subcommands().front()->get_name(), o);
}
