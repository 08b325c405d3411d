#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "mdpabs/action_abstraction.hpp"
#include "mdpabs/core.hpp"
#include "mdpabs/dataset.hpp"
#include "mdpabs/semantics.hpp"
#include "mdpabs/verification.hpp"

namespace mdpabs {

class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  std::vector<std::string> violations_;
};

struct EvalSettings {
  std::vector<MetricKind> metrics{MetricKind::euclidean, MetricKind::multistep, MetricKind::spatiotemporal};
  std::vector<KMethod> methods{KMethod::elbow, KMethod::silhouette, KMethod::gap, KMethod::canopy};
  MetricKind k_metric = MetricKind::spatiotemporal;  // k is chosen once per method under this metric
};

struct GuideSettings {
  std::string env = "acc";
  std::size_t episodes = 200;
  int seeds = 10;
  double learning_rate = 0.1;
  double epsilon_start = 0.1;
  double epsilon_end = 0.01;
  std::size_t window = 10;
  double threshold_fraction = 0.8;
  int planning_horizon = 10;
};

struct SimulateSettings {
  std::string env = "acc";
  std::size_t episodes = 260;
  std::uint64_t seed = 11;
  bool lka_sin2 = false;
};

struct PipelineConfig {
  std::string name = "model";
  std::filesystem::path dataset;
  Schema schema;
  SemanticMapping semantics;
  std::vector<ActionRange> actions;
  AbstractionConfig abstraction;
  SplitRatio split;
  std::uint64_t split_seed = 7;
  std::vector<PropertySpec> properties;
  EvalSettings eval;
  GuideSettings guide;
  SimulateSettings simulate;
};

/// Parses a config document. Unknown keys and invariant violations raise
/// ConfigError; relative dataset paths resolve against `base_dir`.
PipelineConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);
PipelineConfig load_config(const std::filesystem::path& path);

/// Canonical snapshot (sorted keys) used for artifact hashing.
nlohmann::json config_to_json(const PipelineConfig& config);
std::uint64_t config_hash(const PipelineConfig& config);

}  // namespace mdpabs
