#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mdpabs/abstract_mdp.hpp"
#include "mdpabs/action_abstraction.hpp"
#include "mdpabs/clustering.hpp"
#include "mdpabs/config.hpp"
#include "mdpabs/dataset.hpp"
#include "mdpabs/evaluation.hpp"
#include "mdpabs/guided.hpp"
#include "mdpabs/interval_abstraction.hpp"
#include "mdpabs/metrics.hpp"
#include "mdpabs/semantics.hpp"

namespace mdpabs {

/// Raised when a stage's input artifact is absent or was produced under a different config.
class MissingPrerequisite : public Error {
 public:
  explicit MissingPrerequisite(std::string stage)
      : Error("missing prerequisite: run stage '" + stage + "' first"), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

/// Loaded, split and annotated data plus semantic tables.
struct Prepared {
  TrajectoryDataset modeling;
  TrajectoryDataset validation;
  std::unique_ptr<CompiledMapping> mapping;
  SemanticTable model_table;
  SemanticTable val_table;  // normalized against the modeling bounds
  ActionAbstraction actions;
  std::uint64_t source_hash = 0;
  std::size_t source_states = 0;
};

Prepared prepare(const PipelineConfig& config);
Prepared prepare(const PipelineConfig& config, const TrajectoryDataset& full);

struct AbstractionResult {
  RefineResult refine;
  std::vector<CellStats> stats;
  KSelection selection;
  ClusterResult clusters;
  EpsilonReport epsilon;
};

/// Interval abstraction, cell statistics, k selection and clustering. When
/// `fixed_k` is set, selection is skipped.
AbstractionResult run_abstraction(const Prepared& data, const PipelineConfig& config, MetricKind metric,
                                  KMethod method, std::optional<int> fixed_k = std::nullopt);

/// Modeling state -> abstract state.
std::vector<StateId> modeling_state_map(const CellSpace& cs, const ClusterResult& clusters);

AbstractMdp build_mdp(const Prepared& data, const CellSpace& cs, const ClusterResult& clusters,
                      const AbstractionConfig& config);

/// Abstract MDP of `ds` in which every concrete state is its own abstract state.
AbstractMdp identity_mdp(const TrajectoryDataset& ds, const ActionAbstraction& actions, double gamma, double delta,
                         double p_tol);

/// Table 3 style sweep: the interval abstraction is shared; for each k method,
/// k is chosen once under `config.eval.k_metric` and every metric clusters at that k.
EvalReport compare_metrics(const Prepared& data, const PipelineConfig& config);

struct GuideRun {
  std::uint64_t seed = 0;
  double threshold = 0.0;
  std::vector<double> baseline;
  std::vector<double> guided;
  std::vector<double> beta_zero;
  std::size_t baseline_episodes = 0;  // episodes to threshold
  std::size_t guided_episodes = 0;
};

struct GuideSummary {
  std::vector<GuideRun> runs;
  double median_baseline = 0.0;
  double median_guided = 0.0;
  bool beta_zero_identical = true;
};

GuideSummary run_guide(const Prepared& data, const CellSpace& cs, const ClusterResult& clusters,
                       const AbstractMdp& mdp, const PipelineConfig& config);

double median(std::vector<double> values);

struct StageOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<MetricKind> metric;
  std::optional<KMethod> k_method;
  std::optional<int> horizon;
  std::optional<std::string> property;  // RminC, PmaxF or a full "PmaxF:<N>:<label>" spec
  std::optional<std::string> label;
};

/// Applies CLI overrides; throws ConfigError on inconsistent combinations.
void apply_overrides(PipelineConfig& config, const StageOverrides& overrides);

const std::vector<std::string>& stage_names();

/// Runs one stage, reading prerequisites from and writing artifacts to `out_dir`.
/// Returns the text to print. Timing goes to timings.json only.
std::string run_stage(const std::string& stage, const PipelineConfig& config, const std::filesystem::path& out_dir);

}  // namespace mdpabs
