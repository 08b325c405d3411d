#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mdpabs/abstract_mdp.hpp"
#include "mdpabs/dataset.hpp"
#include "mdpabs/parallel.hpp"

namespace mdpabs {

struct PropertySpec {
  enum class Kind { RminC, PmaxF };
  Kind kind = Kind::RminC;
  int horizon = 1;
  std::string label;  // PmaxF only

  std::string prism() const;  // PRISM property syntax
  std::string name() const;   // short id, e.g. "RminC<=51" or "PmaxF<=60:isCrashed"
};

/// Accepts "RminC:<N>" and "PmaxF:<N>:<label>".
PropertySpec parse_property(const std::string& text);

/// Probabilities as 9-decimal strings whose nano-units sum to exactly 1e9.
std::vector<std::string> format_row(const std::vector<double>& probs);

std::string export_prism(const AbstractMdp& mdp);
/// One line per spec; throws on a PmaxF label the MDP does not define.
std::string export_properties(const std::vector<PropertySpec>& specs, const AbstractMdp& mdp);

/// Reads text produced by export_prism back into an MDP (counts are not stored).
AbstractMdp read_prism(const std::string& text);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// Finite-horizon backward induction. Each sweep is data-parallel over states.
std::vector<double> bounded_reward_values(const AbstractMdp& mdp, int horizon, bool minimize,
                                          par::Exec exec = par::default_exec());
std::vector<double> bounded_reach_values(const AbstractMdp& mdp, const std::vector<std::uint8_t>& goal, int horizon,
                                         par::Exec exec = par::default_exec());

double check_bounded_reward_min(const AbstractMdp& mdp, int horizon, par::Exec exec = par::default_exec());
double check_bounded_reach_max(const AbstractMdp& mdp, const std::string& label, int horizon,
                               par::Exec exec = par::default_exec());
double check_property(const AbstractMdp& mdp, const PropertySpec& spec, par::Exec exec = par::default_exec());

/// Greedy first action of a horizon-N reward-maximizing policy (ties to the lowest action id).
std::vector<ActionId> greedy_policy(const AbstractMdp& mdp, int horizon, par::Exec exec = par::default_exec());

/// RminC: mean over episodes of the first N rewards. PmaxF: fraction of episodes
/// whose label holds at some step index < N+1 from the episode start.
double empirical_property(const TrajectoryDataset& validation, const PropertySpec& spec);

struct GapRow {
  std::string property;
  double verified = 0.0;
  double empirical = 0.0;
  double error = 0.0;      // empirical - verified
  double std_error = 0.0;  // binomial standard error for PmaxF, 0 otherwise
};

struct GapReport {
  std::size_t episodes = 0;
  std::vector<GapRow> rows;
};

GapReport semantic_gap(const AbstractMdp& mdp, const TrajectoryDataset& validation,
                       const std::vector<PropertySpec>& specs, par::Exec exec = par::default_exec());

/// Runs an external PRISM binary on model + props files; one result per property.
/// Returns nullopt if the binary cannot be run or its output has no results.
std::optional<std::vector<double>> run_prism(const std::string& binary, const std::filesystem::path& model,
                                             const std::filesystem::path& props);

}  // namespace mdpabs
