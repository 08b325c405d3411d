#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mdpabs/abstract_mdp.hpp"
#include "mdpabs/action_abstraction.hpp"
#include "mdpabs/dataset.hpp"
#include "mdpabs/interval_abstraction.hpp"
#include "mdpabs/semantics.hpp"

namespace mdpabs {

struct StepResult {
  double reward = 0.0;
  bool done = false;
};

class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::string name() const = 0;
  virtual Schema schema() const = 0;
  virtual std::vector<ActionRange> action_ranges() const = 0;
  virtual int horizon() const = 0;

  virtual void reset(std::uint64_t seed) = 0;
  virtual std::vector<double> features() const = 0;
  virtual std::vector<std::uint8_t> labels() const = 0;
  virtual StepResult step(std::span<const double> action) = 0;
  // Noisy hand-written reference controller used to record trajectories.
  virtual std::vector<double> scripted_action(std::mt19937_64& rng) const = 0;

  int t() const { return t_; }

 protected:
  int t_ = 0;
};

/// Car following on a line. dt = 0.1 s, horizon 51, accel in [-8, 3].
class AccEnv : public Environment {
 public:
  static constexpr double kDt = 0.1;
  static constexpr double kMaxSpeed = 40.0;
  static constexpr double kMaxGap = 200.0;

  std::string name() const override { return "acc"; }
  Schema schema() const override;
  std::vector<ActionRange> action_ranges() const override;
  int horizon() const override { return 51; }

  void reset(std::uint64_t seed) override;
  std::vector<double> features() const override { return {gap_, v_ego_, v_lead_}; }
  std::vector<std::uint8_t> labels() const override { return {static_cast<std::uint8_t>(crashed_)}; }
  StepResult step(std::span<const double> action) override;
  std::vector<double> scripted_action(std::mt19937_64& rng) const override;

  // Direct state access for tests.
  void set_state(double gap, double v_ego, double v_lead);
  double gap() const { return gap_; }
  double v_ego() const { return v_ego_; }
  double v_lead() const { return v_lead_; }
  bool crashed() const { return crashed_; }

 private:
  double gap_ = 30.0;
  double v_ego_ = 20.0;
  double v_lead_ = 20.0;
  bool crashed_ = false;
  std::vector<double> lead_profile_;  // lead acceleration per 10-step segment
};

/// Lateral lane keeping at fixed speed. Reward 1 - d^2 - cos^2(theta) as
/// written, or 1 - d^2 - sin^2(theta) with the sin2 toggle.
class LkaEnv : public Environment {
 public:
  static constexpr double kDt = 0.1;
  static constexpr double kSpeed = 10.0;
  static constexpr double kHalfLane = 1.75;

  explicit LkaEnv(bool sin2 = false) : sin2_(sin2) {}
  std::string name() const override { return "lka"; }
  Schema schema() const override;
  std::vector<ActionRange> action_ranges() const override;
  int horizon() const override { return 51; }

  void reset(std::uint64_t seed) override;
  std::vector<double> features() const override { return {offset_, heading_}; }
  std::vector<std::uint8_t> labels() const override { return {static_cast<std::uint8_t>(out_)}; }
  StepResult step(std::span<const double> action) override;
  std::vector<double> scripted_action(std::mt19937_64& rng) const override;

 private:
  bool sin2_;
  double offset_ = 0.0;
  double heading_ = 0.0;
  double drift_ = 0.0;  // road curvature disturbance on heading
  bool out_ = false;
};

/// Straight road through a 5x5 block grid (20 m blocks) with one crossing car
/// passing the centre block. Reward 0.05 v - 0.0005 d_goal.
class IcaEnv : public Environment {
 public:
  static constexpr double kDt = 0.5;
  static constexpr double kBlock = 20.0;
  static constexpr double kGoal = 100.0;

  std::string name() const override { return "ica"; }
  Schema schema() const override;
  std::vector<ActionRange> action_ranges() const override;
  int horizon() const override { return 60; }

  void reset(std::uint64_t seed) override;
  std::vector<double> features() const override { return {x_, v_, cross_}; }
  std::vector<std::uint8_t> labels() const override {
    return {static_cast<std::uint8_t>(crashed_), static_cast<std::uint8_t>(arrived_)};
  }
  StepResult step(std::span<const double> action) override;
  std::vector<double> scripted_action(std::mt19937_64& rng) const override;

 private:
  double x_ = 0.0;
  double v_ = 8.0;
  double cross_ = 0.0;  // crossing car position along its own road
  double cross_speed_ = 6.0;
  bool crashed_ = false;
  bool arrived_ = false;
};

std::unique_ptr<Environment> make_environment(const std::string& name, bool lka_sin2 = false);

std::uint64_t episode_seed(std::uint64_t seed, std::uint64_t episode);

/// Records `episodes` runs of the scripted controller. Each episode ends with a
/// terminal row holding the final features and labels, a zero action and reward 0.
TrajectoryDataset simulate(Environment& env, std::size_t episodes, std::uint64_t seed);

/// Normalized blend (alpha*a_nn + beta*a_mdp) / (alpha + beta), clamped to the
/// action ranges; beta = 0 returns a_nn unchanged apart from clamping.
std::vector<double> blend_action(std::span<const double> a_nn, std::span<const double> a_mdp, double alpha,
                                 double beta, const ActionAbstraction& actions);

/// Online state abstraction shared by the learner and the guide.
class StateEncoder {
 public:
  StateEncoder(const CompiledMapping& mapping, const Bounds& bounds, const CellSpace& cells);
  CellId cell(std::span<const double> features, int t, bool* exact = nullptr) const;
  std::size_t size() const { return cells_->size(); }

 private:
  const CompiledMapping* mapping_;
  const Bounds* bounds_;
  const CellSpace* cells_;
};

struct Guide {
  const AbstractMdp* mdp = nullptr;
  std::vector<std::uint32_t> phi;  // cell -> abstract state
  std::vector<ActionId> policy;    // abstract state -> greedy abstract action
};

Guide make_guide(const AbstractMdp& mdp, std::vector<std::uint32_t> phi, int horizon);

struct PolicyAction {
  std::vector<double> action;
  bool degenerate = false;  // absorbing abstract state: zero action returned
};

PolicyAction abstract_policy_action(const Guide& guide, CellId cell, const ActionAbstraction& actions);

struct LearnerConfig {
  std::size_t episodes = 200;
  double learning_rate = 0.1;
  double epsilon_start = 0.1;
  double epsilon_end = 0.01;
  double gamma = 0.95;
  double alpha = 0.5;
  double beta = 0.5;
};

/// Tabular Q-learning over cells x abstract actions. With a guide, the executed
/// action is the blend of the learner's choice and the guide's action and the
/// update is credited to the executed action's index. Returns per-episode returns.
std::vector<double> train_guided(Environment& env, const StateEncoder& encoder, const ActionAbstraction& actions,
                                 const Guide* guide, const LearnerConfig& config, std::uint64_t seed);

/// Means over each full window of `window` consecutive episodes, in order.
std::vector<double> trailing_means(const std::vector<double>& returns, std::size_t window);

/// First episode count at which the trailing mean over `window` episodes reaches
/// `threshold`; returns returns.size() + 1 when it never does.
std::size_t episodes_to_threshold(const std::vector<double>& returns, double threshold, std::size_t window);

/// Per-episode returns of the scripted controller on the same episode seeds the learner sees.
std::vector<double> scripted_returns(Environment& env, std::size_t episodes, std::uint64_t seed);

}  // namespace mdpabs
