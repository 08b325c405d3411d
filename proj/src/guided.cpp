#include "mdpabs/guided.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mdpabs/verification.hpp"

namespace mdpabs {

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
double gauss(std::mt19937_64& rng, double sd) { return std::normal_distribution<double>(0.0, sd)(rng); }

}  // namespace

// ---- ACC ----

Schema AccEnv::schema() const { return {{"gap", "v_ego", "v_lead"}, 1, {"isCrashed"}}; }

std::vector<ActionRange> AccEnv::action_ranges() const { return {{"accel", -8.0, 3.0, 0.5}}; }

void AccEnv::reset(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  v_ego_ = uniform(rng, 8.0, 28.0);
  v_lead_ = std::clamp(v_ego_ + uniform(rng, -8.0, 4.0), 0.0, kMaxSpeed);
  gap_ = uniform(rng, 1.0, 60.0);
  lead_profile_.resize(6);
  for (auto& a : lead_profile_) a = uniform(rng, -2.0, 1.5);
  crashed_ = false;
  t_ = 0;
}

void AccEnv::set_state(double gap, double v_ego, double v_lead) {
  gap_ = gap;
  v_ego_ = v_ego;
  v_lead_ = v_lead;
  crashed_ = gap <= 0;
}

StepResult AccEnv::step(std::span<const double> action) {
  const double a = std::clamp(action[0], -8.0, 3.0);
  v_ego_ = std::clamp(v_ego_ + a * kDt, 0.0, kMaxSpeed);
  gap_ = std::min(kMaxGap, gap_ + (v_lead_ - v_ego_) * kDt);
  if (!lead_profile_.empty()) {
    const auto seg = std::min<std::size_t>(static_cast<std::size_t>(t_ / 10), lead_profile_.size() - 1);
    v_lead_ = std::clamp(v_lead_ + lead_profile_[seg] * kDt, 0.0, kMaxSpeed);
  }
  ++t_;
  crashed_ = gap_ <= 0.0;
  return {0.05 * v_ego_, crashed_ || t_ >= horizon()};
}

std::vector<double> AccEnv::scripted_action(std::mt19937_64& rng) const {
  const double desired = 4.0 + 1.2 * v_ego_;
  const double a = 0.25 * (gap_ - desired) + 0.9 * (v_lead_ - v_ego_) + gauss(rng, 0.5);
  return {std::clamp(a, -8.0, 3.0)};
}

// ---- LKA ----

Schema LkaEnv::schema() const { return {{"offset", "heading"}, 1, {"isOutOfLane"}}; }

std::vector<ActionRange> LkaEnv::action_ranges() const { return {{"steer_rate", -0.5, 0.5, 0.1}}; }

void LkaEnv::reset(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  offset_ = uniform(rng, -1.0, 1.0);
  heading_ = uniform(rng, -0.15, 0.15);
  drift_ = uniform(rng, -0.05, 0.05);
  out_ = false;
  t_ = 0;
}

StepResult LkaEnv::step(std::span<const double> action) {
  const double w = std::clamp(action[0], -0.5, 0.5);
  heading_ += (w + drift_) * kDt;
  offset_ += kSpeed * std::sin(heading_) * kDt;
  ++t_;
  out_ = std::abs(offset_) > kHalfLane;
  const double c = sin2_ ? std::sin(heading_) : std::cos(heading_);
  return {1.0 - offset_ * offset_ - c * c, out_ || t_ >= horizon()};
}

std::vector<double> LkaEnv::scripted_action(std::mt19937_64& rng) const {
  return {std::clamp(-0.3 * offset_ - 1.5 * heading_ + gauss(rng, 0.05), -0.5, 0.5)};
}

// ---- ICA ----

Schema IcaEnv::schema() const { return {{"x", "v", "cross"}, 1, {"isCrashed", "reachDest"}}; }

std::vector<ActionRange> IcaEnv::action_ranges() const { return {{"accel", -4.0, 3.0, 0.5}}; }

void IcaEnv::reset(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  x_ = 0.0;
  v_ = uniform(rng, 5.0, 12.0);
  cross_ = uniform(rng, 0.0, 30.0);
  cross_speed_ = uniform(rng, 4.0, 10.0);
  crashed_ = false;
  arrived_ = false;
  t_ = 0;
}

StepResult IcaEnv::step(std::span<const double> action) {
  const double a = std::clamp(action[0], -4.0, 3.0);
  v_ = std::clamp(v_ + a * kDt, 0.0, 15.0);
  x_ += v_ * kDt;
  cross_ += cross_speed_ * kDt;
  ++t_;
  const auto inside = [](double p) { return p >= 2 * kBlock && p < 3 * kBlock; };
  crashed_ = inside(x_) && inside(cross_);
  arrived_ = x_ >= kGoal;
  const double d_goal = std::max(0.0, kGoal - x_);
  return {0.05 * v_ - 0.0005 * d_goal, crashed_ || arrived_ || t_ >= horizon()};
}

std::vector<double> IcaEnv::scripted_action(std::mt19937_64& rng) const {
  double a = 0.5 * (10.0 - v_);
  const double entry = 2 * kBlock;
  if (x_ < entry && cross_speed_ > 0) {
    const double ego_in = (entry - x_) / std::max(v_, 0.1);
    const double ego_out = (entry + kBlock - x_) / std::max(v_, 0.1);
    const double cross_in = (entry - cross_) / cross_speed_;
    const double cross_out = (entry + kBlock - cross_) / cross_speed_;
    if (ego_in < cross_out && cross_in < ego_out) a = -2.0;
  }
  return {std::clamp(a + gauss(rng, 0.3), -4.0, 3.0)};
}

std::unique_ptr<Environment> make_environment(const std::string& name, bool lka_sin2) {
  if (name == "acc") return std::make_unique<AccEnv>();
  if (name == "lka") return std::make_unique<LkaEnv>(lka_sin2);
  if (name == "ica") return std::make_unique<IcaEnv>();
  throw Error("unknown environment '" + name + "' (expected acc, lka or ica)");
}

std::uint64_t episode_seed(std::uint64_t seed, std::uint64_t episode) {
  std::uint64_t z = seed * 0x9e3779b97f4a7c15ULL + episode + 1;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

TrajectoryDataset simulate(Environment& env, std::size_t episodes, std::uint64_t seed) {
  TrajectoryDataset ds;
  ds.schema = env.schema();
  ds.source = "simulate:" + env.name();
  const std::vector<double> zero(ds.schema.action_dim, 0.0);
  for (std::size_t e = 0; e < episodes; ++e) {
    const auto es = episode_seed(seed, e);
    env.reset(es);
    std::mt19937_64 rng(es ^ 0x5eedULL);
    for (;;) {
      ConcreteState s;
      s.episode = static_cast<std::int64_t>(e);
      s.t = env.t();
      s.features = env.features();
      s.labels = env.labels();
      s.action = env.scripted_action(rng);
      const auto r = env.step(s.action);
      s.reward = r.reward;
      ds.states.push_back(std::move(s));
      if (r.done) break;
    }
    ConcreteState last;
    last.episode = static_cast<std::int64_t>(e);
    last.t = env.t();
    last.features = env.features();
    last.labels = env.labels();
    last.action = zero;
    last.terminal = true;
    ds.states.push_back(std::move(last));
  }
  ds.reindex();
  ds.content_hash = dataset_hash(ds);
  return ds;
}

std::vector<double> blend_action(std::span<const double> a_nn, std::span<const double> a_mdp, double alpha,
                                 double beta, const ActionAbstraction& actions) {
  if (a_nn.size() != a_mdp.size() || a_nn.size() != actions.dims())
    throw Error("blend_action: action dimension mismatch");
  if (beta == 0.0) return actions.clamp(a_nn);
  if (!(alpha >= 0 && beta > 0)) throw Error("blend_action: coefficients must be nonnegative");
  std::vector<double> out(a_nn.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (alpha * a_nn[i] + beta * a_mdp[i]) / (alpha + beta);
  return actions.clamp(out);
}

StateEncoder::StateEncoder(const CompiledMapping& mapping, const Bounds& bounds, const CellSpace& cells)
    : mapping_(&mapping), bounds_(&bounds), cells_(&cells) {
  if (mapping.uses_v_hat()) throw Error("online state encoding cannot use v_hat");
  if (mapping.dims() != cells.dims()) throw Error("StateEncoder: semantics and cell space dimensions differ");
}

CellId StateEncoder::cell(std::span<const double> features, int t, bool* exact) const {
  std::vector<double> raw(mapping_->dims());
  mapping_->evaluate(features, static_cast<double>(t), 0.0, 0.0, raw);
  std::vector<double> unit(raw.size());
  normalize_into(raw, *bounds_, unit);
  return cells_->locate(unit, exact);
}

Guide make_guide(const AbstractMdp& mdp, std::vector<std::uint32_t> phi, int horizon) {
  Guide g;
  g.mdp = &mdp;
  g.phi = std::move(phi);
  g.policy = greedy_policy(mdp, horizon);
  return g;
}

PolicyAction abstract_policy_action(const Guide& guide, CellId cell, const ActionAbstraction& actions) {
  const auto s = guide.phi.at(cell);
  const ActionId a = guide.policy.at(s);
  if (a == kNoAction || guide.mdp->degenerate[s]) return {actions.zero_action(), true};
  return {actions.representative_action(a), false};
}

std::vector<double> train_guided(Environment& env, const StateEncoder& encoder, const ActionAbstraction& actions,
                                 const Guide* guide, const LearnerConfig& config, std::uint64_t seed) {
  if (config.episodes == 0) throw Error("train_guided: episodes must be >= 1");
  const std::size_t n_a = actions.action_count();
  std::vector<double> q(encoder.size() * n_a, 0.0);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> any_action(0, n_a - 1);
  auto greedy = [&](CellId s) {
    const double* row = &q[s * n_a];
    return static_cast<std::size_t>(std::max_element(row, row + n_a) - row);  // first maximum
  };

  std::vector<double> returns;
  returns.reserve(config.episodes);
  const double span = config.episodes > 1 ? static_cast<double>(config.episodes - 1) : 1.0;
  for (std::size_t e = 0; e < config.episodes; ++e) {
    const double eps =
        config.epsilon_start + (config.epsilon_end - config.epsilon_start) * static_cast<double>(e) / span;
    env.reset(episode_seed(seed, e));
    CellId s = encoder.cell(env.features(), env.t());
    double total = 0.0;
    for (;;) {
      const std::size_t chosen = coin(rng) < eps ? any_action(rng) : greedy(s);
      std::size_t executed = chosen;
      std::vector<double> a = actions.representative_action(static_cast<ActionId>(chosen));
      if (guide) {
        const auto pa = abstract_policy_action(*guide, s, actions);
        a = blend_action(a, pa.action, config.alpha, config.beta, actions);
        executed = actions.abstract_id(a);
      }
      const auto r = env.step(a);
      total += r.reward;
      const CellId next = encoder.cell(env.features(), env.t());
      const double future = r.done ? 0.0 : q[next * n_a + greedy(next)];
      double& cell = q[s * n_a + executed];
      cell += config.learning_rate * (r.reward + config.gamma * future - cell);
      if (r.done) break;
      s = next;
    }
    returns.push_back(total);
  }
  return returns;
}

std::vector<double> trailing_means(const std::vector<double>& returns, std::size_t window) {
  window = std::max<std::size_t>(1, window);
  std::vector<double> out;
  double sum = 0.0;
  for (std::size_t e = 0; e < returns.size(); ++e) {
    sum += returns[e];
    if (e >= window) sum -= returns[e - window];
    if (e + 1 >= window) out.push_back(sum / static_cast<double>(window));
  }
  return out;
}

std::size_t episodes_to_threshold(const std::vector<double>& returns, double threshold, std::size_t window) {
  window = std::max<std::size_t>(1, window);
  const auto means = trailing_means(returns, window);
  for (std::size_t i = 0; i < means.size(); ++i)
    if (means[i] >= threshold) return i + window;
  return returns.size() + 1;
}

std::vector<double> scripted_returns(Environment& env, std::size_t episodes, std::uint64_t seed) {
  std::vector<double> out;
  for (std::size_t e = 0; e < episodes; ++e) {
    const auto es = episode_seed(seed, e);
    env.reset(es);
    std::mt19937_64 rng(es ^ 0x5eedULL);
    double total = 0.0;
    for (;;) {
      const auto r = env.step(env.scripted_action(rng));
      total += r.reward;
      if (r.done) break;
    }
    out.push_back(total);
  }
  return out;
}

}  // namespace mdpabs
