#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "mdpabs/core.hpp"

namespace mdpabs {

struct ConcreteState {
  std::int64_t episode = 0;
  std::int64_t t = 0;
  std::vector<double> features;
  std::vector<double> action;
  double reward = 0.0;
  bool terminal = false;
  std::vector<std::uint8_t> labels;  // parallel to Schema::labels
  double v_hat = 0.0;                // filled by annotate_returns
};

struct Schema {
  std::vector<std::string> features;
  std::size_t action_dim = 1;
  std::vector<std::string> labels;

  std::vector<std::string> csv_header() const;
  // -1 when absent
  int label_index(const std::string& name) const;
};

struct EpisodeSpan {
  std::int64_t id = 0;
  std::size_t begin = 0;  // index into states
  std::size_t end = 0;    // one past the terminal state

  std::size_t size() const { return end - begin; }
};

/// Episodes are contiguous runs of states; each ends with exactly one terminal state.
struct TrajectoryDataset {
  Schema schema;
  std::vector<ConcreteState> states;
  std::vector<EpisodeSpan> episodes;
  std::string source;
  std::uint64_t content_hash = 0;

  std::size_t size() const { return states.size(); }

  // Rebuilds `episodes` from `states` and enforces the episode invariants.
  void reindex();
  // Index of the successor of state i, or npos for terminal states.
  std::size_t successor(std::size_t i) const { return states[i].terminal ? npos : i + 1; }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t dataset_hash(const TrajectoryDataset& ds);

/// Loads a .csv or .jsonl trajectory file (format chosen by extension).
TrajectoryDataset load_trajectories(const std::filesystem::path& path, const Schema& schema);
TrajectoryDataset parse_csv(const std::string& text, const Schema& schema, const std::string& source = "");
TrajectoryDataset parse_jsonl(const std::string& text, const Schema& schema, const std::string& source = "");

void write_csv(const TrajectoryDataset& ds, const std::filesystem::path& path);
std::string to_csv(const TrajectoryDataset& ds);

struct SplitRatio {
  int modeling = 8;
  int validation = 2;
};

/// Episode-atomic split. Validation receives floor(n * v / (m + v)) episodes,
/// clamped so both sides are nonempty; selection is a seeded shuffle.
std::pair<TrajectoryDataset, TrajectoryDataset> split_dataset(const TrajectoryDataset& ds,
                                                              SplitRatio ratio, std::uint64_t seed);

TrajectoryDataset subset_episodes(const TrajectoryDataset& ds, const std::vector<std::size_t>& episode_indices,
                                  const std::string& tag);

/// v_hat(s_t) = sum_k gamma^k r_{t+k} to the end of the episode.
TrajectoryDataset annotate_returns(TrajectoryDataset ds, double gamma);

}  // namespace mdpabs
