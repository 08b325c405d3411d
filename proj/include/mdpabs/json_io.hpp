#pragma once

#include <filesystem>

#include "json.hpp"
#include "mdpabs/abstract_mdp.hpp"
#include "mdpabs/clustering.hpp"
#include "mdpabs/evaluation.hpp"
#include "mdpabs/interval_abstraction.hpp"
#include "mdpabs/verification.hpp"

namespace mdpabs {

// Non-finite doubles are written as the strings "inf" / "-inf".
nlohmann::json number(double x);
double number_from(const nlohmann::json& j);

nlohmann::json mdp_to_json(const AbstractMdp& mdp);
AbstractMdp mdp_from_json(const nlohmann::json& j);

nlohmann::json partitions_to_json(const CellSpace& cs);
std::vector<std::vector<Interval>> partitions_from_json(const nlohmann::json& j);

nlohmann::json cells_to_json(const CellSpace& cs);
nlohmann::json refine_to_json(const RefineResult& r);
nlohmann::json selection_to_json(const KSelection& s);
nlohmann::json clusters_to_json(const ClusterResult& c);
nlohmann::json epsilon_to_json(const EpsilonReport& e);
nlohmann::json eval_to_json(const EvalReport& r);
nlohmann::json gap_to_json(const GapReport& r);

/// Pretty-printed with sorted keys and a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace mdpabs
