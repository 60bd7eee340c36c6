#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include <Eigen/Core>
#include <json.hpp>

#include "adaptdice/bench.hpp"
#include "adaptdice/crossdomain.hpp"
#include "adaptdice/dataset.hpp"
#include "adaptdice/mdp.hpp"

namespace adaptdice::io {

using Json = nlohmann::ordered_json;

/// Raised on malformed files; the message names the file and the problem.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Json vector_to_json(const Eigen::Ref<const Eigen::VectorXd>& v);
Json matrix_to_json(const Eigen::Ref<const Eigen::MatrixXd>& m);
Eigen::VectorXd vector_from_json(const Json& j);
Eigen::MatrixXd matrix_from_json(const Json& j);

/// {id, n_states, n_actions, discount, transitions (row per s*A+a), initial_dist, reward|null}.
Json to_json(const TabularMdp& mdp);
TabularMdp mdp_from_json(const Json& j);

Json to_json(const Policy& policy);
Policy policy_from_json(const Json& j);

/// {n_src_states, n_src_actions, n_tar_actions, G, H (row per target state)}.
Json to_json(const MappingPair& map);
MappingPair mapping_from_json(const Json& j);

Json to_json(const PairSpec& spec);
PairSpec pair_spec_from_json(const Json& j, PairSpec base = {});
Json to_json(const DataSpec& spec);
DataSpec data_spec_from_json(const Json& j, DataSpec base = {});

/// Line 1: JSON header {format, mdp_id, policy, seed, n_records}.
/// Line 2: column names. Then one `traj_id,step,state,action,next_state,is_expert` row per record.
void write_dataset(std::ostream& os, const Dataset& data);
Dataset read_dataset(std::istream& is);

/// Writes `text` to `path`, creating parent directories.
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

Json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& j);

/// Writes src_mdp.json, tar_mdp.json, src_data.csv, tar_expert.csv,
/// tar_union.csv and manifest.json (names every component and the
/// ground-truth mapping when present).
void write_bundle(const std::filesystem::path& dir, const ScenarioBundle& bundle);
/// Reads a bundle written by write_bundle; expert quantities are recomputed
/// from the MDP rewards.
ScenarioBundle read_bundle(const std::filesystem::path& dir);

}  // namespace adaptdice::io
