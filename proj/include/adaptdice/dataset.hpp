#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "adaptdice/mdp.hpp"

namespace adaptdice {

struct Transition {
  int traj_id = 0;
  int step = 0;
  int state = 0;
  int action = 0;
  int next_state = 0;
  bool is_expert = false;

  friend bool operator==(const Transition&, const Transition&) = default;
};

struct DatasetMetadata {
  std::string mdp_id;
  std::string policy;
  std::uint64_t seed = 0;

  friend bool operator==(const DatasetMetadata&, const DatasetMetadata&) = default;
};

/// Transition records grouped into contiguous trajectories. The first record
/// of each trajectory is an initial-state sample.
struct Dataset {
  std::vector<Transition> records;
  DatasetMetadata metadata;

  bool empty() const noexcept { return records.empty(); }
  std::size_t size() const noexcept { return records.size(); }
  std::size_t n_trajectories() const;

  /// Throws InvalidArgument on out-of-range indices or non-contiguous trajectories.
  void validate(const TabularMdp& mdp) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

class EmptyDatasetError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

enum class Weighting {
  Discounted,  ///< record at step t weighs gamma^t
  Unweighted,  ///< plain counts
};

enum class RecordFilter { All, ExpertOnly };

/// Unnormalized per-pair mass (discounted or raw counts) of the filtered records.
Eigen::VectorXd pair_mass(const Dataset& data, int n_states, int n_actions, double gamma,
                          Weighting weighting = Weighting::Discounted,
                          RecordFilter filter = RecordFilter::All);

/// Empirical occupancy: pair_mass normalized to total mass 1.
OccupancyMeasure empirical_occupancy(const Dataset& data, const TabularMdp& mdp,
                                     RecordFilter filter = RecordFilter::All,
                                     Weighting weighting = Weighting::Discounted);

/// Empirical distribution of each trajectory's first state.
Eigen::VectorXd initial_state_distribution(const Dataset& data, int n_states);

/// Boolean mask over pairs that occur in the dataset.
Eigen::Array<bool, Eigen::Dynamic, 1> pair_support(const Dataset& data, int n_states, int n_actions);

Dataset filter_expert(const Dataset& data);

/// Concatenates trajectories; ids of `b` are shifted past the largest id of `a`.
Dataset concat(const Dataset& a, const Dataset& b);

struct SamplingOptions {
  int n_trajectories = 1;
  int horizon = 1;
  std::uint64_t seed = 0;
  bool is_expert = false;
  int first_traj_id = 0;
  std::string policy_name = "policy";
};

/// Rolls out `policy` for a fixed horizon. Trajectory i draws from its own
/// stream derive_seed(seed, "trajectory", first_traj_id + i), so results are
/// independent of how many trajectories are requested.
Dataset sample_trajectories(const TabularMdp& mdp, const Policy& policy, const SamplingOptions& opts);

}  // namespace adaptdice
