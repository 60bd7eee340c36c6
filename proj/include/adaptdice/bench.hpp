#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "adaptdice/crossdomain.hpp"
#include "adaptdice/dataset.hpp"
#include "adaptdice/mdp.hpp"

namespace adaptdice {

enum class Family { Chain, Gridworld, Random };
enum class Discrepancy { Permutation, ActionAugmentation, StateAugmentation, DynamicsPerturbation, RewardShift };

std::string to_string(Family f);
std::string to_string(Discrepancy d);
Family parse_family(const std::string& text);
Discrepancy parse_discrepancy(const std::string& text);

/// Source/target pair recipe. Source sizes are given; the target derives
/// from the discrepancy.
struct PairSpec {
  Family family = Family::Random;
  int n_states = 8;
  int n_actions = 2;
  double gamma = 0.9;
  Discrepancy discrepancy = Discrepancy::Permutation;
  /// Also relabel target states and actions after augmentation, perturbation
  /// or reward shift. Permutation discrepancies always relabel.
  bool also_permute = false;
  /// Explicit relabelings (target label of each base state / action); drawn
  /// from the seed when absent.
  std::optional<std::vector<int>> state_permutation;
  std::optional<std::vector<int>> action_permutation;
  int extra_actions = 1;
  int extra_states = 1;
  double epsilon_p = 0.1;
  double reward_shift = 0.5;
  /// Successors per (s, a) for the random family.
  int branching = 2;
  /// Probability that chain and gridworld moves fail.
  double slip = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct MdpPair {
  TabularMdp src;
  TabularMdp tar;
  /// (G*, H*) for structure-preserving discrepancies.
  std::optional<MappingPair> ground_truth;
};

/// Source MDP of the requested family; rewards are always present.
TabularMdp make_family_mdp(Family family, int n_states, int n_actions, double gamma, int branching, double slip,
                           std::uint64_t seed, const std::string& id);

MdpPair make_pair(const PairSpec& spec);

/// Labelled expert trajectories plus an unlabelled mix of expert and
/// uniform-random trajectories.
struct DataSpec {
  int n_expert = 1;
  int n_expert_in_mix = 1;
  int n_random_in_mix = 100;
  int horizon = 50;
  std::uint64_t seed = 0;

  int n_trajectories() const noexcept { return n_expert + n_expert_in_mix + n_random_in_mix; }
  void validate() const;
};

struct ScenarioDatasets {
  Dataset src;
  Dataset expert_tar;
  Dataset union_tar;
};

/// Expert policies come from value iteration on each MDP's reward. Labelled
/// expert records have is_expert = true and lead the union; mix records are
/// unlabelled.
ScenarioDatasets build_datasets(const MdpPair& pair, const DataSpec& src_spec, const DataSpec& tar_spec);

/// One dataset following `spec` (labelled experts first, then the mix).
Dataset build_dataset(const TabularMdp& mdp, const Policy& expert, const DataSpec& spec);

/// Everything a scenario run needs, including exact expert quantities.
struct ScenarioBundle {
  std::string name;
  PairSpec pair_spec;
  DataSpec src_spec;
  DataSpec tar_spec;
  MdpPair pair;
  ScenarioDatasets data;
  Policy src_expert;
  Policy tar_expert;
  OccupancyMeasure src_expert_occupancy;
  OccupancyMeasure tar_expert_occupancy;
};

ScenarioBundle make_bundle(std::string name, const PairSpec& pair_spec, const DataSpec& src_spec,
                           const DataSpec& tar_spec);

/// 8-state random-family source with 2 actions; target permuted with one
/// duplicated action (3 actions). Source data 50 expert + 200 random, target
/// 1 expert + (1 expert + 30 random), horizon 50.
ScenarioBundle transfer_favorable_pair(std::uint64_t seed);

}  // namespace adaptdice
