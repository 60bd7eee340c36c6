#pragma once

// Shared scenario builders for the unit and acceptance tests.

#include <cstdint>

#include "adaptdice/bench.hpp"
#include "adaptdice/crossdomain.hpp"
#include "adaptdice/dice.hpp"
#include "adaptdice/rng.hpp"
#include "helpers.hpp"

namespace testing_support {

using namespace adaptdice;

/// A deterministic permuted pair with exact pseudo-rewards in both domains,
/// Bellman-consistent source values, and target data from the behaviour
/// policy. Under the ground-truth mapping every residual of the map loss is
/// zero up to rounding.
struct RecoveryFixture {
  MdpPair pair;
  MappingPair truth;
  Policy tar_behaviour;
  PseudoReward r_tar;
  OccupancyMeasure dU_src;
  Eigen::VectorXd q_src;
  Dataset data;

  MappingObjective objective() const {
    return MappingObjective(r_tar, q_src, pair.src.n_states(), pair.src.n_actions(), tar_behaviour, data,
                            pair.src.discount());
  }
};

/// pi_tar(a|s) = pi_src(H(s,a) | G(s)) for a bijective mapping.
inline Policy lift_policy(const Policy& src, const MappingPair& map) {
  Policy out{Eigen::MatrixXd(map.n_tar_states(), map.n_tar_actions)};
  for (int s = 0; s < map.n_tar_states(); ++s) {
    for (int a = 0; a < map.n_tar_actions; ++a) out.probs(s, a) = src.probs(map.G(s), map.H(s, a));
  }
  return out;
}

inline RecoveryFixture recovery_fixture(std::uint64_t seed, int n_states, int n_actions, int branching = 1) {
  PairSpec spec;
  spec.family = Family::Random;
  spec.n_states = n_states;
  spec.n_actions = n_actions;
  spec.gamma = 0.9;
  spec.discrepancy = Discrepancy::Permutation;
  spec.branching = branching;
  spec.seed = seed;
  RecoveryFixture f{make_pair(spec), {}, {}, {}, {}, {}, {}};
  f.truth = *f.pair.ground_truth;

  // A soft expert with generic action probabilities keeps the pseudo-rewards
  // of non-greedy actions distinct; a hard expert clips them all to one value
  // and makes (G, H) unidentifiable.
  const Policy expert{0.5 * expert_policy(f.pair.src).probs +
                      0.5 * random_policy(derive_seed(seed, "recovery-expert"), n_states, n_actions).probs};
  Policy behaviour{0.5 * expert.probs + 0.5 * Policy::uniform(n_states, n_actions).probs};
  const OccupancyMeasure dE_src = occupancy_measure(f.pair.src, expert);
  f.dU_src = occupancy_measure(f.pair.src, behaviour);
  const PseudoReward r_src = pseudo_reward_exact(dE_src, f.dU_src);
  const PseudoValue v_src = policy_value(f.pair.src, behaviour, r_src.values);
  f.q_src = q_from_nu(v_src, r_src, f.pair.src);

  const Policy tar_expert = lift_policy(expert, f.truth);
  f.tar_behaviour = lift_policy(behaviour, f.truth);
  f.r_tar = pseudo_reward_exact(occupancy_measure(f.pair.tar, tar_expert),
                                occupancy_measure(f.pair.tar, f.tar_behaviour));
  SamplingOptions opts;
  opts.n_trajectories = 20;
  opts.horizon = 30;
  opts.seed = derive_seed(seed, "recovery-data");
  f.data = sample_trajectories(f.pair.tar, f.tar_behaviour, opts);
  return f;
}

/// True iff `found` agrees with `truth` on every G of a visited state and
/// every H of a visited pair.
inline bool agrees_on_visited(const MappingPair& found, const MappingPair& truth, const Dataset& data) {
  for (const Transition& t : data.records) {
    if (found.G(t.state) != truth.G(t.state) || found.H(t.state, t.action) != truth.H(t.state, t.action)) {
      return false;
    }
  }
  return true;
}

}  // namespace testing_support
