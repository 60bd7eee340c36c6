#pragma once

// Independent reference computations for the unit tests. Nothing here calls
// the library routine it is used to check.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>

#include <Eigen/Core>

#include "adaptdice/mdp.hpp"
#include "adaptdice/rng.hpp"

namespace testing_support {

using adaptdice::Policy;
using adaptdice::TabularMdp;

/// Dense random dynamics, random simplex initial distribution, U[0,1] reward.
inline TabularMdp dense_mdp(std::uint64_t seed, int n_states, int n_actions, double gamma) {
  adaptdice::Rng rng(seed);
  Eigen::MatrixXd P(n_states * n_actions, n_states);
  for (int i = 0; i < P.rows(); ++i) P.row(i) = rng.simplex(n_states).transpose();
  Eigen::VectorXd R(n_states * n_actions);
  for (int i = 0; i < R.size(); ++i) R(i) = rng.uniform();
  return TabularMdp(n_states, n_actions, P, rng.simplex(n_states), gamma, R, "dense");
}

inline Policy random_policy(std::uint64_t seed, int n_states, int n_actions) {
  adaptdice::Rng rng(seed);
  Policy pi{Eigen::MatrixXd(n_states, n_actions)};
  for (int s = 0; s < n_states; ++s) pi.probs.row(s) = rng.simplex(n_actions).transpose();
  return pi;
}

/// d(s,a) = (1 - gamma) sum_t gamma^t Pr(s_t = s) pi(a|s), truncated once
/// gamma^t drops below 1e-17.
inline Eigen::VectorXd occupancy_by_rollout(const TabularMdp& mdp, const Policy& pi) {
  const int n = mdp.n_states();
  const int m = mdp.n_actions();
  Eigen::VectorXd state = mdp.initial_dist();
  Eigen::VectorXd d = Eigen::VectorXd::Zero(n * m);
  double weight = 1.0 - mdp.discount();
  while (weight > 1e-17) {
    Eigen::VectorXd next = Eigen::VectorXd::Zero(n);
    for (int s = 0; s < n; ++s) {
      for (int a = 0; a < m; ++a) {
        const double mass = state(s) * pi.probs(s, a);
        d(s * m + a) += weight * mass;
        next += mass * mdp.transitions().row(s * m + a).transpose();
      }
    }
    state = next;
    weight *= mdp.discount();
  }
  return d;
}

/// Expected discounted return from mu by the same rollout.
inline double return_by_rollout(const TabularMdp& mdp, const Policy& pi, const Eigen::VectorXd& reward) {
  return occupancy_by_rollout(mdp, pi).dot(reward) / (1.0 - mdp.discount());
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("adaptdice_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing_support
