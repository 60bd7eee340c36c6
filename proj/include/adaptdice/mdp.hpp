#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace adaptdice {

/// Vectors over states (pseudo values) or over state-action pairs (rewards,
/// occupancies, density ratios). State-action pairs are flattened as
/// `s * n_actions + a` throughout the library.
using PseudoValue = Eigen::VectorXd;
using OccupancyMeasure = Eigen::VectorXd;
using DensityRatio = Eigen::VectorXd;

/// Raised when inputs violate a documented precondition or type invariant.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a numerical routine fails (non-finite values, solver failure).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TabularMdp {
 public:
  /// `transitions` has one row per state-action pair (row `s * n_actions + a`)
  /// and one column per next state.
  TabularMdp(int n_states, int n_actions, Eigen::MatrixXd transitions, Eigen::VectorXd initial_dist,
             double discount, std::optional<Eigen::VectorXd> reward = std::nullopt,
             std::string id = "mdp");

  int n_states() const noexcept { return n_states_; }
  int n_actions() const noexcept { return n_actions_; }
  int n_pairs() const noexcept { return n_states_ * n_actions_; }
  int index(int s, int a) const noexcept { return s * n_actions_ + a; }

  const Eigen::MatrixXd& transitions() const noexcept { return transitions_; }
  double transition(int s, int a, int s_next) const { return transitions_(index(s, a), s_next); }
  const Eigen::VectorXd& initial_dist() const noexcept { return initial_; }
  double discount() const noexcept { return discount_; }
  const std::optional<Eigen::VectorXd>& reward() const noexcept { return reward_; }
  const std::string& id() const noexcept { return id_; }

  TabularMdp with_reward(std::optional<Eigen::VectorXd> reward) const;
  TabularMdp with_discount(double discount) const;
  TabularMdp with_id(std::string id) const;

 private:
  int n_states_;
  int n_actions_;
  Eigen::MatrixXd transitions_;
  Eigen::VectorXd initial_;
  double discount_;
  std::optional<Eigen::VectorXd> reward_;
  std::string id_;
};

/// Stochastic matrix of shape n_states x n_actions.
struct Policy {
  Eigen::MatrixXd probs;

  static Policy uniform(int n_states, int n_actions);
  static Policy deterministic(const Eigen::VectorXi& actions, int n_actions);

  int n_states() const noexcept { return static_cast<int>(probs.rows()); }
  int n_actions() const noexcept { return static_cast<int>(probs.cols()); }
  double operator()(int s, int a) const { return probs(s, a); }

  /// Throws InvalidArgument unless every row is a probability vector.
  void validate(double tol = 1e-12) const;
};

/// State-to-state kernel P_pi(s, s') = sum_a pi(a|s) P(s'|s,a).
Eigen::MatrixXd state_transition_matrix(const TabularMdp& mdp, const Policy& policy);

/// Discounted state-action occupancy d^pi. Solves the Bellman-flow system over
/// state marginals by dense LU and expands by pi; falls back to power
/// iteration if the LU residual exceeds 1e-12.
OccupancyMeasure occupancy_measure(const TabularMdp& mdp, const Policy& policy);

/// Bellman-flow residual max_s' |sum_a d(s',a) - (1-gamma) mu(s') - gamma sum P(s'|s,a) d(s,a)|.
double flow_residual(const TabularMdp& mdp, const Eigen::Ref<const Eigen::VectorXd>& d);

/// Sum over actions of a state-action vector.
Eigen::VectorXd state_marginal(const Eigen::Ref<const Eigen::VectorXd>& sa, int n_states, int n_actions);

/// Policy implied by an occupancy (uniform rows where the state has no mass).
Policy policy_from_occupancy(const Eigen::Ref<const Eigen::VectorXd>& d, int n_states, int n_actions);

/// A(s,a) = r(s,a) + gamma * sum_s' P(s'|s,a) nu(s') - nu(s), exact over P.
Eigen::VectorXd advantage(const Eigen::Ref<const PseudoValue>& nu,
                          const Eigen::Ref<const Eigen::VectorXd>& r, const TabularMdp& mdp);

/// State values of `policy` under the given per-pair reward (exact linear solve).
Eigen::VectorXd policy_value(const TabularMdp& mdp, const Policy& policy,
                             const Eigen::Ref<const Eigen::VectorXd>& reward);

struct ValueIterationOptions {
  double tolerance = 1e-10;
  int max_iterations = 1'000'000;
  /// Mix of greedy and uniform: pi = (1 - eps) greedy + eps uniform.
  double epsilon_soft = 0.0;
  /// Q values within this distance of the max count as ties; lowest index wins.
  double tie_tolerance = 1e-9;
};

/// Greedy policy from value iteration on mdp.reward().
Policy expert_policy(const TabularMdp& mdp, const ValueIterationOptions& opts = {});

/// Optimal state-action values from value iteration (used by expert_policy).
Eigen::VectorXd optimal_q_values(const TabularMdp& mdp, const ValueIterationOptions& opts = {});

}  // namespace adaptdice
