#include "adaptdice/mdp.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/LU>

namespace adaptdice {

namespace {

constexpr double kStochasticTol = 1e-12;

void check_distribution(const Eigen::Ref<const Eigen::VectorXd>& p, const std::string& what) {
  if (!p.allFinite() || (p.array() < 0.0).any()) {
    throw InvalidArgument(what + ": entries must be finite and non-negative");
  }
  if (std::abs(p.sum() - 1.0) > kStochasticTol) {
    std::ostringstream os;
    os << what << ": sums to " << p.sum() << ", expected 1";
    throw InvalidArgument(os.str());
  }
}

}  // namespace

TabularMdp::TabularMdp(int n_states, int n_actions, Eigen::MatrixXd transitions,
                       Eigen::VectorXd initial_dist, double discount,
                       std::optional<Eigen::VectorXd> reward, std::string id)
    : n_states_(n_states),
      n_actions_(n_actions),
      transitions_(std::move(transitions)),
      initial_(std::move(initial_dist)),
      discount_(discount),
      reward_(std::move(reward)),
      id_(std::move(id)) {
  if (n_states_ <= 0 || n_actions_ <= 0) throw InvalidArgument("TabularMdp: sizes must be positive");
  if (transitions_.rows() != n_pairs() || transitions_.cols() != n_states_) {
    throw InvalidArgument("TabularMdp: transition matrix must be (n_states*n_actions) x n_states");
  }
  if (initial_.size() != n_states_) throw InvalidArgument("TabularMdp: initial distribution size");
  if (!(discount_ >= 0.0 && discount_ < 1.0)) throw InvalidArgument("TabularMdp: discount must lie in [0, 1)");
  for (int s = 0; s < n_states_; ++s) {
    for (int a = 0; a < n_actions_; ++a) {
      check_distribution(transitions_.row(index(s, a)).transpose(),
                         "TabularMdp: P(.|" + std::to_string(s) + "," + std::to_string(a) + ")");
    }
  }
  check_distribution(initial_, "TabularMdp: initial distribution");
  if (reward_ && (reward_->size() != n_pairs() || !reward_->allFinite())) {
    throw InvalidArgument("TabularMdp: reward must be a finite vector over state-action pairs");
  }
}

TabularMdp TabularMdp::with_reward(std::optional<Eigen::VectorXd> reward) const {
  return TabularMdp(n_states_, n_actions_, transitions_, initial_, discount_, std::move(reward), id_);
}

TabularMdp TabularMdp::with_discount(double discount) const {
  return TabularMdp(n_states_, n_actions_, transitions_, initial_, discount, reward_, id_);
}

TabularMdp TabularMdp::with_id(std::string id) const {
  return TabularMdp(n_states_, n_actions_, transitions_, initial_, discount_, reward_, std::move(id));
}

Policy Policy::uniform(int n_states, int n_actions) {
  return Policy{Eigen::MatrixXd::Constant(n_states, n_actions, 1.0 / n_actions)};
}

Policy Policy::deterministic(const Eigen::VectorXi& actions, int n_actions) {
  Policy p{Eigen::MatrixXd::Zero(actions.size(), n_actions)};
  for (Eigen::Index s = 0; s < actions.size(); ++s) {
    if (actions(s) < 0 || actions(s) >= n_actions) throw InvalidArgument("Policy::deterministic: action out of range");
    p.probs(s, actions(s)) = 1.0;
  }
  return p;
}

void Policy::validate(double tol) const {
  if (!probs.allFinite() || (probs.array() < 0.0).any()) {
    throw InvalidArgument("Policy: entries must be finite and non-negative");
  }
  for (Eigen::Index s = 0; s < probs.rows(); ++s) {
    if (std::abs(probs.row(s).sum() - 1.0) > tol) {
      throw InvalidArgument("Policy: row " + std::to_string(s) + " does not sum to 1");
    }
  }
}

Eigen::MatrixXd state_transition_matrix(const TabularMdp& mdp, const Policy& policy) {
  if (policy.n_states() != mdp.n_states() || policy.n_actions() != mdp.n_actions()) {
    throw InvalidArgument("policy dimensions do not match the MDP");
  }
  Eigen::MatrixXd p_pi = Eigen::MatrixXd::Zero(mdp.n_states(), mdp.n_states());
  for (int s = 0; s < mdp.n_states(); ++s) {
    for (int a = 0; a < mdp.n_actions(); ++a) {
      p_pi.row(s) += policy(s, a) * mdp.transitions().row(mdp.index(s, a));
    }
  }
  return p_pi;
}

Eigen::VectorXd state_marginal(const Eigen::Ref<const Eigen::VectorXd>& sa, int n_states, int n_actions) {
  return sa.reshaped(n_actions, n_states).colwise().sum().transpose();
}

namespace {

OccupancyMeasure expand(const Eigen::VectorXd& rho, const Policy& policy) {
  const int ns = policy.n_states();
  const int na = policy.n_actions();
  OccupancyMeasure d(ns * na);
  for (int s = 0; s < ns; ++s) {
    for (int a = 0; a < na; ++a) d(s * na + a) = rho(s) * policy(s, a);
  }
  return d;
}

}  // namespace

OccupancyMeasure occupancy_measure(const TabularMdp& mdp, const Policy& policy) {
  policy.validate();
  const double gamma = mdp.discount();
  const Eigen::MatrixXd p_pi = state_transition_matrix(mdp, policy);
  const Eigen::Index n = mdp.n_states();

  // rho = (1 - gamma) mu + gamma P_pi^T rho
  const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n) - gamma * p_pi.transpose();
  const Eigen::VectorXd rhs = (1.0 - gamma) * mdp.initial_dist();
  Eigen::VectorXd rho = system.partialPivLu().solve(rhs);

  const double residual = (system * rho - rhs).cwiseAbs().maxCoeff();
  if (!rho.allFinite() || residual > 1e-12) {
    // Power iteration on the same fixed point; contraction factor gamma.
    rho = rhs;
    Eigen::VectorXd term = rhs;
    for (int t = 0; t < 100'000 && term.cwiseAbs().maxCoeff() > 1e-17; ++t) {
      term = gamma * (p_pi.transpose() * term);
      rho += term;
    }
    const double fallback_residual = (system * rho - rhs).cwiseAbs().maxCoeff();
    if (!rho.allFinite() || fallback_residual > 1e-12) {
      throw NumericalError("occupancy_measure: flow system did not converge (residual " +
                           std::to_string(fallback_residual) + ")");
    }
  }
  rho = rho.cwiseMax(0.0);
  rho /= rho.sum();
  return expand(rho, policy);
}

double flow_residual(const TabularMdp& mdp, const Eigen::Ref<const Eigen::VectorXd>& d) {
  if (d.size() != mdp.n_pairs()) throw InvalidArgument("flow_residual: dimension mismatch");
  const Eigen::VectorXd inflow = (1.0 - mdp.discount()) * mdp.initial_dist() +
                                 mdp.discount() * mdp.transitions().transpose() * d;
  return (state_marginal(d, mdp.n_states(), mdp.n_actions()) - inflow).cwiseAbs().maxCoeff();
}

Policy policy_from_occupancy(const Eigen::Ref<const Eigen::VectorXd>& d, int n_states, int n_actions) {
  Policy p = Policy::uniform(n_states, n_actions);
  for (int s = 0; s < n_states; ++s) {
    const double mass = d.segment(s * n_actions, n_actions).sum();
    if (mass > 0.0) p.probs.row(s) = d.segment(s * n_actions, n_actions).transpose() / mass;
  }
  return p;
}

Eigen::VectorXd advantage(const Eigen::Ref<const PseudoValue>& nu, const Eigen::Ref<const Eigen::VectorXd>& r,
                          const TabularMdp& mdp) {
  if (nu.size() != mdp.n_states() || r.size() != mdp.n_pairs()) {
    throw InvalidArgument("advantage: dimension mismatch");
  }
  Eigen::VectorXd adv = r + mdp.discount() * (mdp.transitions() * nu);
  for (int s = 0; s < mdp.n_states(); ++s) adv.segment(mdp.index(s, 0), mdp.n_actions()).array() -= nu(s);
  return adv;
}

Eigen::VectorXd policy_value(const TabularMdp& mdp, const Policy& policy,
                             const Eigen::Ref<const Eigen::VectorXd>& reward) {
  if (reward.size() != mdp.n_pairs()) throw InvalidArgument("policy_value: reward size");
  const Eigen::MatrixXd p_pi = state_transition_matrix(mdp, policy);
  Eigen::VectorXd r_pi(mdp.n_states());
  for (int s = 0; s < mdp.n_states(); ++s) {
    r_pi(s) = policy.probs.row(s).dot(reward.segment(mdp.index(s, 0), mdp.n_actions()));
  }
  const Eigen::Index n = mdp.n_states();
  return (Eigen::MatrixXd::Identity(n, n) - mdp.discount() * p_pi).partialPivLu().solve(r_pi);
}

Eigen::VectorXd optimal_q_values(const TabularMdp& mdp, const ValueIterationOptions& opts) {
  if (!mdp.reward()) throw InvalidArgument("expert_policy: MDP has no reward");
  const Eigen::VectorXd& reward = *mdp.reward();
  Eigen::VectorXd v = Eigen::VectorXd::Zero(mdp.n_states());
  Eigen::VectorXd q = reward;
  for (int it = 0; it < opts.max_iterations; ++it) {
    q = reward + mdp.discount() * (mdp.transitions() * v);
    Eigen::VectorXd v_next = q.reshaped(mdp.n_actions(), mdp.n_states()).colwise().maxCoeff().transpose();
    const double delta = (v_next - v).cwiseAbs().maxCoeff();
    v = std::move(v_next);
    if (delta <= opts.tolerance * (1.0 - mdp.discount())) {
      q = reward + mdp.discount() * (mdp.transitions() * v);
      return q;
    }
  }
  throw NumericalError("value iteration did not reach the requested residual");
}

Policy expert_policy(const TabularMdp& mdp, const ValueIterationOptions& opts) {
  const Eigen::VectorXd q = optimal_q_values(mdp, opts);
  const int na = mdp.n_actions();
  Eigen::VectorXi greedy(mdp.n_states());
  for (int s = 0; s < mdp.n_states(); ++s) {
    const auto row = q.segment(mdp.index(s, 0), na);
    const double best = row.maxCoeff();
    int choice = 0;
    while (row(choice) < best - opts.tie_tolerance) ++choice;
    greedy(s) = choice;
  }
  Policy p = Policy::deterministic(greedy, na);
  if (opts.epsilon_soft > 0.0) {
    p.probs = (1.0 - opts.epsilon_soft) * p.probs.array() + opts.epsilon_soft / na;
  }
  return p;
}

}  // namespace adaptdice
