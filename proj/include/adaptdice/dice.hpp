#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "adaptdice/dataset.hpp"
#include "adaptdice/mdp.hpp"

namespace adaptdice {

using Mask = Eigen::Array<bool, Eigen::Dynamic, 1>;

/// Discriminator outputs are clipped into (kDiscriminatorEps, 1 - kDiscriminatorEps).
inline constexpr double kDiscriminatorEps = 1e-6;
/// Floor used for log(dE/dU) where the expert has no mass.
inline constexpr double kRatioEps = 1e-12;
/// density_ratio clips A / (1 + alpha) into [-kAdvantageClip, kAdvantageClip].
inline constexpr double kAdvantageClip = 50.0;

struct DiceConfig {
  double alpha = 0.05;
  double gamma = 0.99;
  /// Defaults to 1 / smoothness_constant().
  std::optional<double> step_size;
  int iterations = 1000;
  /// How dataset expectations weigh records (occupancy, union mass, BC counts).
  Weighting weighting = Weighting::Discounted;

  void validate() const;
  double eta() const;
};

/// L_f = (1 + gamma)^2 / (1 + alpha).
double smoothness_constant(const DiceConfig& cfg);

/// Log density ratio over state-action pairs. Off-support entries hold a
/// finite floor value so that advantages stay defined everywhere, but losses
/// and ratios only ever read the support.
struct PseudoReward {
  Eigen::VectorXd values;
  Mask support;
  /// Entries where the exact ratio hit the kRatioEps floor.
  int floored = 0;

  static PseudoReward dense(Eigen::VectorXd values);
};

/// Tabular discriminator c(s,a). `raw` holds the unclipped minimizer.
struct Discriminator {
  enum class Method { CountBased, Logistic };

  Eigen::VectorXd c;
  Eigen::VectorXd raw;
  Mask support;
  Method method = Method::CountBased;
};

/// The dual DICE objective
///   L(nu) = (1 - gamma) <mu, nu> + (1 + alpha) log sum_{supp} dU exp(A_nu / (1 + alpha)),
/// restricted to the pairs where dU > 0. Construction validates all inputs
/// once so that repeated evaluation inside optimizers is cheap.
class DiceObjective {
 public:
  DiceObjective(const TabularMdp& mdp, PseudoReward r, Eigen::VectorXd mu, OccupancyMeasure dU, DiceConfig cfg);

  double loss(const Eigen::Ref<const PseudoValue>& nu) const;
  Eigen::VectorXd gradient(const Eigen::Ref<const PseudoValue>& nu) const;
  /// Softmax weights p(s,a) proportional to dU exp(A / (1 + alpha)), zero off support.
  Eigen::VectorXd softmax_weights(const Eigen::Ref<const PseudoValue>& nu) const;

  const TabularMdp& mdp() const noexcept { return mdp_; }
  const PseudoReward& reward() const noexcept { return r_; }
  const Eigen::VectorXd& mu() const noexcept { return mu_; }
  const OccupancyMeasure& dU() const noexcept { return dU_; }
  const DiceConfig& config() const noexcept { return cfg_; }
  const std::vector<int>& support() const noexcept { return support_; }

 private:
  Eigen::VectorXd scaled_advantage(const Eigen::Ref<const PseudoValue>& nu) const;

  TabularMdp mdp_;
  PseudoReward r_;
  Eigen::VectorXd mu_;
  OccupancyMeasure dU_;
  DiceConfig cfg_;
  std::vector<int> support_;
};

double dice_loss(const Eigen::Ref<const PseudoValue>& nu, const PseudoReward& r,
                 const Eigen::Ref<const Eigen::VectorXd>& mu, const Eigen::Ref<const OccupancyMeasure>& dU,
                 const DiceConfig& cfg, const TabularMdp& mdp);

Eigen::VectorXd dice_gradient(const Eigen::Ref<const PseudoValue>& nu, const PseudoReward& r,
                              const Eigen::Ref<const Eigen::VectorXd>& mu,
                              const Eigen::Ref<const OccupancyMeasure>& dU, const DiceConfig& cfg,
                              const TabularMdp& mdp);

/// nu - eta * grad L(nu). Shared by optimize_nu and the cross-domain loop so
/// both produce bit-identical iterates.
PseudoValue gradient_step(const DiceObjective& objective, const Eigen::Ref<const PseudoValue>& nu, double eta);

struct NuIterate {
  int iteration = 0;
  PseudoValue nu;
  double loss = 0.0;
  double grad_norm = 0.0;
};

struct NuTrace {
  std::vector<NuIterate> iterates;
  PseudoValue final_nu;
  /// Set when the step size exceeds 1 / L_f (descent is then not guaranteed).
  bool step_exceeds_bound = false;
};

/// Plain gradient descent for cfg.iterations steps. Iterates are recorded at
/// t = 0, every `record_every` steps, and at the final step. Throws
/// NumericalError naming the iteration on a non-finite loss or gradient.
NuTrace optimize_nu(const Eigen::Ref<const PseudoValue>& nu0, const DiceObjective& objective, int record_every = 1);

struct RatioDiagnostics {
  int clipped = 0;
};

/// w(s,a) = exp(A_nu(s,a) / (1 + alpha)) over all pairs, with the scaled
/// advantage clipped to [-50, 50].
DensityRatio density_ratio(const Eigen::Ref<const PseudoValue>& nu, const PseudoReward& r, const DiceConfig& cfg,
                           const TabularMdp& mdp, RatioDiagnostics* diag = nullptr);

/// Weighted behaviour cloning in closed form: pi(a|s) proportional to
/// w(s,a) * mass(s,a). States without mass get the uniform row, and so do
/// visited states whose weights are all zero (counted in `degenerate_states`).
Policy extract_policy_weighted(const Eigen::Ref<const DensityRatio>& w, const Eigen::Ref<const Eigen::VectorXd>& mass,
                               int n_states, int n_actions, int* degenerate_states = nullptr);

/// Weighted BC over a dataset; masses follow cfg.weighting.
Policy extract_policy_bc(const Eigen::Ref<const DensityRatio>& w, const Dataset& data, const TabularMdp& mdp,
                         const DiceConfig& cfg, int* degenerate_states = nullptr);

struct DiscriminatorOptions {
  Discriminator::Method method = Discriminator::Method::CountBased;
  /// l2 strength for the logistic fit.
  double reg = 0.0;
  int logistic_iterations = 20'000;
};

/// Closed-form (count-based) or gradient-descent (logistic) minimizer of the
/// binary cross-entropy between normalized expert and union masses.
Discriminator fit_discriminator(const Eigen::Ref<const Eigen::VectorXd>& expert_mass,
                                const Eigen::Ref<const Eigen::VectorXd>& union_mass,
                                const DiscriminatorOptions& opts = {});

Discriminator fit_discriminator(const Dataset& expert, const Dataset& union_data, const TabularMdp& mdp,
                                const DiceConfig& cfg, const DiscriminatorOptions& opts = {});

/// r = -log(1/c - 1) on the discriminator's support.
PseudoReward pseudo_reward_from_disc(const Discriminator& disc);

/// r = log(dE / dU) on supp(dU); dE = 0 entries use log(kRatioEps / dU).
PseudoReward pseudo_reward_exact(const Eigen::Ref<const OccupancyMeasure>& dE,
                                 const Eigen::Ref<const OccupancyMeasure>& dU);

/// Everything the DICE loss needs from an (expert, union) dataset pair.
struct DiceInputs {
  Discriminator disc;
  PseudoReward r;
  Eigen::VectorXd mu;
  OccupancyMeasure dU;
};

DiceInputs prepare_dice_inputs(const Dataset& expert, const Dataset& union_data, const TabularMdp& mdp,
                               const DiceConfig& cfg, const DiscriminatorOptions& disc_opts = {});

struct DemoDiceResult {
  DiceInputs inputs;
  PseudoValue nu;
  DensityRatio w;
  Policy policy;
  NuTrace trace;
};

/// Discriminator, pseudo-reward, gradient descent on nu from zero, density
/// ratio, weighted BC over the union dataset.
DemoDiceResult demodice_train(const Dataset& expert, const Dataset& union_data, const TabularMdp& mdp,
                              const DiceConfig& cfg, int record_every = 1,
                              const DiscriminatorOptions& disc_opts = {});

}  // namespace adaptdice
