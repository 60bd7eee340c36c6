#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "adaptdice/crossdomain.hpp"
#include "adaptdice/dice.hpp"
#include "adaptdice/mdp.hpp"
#include "adaptdice/rng.hpp"

namespace adaptdice {

struct InstanceDescriptor {
  std::uint64_t seed = 0;
  int n_states = 0;
  int n_actions = 0;
  double gamma = 0.0;
  double alpha = 0.0;
};

/// margin = bound - measured; pass iff margin >= -tolerance.
struct CheckReport {
  std::string name;
  InstanceDescriptor instance;
  bool pass = false;
  double measured = 0.0;
  double bound = 0.0;
  double margin = 0.0;
  double tolerance = 0.0;
  std::string note;

  static CheckReport make(std::string name, const InstanceDescriptor& instance, double measured, double bound,
                          double tolerance, std::string note = {});
  /// Recomputes margin and pass from (measured, bound, tolerance).
  bool consistent() const;
};

/// A random DICE instance: dense random dynamics, full-support dU and mu,
/// and r = log(dE / dU) for a random full-support dE.
struct DiceInstance {
  TabularMdp mdp;
  PseudoReward r;
  Eigen::VectorXd mu;
  OccupancyMeasure dU;
  DiceConfig cfg;
  InstanceDescriptor descriptor;

  DiceObjective objective() const { return DiceObjective(mdp, r, mu, dU, cfg); }
};

DiceInstance random_instance(std::uint64_t seed, int n_states, int n_actions, double gamma, double alpha);

/// Convexity chords, gradient Lipschitz ratio against L_f, and |<grad L, 1>|
/// over `n_samples` random nu with entries in [-5, 5].
std::vector<CheckReport> check_lemma1(std::uint64_t seed, int n_states, int n_actions, double gamma, double alpha,
                                      int n_samples = 20);

/// Raised when the multi-start oracle runs disagree on w*.
class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OracleOptions {
  /// Gradient-descent budget; a damped Newton polish follows if descent stalls.
  int max_iterations = 1'000'000;
  int newton_steps = 200;
  double grad_tolerance = 1e-12;
  int n_starts = 3;
  double agreement = 1e-8;
  std::uint64_t seed = 0;
};

struct OracleResult {
  /// The representative of S* that descent from 0 converges to: zero on
  /// states the loss ignores, total mean zero.
  PseudoValue nu_star;
  DensityRatio w_star;
  /// Largest elementwise w* difference between starts (over supp(dU)).
  double spread = 0.0;
  int iterations = 0;
  /// Pairs of supp(dU) that can reach a state without supported actions. No
  /// feasible occupancy uses them, so the infimum sends their w to 0 with
  /// nu -> -inf on the dead states; w* is set to 0 there exactly.
  int excluded_pairs = 0;
};

/// Long gradient descent from several starts; each final nu is mapped to the
/// representative described on OracleResult::nu_star (descent preserves the
/// mean, so this is where descent from 0 ends up). When supp(dU) is not closed under
/// the dynamics the descent runs on the largest closed subset, which has the
/// same limiting w*. Throws OracleError when the starts disagree by more than
/// `agreement`, or when an initial state has no usable pair.
OracleResult oracle_optimum(const DiceObjective& objective, const OracleOptions& opts = {});

/// nu* + mean(nu - nu*) * 1, the closest point of {nu* + C 1}.
PseudoValue project_to_optimal_set(const Eigen::Ref<const PseudoValue>& nu,
                                   const Eigen::Ref<const PseudoValue>& nu_star);

struct GrowthEstimate {
  double c_hat = 0.0;
  int samples = 0;
  std::vector<double> radii;
  /// Smallest probe ratio at each radius.
  std::vector<double> c_per_radius;
  /// ||nu - Pi(nu)|| of every accepted probe.
  std::vector<double> residuals;
};

/// c_hat = min over probes of 2 (L(nu) - L*) / ||nu - Pi(nu)||^2, probing
/// nu* + r d + k 1 for unit d orthogonal to 1, r on 10^{-2}, 10^{-1.5}, ..., 1.
/// Throws InvalidArgument if every probe lies in S*.
template <class Loss>
GrowthEstimate estimate_growth(Loss&& loss, const Eigen::Ref<const PseudoValue>& nu_star, int n_probes,
                               std::uint64_t seed = 0) {
  const Eigen::Index n = nu_star.size();
  const double l_star = loss(PseudoValue(nu_star));
  Rng rng(derive_seed(seed, "growth"));
  GrowthEstimate est;
  est.c_hat = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= 4; ++k) {
    const double radius = std::pow(10.0, -2.0 + 0.5 * k);
    double c_min = std::numeric_limits<double>::infinity();
    for (int p = 0; p < n_probes; ++p) {
      PseudoValue d(n);
      for (Eigen::Index i = 0; i < n; ++i) d(i) = rng.uniform(-1.0, 1.0);
      d.array() -= d.mean();
      const double norm = d.norm();
      if (!(norm > 0.0)) continue;
      const PseudoValue nu = nu_star + radius * d / norm + PseudoValue::Constant(n, rng.uniform(-1.0, 1.0));
      const double residual = (nu - project_to_optimal_set(nu, nu_star)).norm();
      if (!(residual > 1e-14)) continue;
      const double c = 2.0 * (loss(nu) - l_star) / (residual * residual);
      c_min = std::min(c_min, c);
      est.residuals.push_back(residual);
      ++est.samples;
    }
    est.radii.push_back(radius);
    est.c_per_radius.push_back(c_min);
    est.c_hat = std::min(est.c_hat, c_min);
  }
  if (est.samples == 0) throw InvalidArgument("estimate_growth: every probe lies in the optimal set");
  return est;
}

/// Growth estimate for a DICE objective around its oracle optimum.
GrowthEstimate estimate_growth(const DiceObjective& objective, const Eigen::Ref<const PseudoValue>& nu_star,
                               int n_probes = 20, std::uint64_t seed = 0);

struct Lemma2Result {
  /// envelope, final-decade, full-bound (estimated constant), loss-gap (recorded only).
  std::vector<CheckReport> reports;
  /// e(t) = max over supp(dU) |w^(t) - w*| for t = 0..T.
  std::vector<double> errors;
  double K = 0.0;
  GrowthEstimate growth;
  /// First t after which the full bound with c_hat holds through T; -1 if none.
  int t0 = -1;
};

/// Gradient descent from nu = 0 with eta = 1/L_f against the oracle optimum.
Lemma2Result check_lemma2(const DiceInstance& instance, int T = 10'000, const OracleOptions& oracle = {});
Lemma2Result check_lemma2(std::uint64_t seed, int n_states, int n_actions, double gamma, double alpha,
                          int T = 10'000);

/// Pointwise triangle bound along a recorded oracle-checked run; `min_property`
/// adds the equality check, which only applies to oracle-driven theoretical beta.
std::vector<CheckReport> theorem1_reports(const AdaptDiceResult& run, const InstanceDescriptor& instance,
                                          bool min_property);

/// Builds a permuted pair of the given sizes, pretrains the source, computes
/// the target oracle and runs AdaptDICE twice: harmonic beta (pointwise bound)
/// and theoretical beta with oracle deltas (pointwise bound and min property).
std::vector<CheckReport> check_theorem1(std::uint64_t seed, int n_states, int n_actions, double gamma, double alpha,
                                        int T = 200);

/// 100 instances by default. gamma and alpha cycle through {0.5, 0.9, 0.99} x
/// {0.01, 0.05, 0.5} so every combination appears; sizes are drawn from
/// 3..20 states and 2..5 actions.
std::vector<CheckReport> lemma1_suite(std::uint64_t seed, int n_instances = 100);
/// Fixed instances: seeds 1000.., 10 states, 3 actions, gamma 0.9, alpha 0.05.
std::vector<CheckReport> lemma2_suite(int n_instances = 5, int T = 10'000);
/// Permuted pairs of 4..8 states and 2..3 actions, gamma 0.9, alpha 0.05.
std::vector<CheckReport> theorem1_suite(std::uint64_t seed, int n_instances = 3);
/// "lemma1", "lemma2", "theorem1" or "all".
std::vector<CheckReport> run_suite(const std::string& name, std::uint64_t seed);

/// JSON array of reports.
std::string certificates_json(const std::vector<CheckReport>& reports);
void print_summary(std::ostream& os, const std::vector<CheckReport>& reports);

}  // namespace adaptdice
