#include <doctest.h>

#include <cmath>
#include <limits>

#include "adaptdice/dice.hpp"
#include "adaptdice/theory.hpp"
#include "helpers.hpp"

using namespace adaptdice;
using namespace testing_support;

namespace {

// The loss written out in long double with a plain (unshifted) sum.
long double loss_long_double(const DiceInstance& inst, const Eigen::VectorXd& nu) {
  const TabularMdp& mdp = inst.mdp;
  const long double g = inst.cfg.gamma;
  const long double a1 = 1.0L + inst.cfg.alpha;
  long double lin = 0.0L;
  for (int s = 0; s < mdp.n_states(); ++s) lin += inst.mu(s) * static_cast<long double>(nu(s));
  long double sum = 0.0L;
  for (int s = 0; s < mdp.n_states(); ++s) {
    for (int a = 0; a < mdp.n_actions(); ++a) {
      const int sa = s * mdp.n_actions() + a;
      if (!(inst.dU(sa) > 0.0)) continue;
      long double adv = inst.r.values(sa) - static_cast<long double>(nu(s));
      for (int s2 = 0; s2 < mdp.n_states(); ++s2) adv += g * mdp.transition(s, a, s2) * static_cast<long double>(nu(s2));
      sum += inst.dU(sa) * std::exp(adv / a1);
    }
  }
  return (1.0L - g) * lin + a1 * std::log(sum);
}

Eigen::VectorXd random_nu(Rng& rng, int n, double scale) {
  Eigen::VectorXd nu(n);
  for (int i = 0; i < n; ++i) nu(i) = rng.uniform(-scale, scale);
  return nu;
}

}  // namespace

TEST_CASE("loss matches a long-double evaluation") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const DiceInstance inst = random_instance(seed, 6, 3, 0.9, 0.05);
    Rng rng(seed);
    const Eigen::VectorXd nu = random_nu(rng, 6, 3.0);
    const double l = inst.objective().loss(nu);
    CHECK(std::abs(l - static_cast<double>(loss_long_double(inst, nu))) < 1e-12 * (1.0 + std::abs(l)));
  }
}

TEST_CASE("gradient matches central differences") {
  const DiceInstance inst = random_instance(3, 5, 2, 0.95, 0.5);
  const DiceObjective obj = inst.objective();
  Rng rng(4);
  const Eigen::VectorXd nu = random_nu(rng, 5, 2.0);
  const Eigen::VectorXd g = obj.gradient(nu);
  const double h = 1e-5;
  for (int i = 0; i < 5; ++i) {
    Eigen::VectorXd plus = nu, minus = nu;
    plus(i) += h;
    minus(i) -= h;
    CHECK(std::abs((obj.loss(plus) - obj.loss(minus)) / (2 * h) - g(i)) < 1e-8);
  }
  CHECK(std::abs(g.sum()) < 1e-12);
}

TEST_CASE("free functions agree with the objective") {
  const DiceInstance inst = random_instance(8, 4, 3, 0.9, 0.05);
  const Eigen::VectorXd nu = Eigen::VectorXd::LinSpaced(4, -1.0, 1.0);
  CHECK(dice_loss(nu, inst.r, inst.mu, inst.dU, inst.cfg, inst.mdp) == inst.objective().loss(nu));
  CHECK(dice_gradient(nu, inst.r, inst.mu, inst.dU, inst.cfg, inst.mdp) == inst.objective().gradient(nu));
}

TEST_CASE("loss is unchanged by constant shifts") {
  const DiceInstance inst = random_instance(5, 7, 2, 0.99, 0.01);
  const DiceObjective obj = inst.objective();
  Rng rng(6);
  for (int k = 0; k < 20; ++k) {
    const Eigen::VectorXd nu = random_nu(rng, 7, 5.0);
    const double c = rng.uniform(-100.0, 100.0);
    CHECK(std::abs(obj.loss(nu.array() + c) - obj.loss(nu)) <= 1e-9 * (1.0 + std::abs(c)));
  }
}

TEST_CASE("smoothness constant and default step") {
  DiceConfig cfg;
  cfg.gamma = 0.9;
  cfg.alpha = 0.05;
  CHECK(smoothness_constant(cfg) == doctest::Approx(1.9 * 1.9 / 1.05).epsilon(1e-15));
  CHECK(cfg.eta() == doctest::Approx(1.05 / (1.9 * 1.9)).epsilon(1e-15));
  cfg.step_size = 0.01;
  CHECK(cfg.eta() == 0.01);
  cfg.alpha = -1.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
}

TEST_CASE("density ratio is the clipped scaled exponential of the advantage") {
  const DiceInstance inst = random_instance(9, 4, 2, 0.9, 0.05);
  Eigen::VectorXd nu(4);
  nu << 0.0, 1.0, -1.0, 200.0;
  RatioDiagnostics diag;
  const DensityRatio w = density_ratio(nu, inst.r, inst.cfg, inst.mdp, &diag);
  const Eigen::VectorXd A = advantage(nu, inst.r.values, inst.mdp);
  int clipped = 0;
  for (int i = 0; i < 8; ++i) {
    const double x = A(i) / 1.05;
    const double xc = std::clamp(x, -kAdvantageClip, kAdvantageClip);
    clipped += x != xc ? 1 : 0;
    CHECK(w(i) == doctest::Approx(std::exp(xc)).epsilon(1e-14));
  }
  CHECK(clipped > 0);
  CHECK(diag.clipped == clipped);
}

TEST_CASE("count-based discriminator reproduces the log ratio") {
  Rng rng(10);
  const Eigen::VectorXd dE = rng.simplex(12);
  const Eigen::VectorXd dU = rng.simplex(12);
  const Discriminator disc = fit_discriminator(dE, dU);
  const PseudoReward r = pseudo_reward_from_disc(disc);
  for (int i = 0; i < 12; ++i) {
    CHECK(std::abs(std::log(disc.raw(i) / (1.0 - disc.raw(i))) - std::log(dE(i) / dU(i))) < 1e-10);
    CHECK(disc.c(i) >= kDiscriminatorEps);
    CHECK(disc.c(i) <= 1.0 - kDiscriminatorEps);
  }
  CHECK((r.values - pseudo_reward_exact(dE, dU).values).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("clipping floors the reward of pairs the expert never takes") {
  Eigen::VectorXd dE(3), dU(3);
  dE << 0.5, 0.5, 0.0;
  dU << 0.2, 0.3, 0.5;
  const PseudoReward r = pseudo_reward_from_disc(fit_discriminator(dE, dU));
  CHECK(r.values(2) == doctest::Approx(std::log(kDiscriminatorEps / (1.0 - kDiscriminatorEps))).epsilon(1e-12));
  const PseudoReward exact = pseudo_reward_exact(dE, dU);
  CHECK(exact.values(2) == doctest::Approx(std::log(kRatioEps / 0.5)));
  CHECK(exact.floored == 1);
}

TEST_CASE("logistic discriminator approaches the count-based one") {
  Rng rng(12);
  const Eigen::VectorXd dE = rng.simplex(6);
  const Eigen::VectorXd dU = rng.simplex(6);
  DiscriminatorOptions opts;
  opts.method = Discriminator::Method::Logistic;
  opts.logistic_iterations = 200'000;
  const Discriminator logit = fit_discriminator(dE, dU, opts);
  const Discriminator count = fit_discriminator(dE, dU);
  CHECK((logit.c - count.c).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("weighted behaviour cloning by hand") {
  Eigen::VectorXd w(4), mass(4);
  w << 2.0, 1.0, 0.0, 0.0;
  mass << 1.0, 2.0, 3.0, 1.0;
  int degenerate = 0;
  const Policy pi = extract_policy_weighted(w, mass, 2, 2, &degenerate);
  CHECK(pi(0, 0) == 0.5);
  CHECK(pi(0, 1) == 0.5);
  CHECK(pi(1, 0) == 0.5);
  CHECK(degenerate == 1);
}

TEST_CASE("gradient descent never increases the loss at eta = 1/L") {
  const DiceInstance inst = random_instance(13, 8, 3, 0.9, 0.05);
  DiceInstance local = inst;
  local.cfg.iterations = 300;
  const NuTrace trace = optimize_nu(Eigen::VectorXd::Zero(8), local.objective(), 1);
  REQUIRE(trace.iterates.size() == 301);
  for (std::size_t t = 1; t < trace.iterates.size(); ++t) {
    CHECK(trace.iterates[t].loss <= trace.iterates[t - 1].loss + 1e-15);
  }
  CHECK_FALSE(trace.step_exceeds_bound);
  CHECK(std::abs(trace.final_nu.mean()) < 1e-12);
}

TEST_CASE("oversized steps are flagged") {
  DiceInstance inst = random_instance(14, 4, 2, 0.9, 0.05);
  inst.cfg.iterations = 5;
  inst.cfg.step_size = 2.0 / smoothness_constant(inst.cfg);
  CHECK(optimize_nu(Eigen::VectorXd::Zero(4), inst.objective()).step_exceeds_bound);
}

TEST_CASE("dual optimum matches the primal over a policy grid") {
  // Two states, two actions: every feasible occupancy is d^pi for some pi,
  // parameterized by pi(a0|s0) and pi(a0|s1). Strong duality gives
  // max_d <d, r> - (1 + alpha) KL(d || dU) = min_nu L(nu).
  const DiceInstance inst = random_instance(15, 2, 2, 0.8, 0.3);
  const OracleResult oracle = oracle_optimum(inst.objective());
  const double l_star = inst.objective().loss(oracle.nu_star);
  const Eigen::VectorXd p_star = inst.objective().softmax_weights(oracle.nu_star);
  CHECK(flow_residual(inst.mdp, p_star) < 1e-10);

  auto primal = [&](const Eigen::VectorXd& d) {
    double j = 0.0;
    for (int i = 0; i < 4; ++i) {
      if (d(i) > 0.0) j += d(i) * inst.r.values(i) - (1.0 + inst.cfg.alpha) * d(i) * std::log(d(i) / inst.dU(i));
    }
    return j;
  };
  CHECK(std::abs(primal(p_star) - l_star) < 1e-9);

  double best = -std::numeric_limits<double>::infinity();
  const int steps = 400;
  for (int i = 0; i <= steps; ++i) {
    for (int k = 0; k <= steps; ++k) {
      Policy pi{Eigen::MatrixXd(2, 2)};
      pi.probs << double(i) / steps, 1.0 - double(i) / steps, double(k) / steps, 1.0 - double(k) / steps;
      best = std::max(best, primal(occupancy_by_rollout(inst.mdp, pi)));
    }
  }
  CHECK(best <= l_star + 1e-9);
  CHECK(best >= l_star - 1e-3);
}

TEST_CASE("long descent reaches a flow-feasible occupancy") {
  const DiceInstance inst = random_instance(16, 5, 2, 0.9, 0.05);
  DiceConfig cfg = inst.cfg;
  cfg.iterations = 20'000;
  const DiceObjective obj(inst.mdp, inst.r, inst.mu, inst.dU, cfg);
  const NuTrace trace = optimize_nu(Eigen::VectorXd::Zero(5), obj, 20'000);
  const Eigen::VectorXd p = obj.softmax_weights(trace.final_nu);
  // The minimizer's occupancy is feasible for the true dynamics.
  CHECK(flow_residual(inst.mdp, p) < 1e-6);
}
