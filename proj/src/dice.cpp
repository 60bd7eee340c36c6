#include "adaptdice/dice.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <sstream>

namespace adaptdice {

namespace {

std::string pair_name(int sa, int n_actions) {
  std::ostringstream os;
  os << "(s=" << sa / n_actions << ", a=" << sa % n_actions << ")";
  return os.str();
}

double logit(double c) { return std::log(c) - std::log1p(-c); }

}  // namespace

void DiceConfig::validate() const {
  if (!(alpha >= 0.0)) throw InvalidArgument("DiceConfig: alpha must be >= 0");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw InvalidArgument("DiceConfig: gamma must lie in [0, 1)");
  if (step_size && !(*step_size > 0.0)) throw InvalidArgument("DiceConfig: step size must be > 0");
  if (iterations < 1) throw InvalidArgument("DiceConfig: iterations must be >= 1");
}

double DiceConfig::eta() const { return step_size ? *step_size : 1.0 / smoothness_constant(*this); }

double smoothness_constant(const DiceConfig& cfg) { return (1.0 + cfg.gamma) * (1.0 + cfg.gamma) / (1.0 + cfg.alpha); }

PseudoReward PseudoReward::dense(Eigen::VectorXd values) {
  PseudoReward r;
  r.support = Mask::Constant(values.size(), true);
  r.values = std::move(values);
  return r;
}

DiceObjective::DiceObjective(const TabularMdp& mdp, PseudoReward r, Eigen::VectorXd mu, OccupancyMeasure dU,
                             DiceConfig cfg)
    : mdp_(mdp), r_(std::move(r)), mu_(std::move(mu)), dU_(std::move(dU)), cfg_(cfg) {
  cfg_.validate();
  if (cfg_.gamma != mdp_.discount()) throw InvalidArgument("DiceObjective: cfg.gamma differs from the MDP discount");
  if (r_.values.size() != mdp_.n_pairs() || r_.support.size() != mdp_.n_pairs() || dU_.size() != mdp_.n_pairs() ||
      mu_.size() != mdp_.n_states()) {
    throw InvalidArgument("DiceObjective: dimension mismatch");
  }
  if (!mu_.allFinite() || (mu_.array() < 0.0).any() || std::abs(mu_.sum() - 1.0) > 1e-9) {
    throw InvalidArgument("DiceObjective: mu must be a probability vector");
  }
  if (!dU_.allFinite() || (dU_.array() < 0.0).any()) {
    throw InvalidArgument("DiceObjective: dU must be finite and non-negative");
  }
  for (int sa = 0; sa < mdp_.n_pairs(); ++sa) {
    if (dU_(sa) <= 0.0) continue;
    if (!r_.support(sa) || !std::isfinite(r_.values(sa))) {
      throw InvalidArgument("DiceObjective: pseudo-reward undefined at " + pair_name(sa, mdp_.n_actions()) +
                            " inside supp(dU)");
    }
    support_.push_back(sa);
  }
  if (support_.empty()) throw InvalidArgument("DiceObjective: dU has empty support");
}

Eigen::VectorXd DiceObjective::scaled_advantage(const Eigen::Ref<const PseudoValue>& nu) const {
  if (nu.size() != mdp_.n_states()) throw InvalidArgument("DiceObjective: nu has the wrong size");
  Eigen::VectorXd x = advantage(nu, r_.values, mdp_) / (1.0 + cfg_.alpha);
  for (int sa : support_) {
    if (!std::isfinite(x(sa))) {
      throw NumericalError("DiceObjective: non-finite advantage at " + pair_name(sa, mdp_.n_actions()));
    }
  }
  return x;
}

double DiceObjective::loss(const Eigen::Ref<const PseudoValue>& nu) const {
  const Eigen::VectorXd x = scaled_advantage(nu);
  double m = -std::numeric_limits<double>::infinity();
  for (int sa : support_) m = std::max(m, x(sa));
  double sum = 0.0;
  for (int sa : support_) sum += dU_(sa) * std::exp(x(sa) - m);
  const double value = (1.0 - cfg_.gamma) * mu_.dot(nu) + (1.0 + cfg_.alpha) * (m + std::log(sum));
  if (!std::isfinite(value)) throw NumericalError("DiceObjective: non-finite loss");
  return value;
}

Eigen::VectorXd DiceObjective::softmax_weights(const Eigen::Ref<const PseudoValue>& nu) const {
  const Eigen::VectorXd x = scaled_advantage(nu);
  double m = -std::numeric_limits<double>::infinity();
  for (int sa : support_) m = std::max(m, x(sa));
  Eigen::VectorXd p = Eigen::VectorXd::Zero(mdp_.n_pairs());
  for (int sa : support_) p(sa) = dU_(sa) * std::exp(x(sa) - m);
  return p / p.sum();
}

Eigen::VectorXd DiceObjective::gradient(const Eigen::Ref<const PseudoValue>& nu) const {
  const Eigen::VectorXd p = softmax_weights(nu);
  // sum_{s,a} p(s,a) (gamma P(.|s,a) - e_s)
  Eigen::VectorXd g = (1.0 - cfg_.gamma) * mu_ + cfg_.gamma * (mdp_.transitions().transpose() * p) -
                      state_marginal(p, mdp_.n_states(), mdp_.n_actions());
  if (!g.allFinite()) throw NumericalError("DiceObjective: non-finite gradient");
  return g;
}

double dice_loss(const Eigen::Ref<const PseudoValue>& nu, const PseudoReward& r,
                 const Eigen::Ref<const Eigen::VectorXd>& mu, const Eigen::Ref<const OccupancyMeasure>& dU,
                 const DiceConfig& cfg, const TabularMdp& mdp) {
  return DiceObjective(mdp, r, mu, dU, cfg).loss(nu);
}

Eigen::VectorXd dice_gradient(const Eigen::Ref<const PseudoValue>& nu, const PseudoReward& r,
                              const Eigen::Ref<const Eigen::VectorXd>& mu,
                              const Eigen::Ref<const OccupancyMeasure>& dU, const DiceConfig& cfg,
                              const TabularMdp& mdp) {
  return DiceObjective(mdp, r, mu, dU, cfg).gradient(nu);
}

PseudoValue gradient_step(const DiceObjective& objective, const Eigen::Ref<const PseudoValue>& nu, double eta) {
  PseudoValue next = nu - eta * objective.gradient(nu);
  return next;
}

NuTrace optimize_nu(const Eigen::Ref<const PseudoValue>& nu0, const DiceObjective& objective, int record_every) {
  const DiceConfig& cfg = objective.config();
  const double eta = cfg.eta();
  NuTrace trace;
  if (eta > 1.0 / smoothness_constant(cfg) * (1.0 + 1e-12)) {
    trace.step_exceeds_bound = true;
    std::clog << "optimize_nu: step size " << eta << " exceeds 1/L_f = " << 1.0 / smoothness_constant(cfg)
              << "; descent is not guaranteed\n";
  }
  record_every = std::max(record_every, 1);

  PseudoValue nu = nu0;
  auto record = [&](int t) {
    try {
      const Eigen::VectorXd g = objective.gradient(nu);
      trace.iterates.push_back(NuIterate{t, nu, objective.loss(nu), g.norm()});
    } catch (const NumericalError& e) {
      throw NumericalError("optimize_nu: iteration " + std::to_string(t) + ": " + e.what());
    }
  };
  record(0);
  for (int t = 1; t <= cfg.iterations; ++t) {
    try {
      nu = gradient_step(objective, nu, eta);
    } catch (const NumericalError& e) {
      throw NumericalError("optimize_nu: iteration " + std::to_string(t) + ": " + e.what());
    }
    if (!nu.allFinite()) throw NumericalError("optimize_nu: non-finite iterate at iteration " + std::to_string(t));
    if (t % record_every == 0 || t == cfg.iterations) record(t);
  }
  trace.final_nu = nu;
  return trace;
}

DensityRatio density_ratio(const Eigen::Ref<const PseudoValue>& nu, const PseudoReward& r, const DiceConfig& cfg,
                           const TabularMdp& mdp, RatioDiagnostics* diag) {
  cfg.validate();
  const Eigen::VectorXd x = advantage(nu, r.values, mdp) / (1.0 + cfg.alpha);
  DensityRatio w(x.size());
  int clipped = 0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (std::isnan(x(i))) throw NumericalError("density_ratio: NaN advantage at " + pair_name(static_cast<int>(i), mdp.n_actions()));
    double xi = x(i);
    if (xi > kAdvantageClip || xi < -kAdvantageClip) {
      xi = std::clamp(xi, -kAdvantageClip, kAdvantageClip);
      ++clipped;
    }
    w(i) = std::exp(xi);
  }
  if (diag) diag->clipped += clipped;
  return w;
}

Policy extract_policy_weighted(const Eigen::Ref<const DensityRatio>& w, const Eigen::Ref<const Eigen::VectorXd>& mass,
                               int n_states, int n_actions, int* degenerate_states) {
  if (w.size() != n_states * n_actions || mass.size() != n_states * n_actions) {
    throw InvalidArgument("extract_policy: dimension mismatch");
  }
  if ((w.array() < 0.0).any() || !w.allFinite()) throw InvalidArgument("extract_policy: weights must be finite and >= 0");
  Policy pi = Policy::uniform(n_states, n_actions);
  int degenerate = 0;
  for (int s = 0; s < n_states; ++s) {
    const auto m = mass.segment(s * n_actions, n_actions);
    if (!(m.sum() > 0.0)) continue;
    const Eigen::VectorXd weighted = w.segment(s * n_actions, n_actions).cwiseProduct(m);
    const double total = weighted.sum();
    if (total > 0.0) {
      pi.probs.row(s) = weighted.transpose() / total;
    } else {
      ++degenerate;
    }
  }
  if (degenerate > 0) {
    if (degenerate_states) *degenerate_states += degenerate;
  }
  return pi;
}

Policy extract_policy_bc(const Eigen::Ref<const DensityRatio>& w, const Dataset& data, const TabularMdp& mdp,
                         const DiceConfig& cfg, int* degenerate_states) {
  if (data.empty()) throw EmptyDatasetError("extract_policy_bc: empty dataset");
  const Eigen::VectorXd mass = pair_mass(data, mdp.n_states(), mdp.n_actions(), mdp.discount(), cfg.weighting);
  return extract_policy_weighted(w, mass, mdp.n_states(), mdp.n_actions(), degenerate_states);
}

Discriminator fit_discriminator(const Eigen::Ref<const Eigen::VectorXd>& expert_mass,
                                const Eigen::Ref<const Eigen::VectorXd>& union_mass,
                                const DiscriminatorOptions& opts) {
  if (expert_mass.size() != union_mass.size()) throw InvalidArgument("fit_discriminator: dimension mismatch");
  const double e_total = expert_mass.sum();
  const double u_total = union_mass.sum();
  if (!(e_total > 0.0) || !(u_total > 0.0)) throw EmptyDatasetError("fit_discriminator: empty expert or union data");
  const Eigen::VectorXd pe = expert_mass / e_total;
  const Eigen::VectorXd pu = union_mass / u_total;
  const Eigen::Index n = pe.size();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (pe(i) > 0.0 && !(pu(i) > 0.0)) {
      throw InvalidArgument("fit_discriminator: expert pair " + std::to_string(i) +
                            " is absent from the union data (expert data must be a subset of the union)");
    }
  }

  Discriminator disc;
  disc.method = opts.method;
  disc.support = pu.array() > 0.0;
  disc.raw = Eigen::VectorXd::Zero(n);

  if (opts.method == Discriminator::Method::CountBased) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (disc.support(i)) disc.raw(i) = pe(i) / (pe(i) + pu(i));
    }
  } else {
    // Per-pair logits with one-hot features:
    //   J(theta) = -sum pe log sigma(theta) - sum pu log(1 - sigma(theta)) + reg/2 |theta|^2
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(n);
    const double curvature = 0.25 * (pe + pu).maxCoeff() + opts.reg;
    const double step = 1.0 / curvature;
    for (int it = 0; it < opts.logistic_iterations; ++it) {
      const Eigen::ArrayXd sig = 1.0 / (1.0 + (-theta.array()).exp());
      const Eigen::ArrayXd grad = -pe.array() * (1.0 - sig) + pu.array() * sig + opts.reg * theta.array();
      theta.array() -= step * grad;
    }
    disc.raw = (1.0 / (1.0 + (-theta.array()).exp())).matrix();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!disc.support(i)) disc.raw(i) = 0.0;
    }
  }
  disc.c = disc.raw.cwiseMax(kDiscriminatorEps).cwiseMin(1.0 - kDiscriminatorEps);
  return disc;
}

Discriminator fit_discriminator(const Dataset& expert, const Dataset& union_data, const TabularMdp& mdp,
                                const DiceConfig& cfg, const DiscriminatorOptions& opts) {
  if (expert.empty() || union_data.empty()) throw EmptyDatasetError("fit_discriminator: empty dataset");
  const Eigen::VectorXd me = pair_mass(expert, mdp.n_states(), mdp.n_actions(), mdp.discount(), cfg.weighting);
  const Eigen::VectorXd mu = pair_mass(union_data, mdp.n_states(), mdp.n_actions(), mdp.discount(), cfg.weighting);
  return fit_discriminator(me, mu, opts);
}

PseudoReward pseudo_reward_from_disc(const Discriminator& disc) {
  PseudoReward r;
  r.support = disc.support;
  const double floor_value = logit(kDiscriminatorEps);
  r.values = Eigen::VectorXd::Constant(disc.c.size(), floor_value);
  for (Eigen::Index i = 0; i < disc.c.size(); ++i) {
    if (disc.support(i)) r.values(i) = logit(disc.c(i));
  }
  return r;
}

PseudoReward pseudo_reward_exact(const Eigen::Ref<const OccupancyMeasure>& dE,
                                 const Eigen::Ref<const OccupancyMeasure>& dU) {
  if (dE.size() != dU.size()) throw InvalidArgument("pseudo_reward_exact: dimension mismatch");
  PseudoReward r;
  r.support = dU.array() > 0.0;
  r.values = Eigen::VectorXd::Constant(dE.size(), std::log(kRatioEps));
  for (Eigen::Index i = 0; i < dE.size(); ++i) {
    if (dE(i) > 0.0 && !(dU(i) > 0.0)) {
      throw InvalidArgument("pseudo_reward_exact: supp(dE) is not contained in supp(dU)");
    }
    if (!r.support(i)) continue;
    if (dE(i) > 0.0) {
      r.values(i) = std::log(dE(i) / dU(i));
    } else {
      r.values(i) = std::log(kRatioEps / dU(i));
      ++r.floored;
    }
  }
  return r;
}

DiceInputs prepare_dice_inputs(const Dataset& expert, const Dataset& union_data, const TabularMdp& mdp,
                               const DiceConfig& cfg, const DiscriminatorOptions& disc_opts) {
  cfg.validate();
  DiceInputs in;
  in.disc = fit_discriminator(expert, union_data, mdp, cfg, disc_opts);
  in.r = pseudo_reward_from_disc(in.disc);
  in.mu = initial_state_distribution(union_data, mdp.n_states());
  in.dU = empirical_occupancy(union_data, mdp, RecordFilter::All, cfg.weighting);
  return in;
}

DemoDiceResult demodice_train(const Dataset& expert, const Dataset& union_data, const TabularMdp& mdp,
                              const DiceConfig& cfg, int record_every, const DiscriminatorOptions& disc_opts) {
  DemoDiceResult out;
  out.inputs = prepare_dice_inputs(expert, union_data, mdp, cfg, disc_opts);
  const DiceObjective objective(mdp, out.inputs.r, out.inputs.mu, out.inputs.dU, cfg);
  out.trace = optimize_nu(PseudoValue::Zero(mdp.n_states()), objective, record_every);
  out.nu = out.trace.final_nu;
  out.w = density_ratio(out.nu, out.inputs.r, cfg, mdp);
  out.policy = extract_policy_bc(out.w, union_data, mdp, cfg);
  return out;
}

}  // namespace adaptdice
