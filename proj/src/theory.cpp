#include "adaptdice/theory.hpp"

#include <algorithm>
#include <cstdio>
#include <iomanip>

#include <Eigen/Dense>
#include <json.hpp>

#include "adaptdice/bench.hpp"

namespace adaptdice {

CheckReport CheckReport::make(std::string name, const InstanceDescriptor& instance, double measured, double bound,
                              double tolerance, std::string note) {
  CheckReport r;
  r.name = std::move(name);
  r.instance = instance;
  r.measured = measured;
  r.bound = bound;
  r.margin = bound - measured;
  r.tolerance = tolerance;
  r.pass = r.margin >= -tolerance;
  r.note = std::move(note);
  return r;
}

bool CheckReport::consistent() const { return margin == bound - measured && pass == (margin >= -tolerance); }

DiceInstance random_instance(std::uint64_t seed, int n_states, int n_actions, double gamma, double alpha) {
  if (n_states < 1 || n_actions < 1) throw InvalidArgument("random_instance: sizes must be positive");
  Rng rng(derive_seed(seed, "instance"));
  Eigen::MatrixXd P(n_states * n_actions, n_states);
  for (Eigen::Index i = 0; i < P.rows(); ++i) P.row(i) = rng.simplex(n_states).transpose();
  Eigen::VectorXd mu = rng.simplex(n_states);
  const OccupancyMeasure dU = rng.simplex(n_states * n_actions);
  const OccupancyMeasure dE = rng.simplex(n_states * n_actions);
  TabularMdp mdp(n_states, n_actions, std::move(P), mu, gamma, std::nullopt, "random-instance");
  DiceConfig cfg;
  cfg.alpha = alpha;
  cfg.gamma = gamma;
  return DiceInstance{std::move(mdp), pseudo_reward_exact(dE, dU), std::move(mu), dU, cfg,
                      InstanceDescriptor{seed, n_states, n_actions, gamma, alpha}};
}

std::vector<CheckReport> check_lemma1(std::uint64_t seed, int n_states, int n_actions, double gamma, double alpha,
                                      int n_samples) {
  const DiceInstance inst = random_instance(seed, n_states, n_actions, gamma, alpha);
  const DiceObjective objective = inst.objective();
  Rng rng(derive_seed(seed, "lemma1-samples"));
  auto sample = [&] {
    PseudoValue nu(n_states);
    for (Eigen::Index i = 0; i < nu.size(); ++i) nu(i) = rng.uniform(-5.0, 5.0);
    return nu;
  };

  double chord_violation = -std::numeric_limits<double>::infinity();
  double lipschitz = 0.0;
  double orthogonality = 0.0;
  for (int k = 0; k < n_samples; ++k) {
    const PseudoValue a = sample();
    const PseudoValue b = sample();
    const double la = objective.loss(a);
    const double lb = objective.loss(b);
    for (double lambda : {0.25, 0.5, 0.75}) {
      const PseudoValue mid = lambda * a + (1.0 - lambda) * b;
      chord_violation = std::max(chord_violation, objective.loss(mid) - (lambda * la + (1.0 - lambda) * lb));
    }
    const Eigen::VectorXd ga = objective.gradient(a);
    const Eigen::VectorXd gb = objective.gradient(b);
    const double dist = (a - b).norm();
    if (dist > 0.0) lipschitz = std::max(lipschitz, (ga - gb).norm() / dist);
    orthogonality = std::max({orthogonality, std::abs(ga.sum()), std::abs(gb.sum())});
  }
  const double lf = smoothness_constant(inst.cfg);
  return {
      CheckReport::make("lemma1_convexity_chord", inst.descriptor, chord_violation, 0.0, 1e-10,
                        "max of L(mix) - chord over lambda in {0.25, 0.5, 0.75}"),
      CheckReport::make("lemma1_gradient_lipschitz", inst.descriptor, lipschitz, lf * (1.0 + 1e-8), 0.0,
                        "max ||grad(a) - grad(b)|| / ||a - b|| against L_f"),
      CheckReport::make("lemma1_orthogonal_to_ones", inst.descriptor, orthogonality, 1e-8, 0.0,
                        "max |<grad L, 1>|"),
  };
}

namespace {

double support_max_abs_diff(const DensityRatio& a, const DensityRatio& b, const std::vector<int>& support) {
  double m = 0.0;
  for (int i : support) m = std::max(m, std::abs(a(i) - b(i)));
  return m;
}

}  // namespace

namespace {

// Largest subset of supp(dU) whose successors all keep at least one pair.
std::vector<bool> closed_support(const DiceObjective& objective) {
  const TabularMdp& mdp = objective.mdp();
  const int n_actions = mdp.n_actions();
  std::vector<bool> keep(static_cast<std::size_t>(mdp.n_pairs()), false);
  for (int sa : objective.support()) keep[static_cast<std::size_t>(sa)] = true;
  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<bool> live(static_cast<std::size_t>(mdp.n_states()), false);
    for (int sa = 0; sa < mdp.n_pairs(); ++sa) {
      if (keep[static_cast<std::size_t>(sa)]) live[static_cast<std::size_t>(sa / n_actions)] = true;
    }
    for (int sa = 0; sa < mdp.n_pairs(); ++sa) {
      if (!keep[static_cast<std::size_t>(sa)]) continue;
      for (int s2 = 0; s2 < mdp.n_states(); ++s2) {
        if (mdp.transitions()(sa, s2) > 0.0 && !live[static_cast<std::size_t>(s2)]) {
          keep[static_cast<std::size_t>(sa)] = false;
          changed = true;
          break;
        }
      }
    }
  }
  return keep;
}

// Damped Newton on L. The Hessian (1 + alpha) J^T (diag p - p p^T) J is
// singular along 1; adding 1 1^T / n fixes that direction without moving
// the step off the mean-zero plane, since the gradient is orthogonal to 1.
PseudoValue newton_polish(const DiceObjective& objective, PseudoValue nu, double tolerance, int max_steps) {
  const TabularMdp& mdp = objective.mdp();
  const int n = mdp.n_states();
  const int n_actions = mdp.n_actions();
  const double scale = 1.0 + objective.config().alpha;
  const double gamma = objective.config().gamma;
  const std::vector<int>& support = objective.support();
  Eigen::MatrixXd J(static_cast<Eigen::Index>(support.size()), n);
  for (std::size_t k = 0; k < support.size(); ++k) {
    const int sa = support[k];
    J.row(static_cast<Eigen::Index>(k)) = gamma * mdp.transitions().row(sa) / scale;
    J(static_cast<Eigen::Index>(k), sa / n_actions) -= 1.0 / scale;
  }
  for (int step = 0; step < max_steps; ++step) {
    const Eigen::VectorXd g = objective.gradient(nu);
    if (g.norm() < tolerance) break;
    const Eigen::VectorXd full = objective.softmax_weights(nu);
    Eigen::VectorXd p(static_cast<Eigen::Index>(support.size()));
    for (std::size_t k = 0; k < support.size(); ++k) p(static_cast<Eigen::Index>(k)) = full(support[k]);
    const Eigen::MatrixXd cov = Eigen::MatrixXd(p.asDiagonal()) - p * p.transpose();
    Eigen::MatrixXd H = scale * J.transpose() * cov * J;
    H.array() += 1.0 / n;
    const Eigen::VectorXd d = H.ldlt().solve(-g);
    if (!d.allFinite()) break;
    const double l0 = objective.loss(nu);
    const double slope = g.dot(d);
    double t = 1.0;
    bool accepted = false;
    for (int k = 0; k < 60 && !accepted; ++k, t *= 0.5) {
      const PseudoValue trial = nu + t * d;
      const double l1 = objective.loss(trial);
      // Near the optimum the loss stops resolving progress; fall back to the gradient norm.
      accepted = l1 <= l0 + 1e-4 * t * slope || (l1 <= l0 + 1e-14 * (1.0 + std::abs(l0)) &&
                                                 objective.gradient(trial).norm() < g.norm());
      if (accepted) nu = trial;
    }
    if (!accepted) break;
  }
  return nu;
}

}  // namespace

OracleResult oracle_optimum(const DiceObjective& objective, const OracleOptions& opts) {
  if (objective.mdp().n_states() > 50) throw InvalidArgument("oracle_optimum: instance larger than 50 states");
  if (opts.n_starts < 1) throw InvalidArgument("oracle_optimum: need at least one start");
  const TabularMdp& mdp = objective.mdp();
  const int n = mdp.n_states();
  Rng rng(derive_seed(opts.seed, "oracle-starts"));

  OracleResult out;
  const std::vector<bool> keep = closed_support(objective);
  OccupancyMeasure dU = objective.dU();
  for (int sa : objective.support()) {
    if (!keep[static_cast<std::size_t>(sa)]) {
      dU(sa) = 0.0;
      ++out.excluded_pairs;
    }
  }
  for (int s = 0; s < n; ++s) {
    if (!(objective.mu()(s) > 0.0)) continue;
    bool usable = false;
    for (int a = 0; a < mdp.n_actions(); ++a) usable = usable || keep[static_cast<std::size_t>(s * mdp.n_actions() + a)];
    if (!usable) throw OracleError("oracle_optimum: initial state " + std::to_string(s) + " has no usable pair");
  }
  const DiceObjective reduced(mdp, objective.reward(), objective.mu(), dU / dU.sum(), objective.config());
  const double eta = reduced.config().eta();

  // States that enter the loss through neither mu, a supported pair, nor a
  // supported successor have an identically zero gradient coordinate.
  std::vector<bool> ignored(static_cast<std::size_t>(n), true);
  for (int s = 0; s < n; ++s) {
    if (objective.mu()(s) > 0.0) ignored[static_cast<std::size_t>(s)] = false;
  }
  for (int sa : reduced.support()) {
    ignored[static_cast<std::size_t>(sa / mdp.n_actions())] = false;
    for (int s2 = 0; s2 < n; ++s2) {
      if (mdp.transitions()(sa, s2) > 0.0) ignored[static_cast<std::size_t>(s2)] = false;
    }
  }
  const double n_used = static_cast<double>(std::count(ignored.begin(), ignored.end(), false));

  std::vector<DensityRatio> ratios;
  for (int k = 0; k < opts.n_starts; ++k) {
    PseudoValue nu = PseudoValue::Zero(n);
    if (k > 0) {
      for (Eigen::Index i = 0; i < n; ++i) nu(i) = rng.uniform(-1.0, 1.0);
    }
    int it = 0;
    for (; it < opts.max_iterations; ++it) {
      const Eigen::VectorXd g = reduced.gradient(nu);
      if (!g.allFinite()) throw NumericalError("oracle_optimum: non-finite gradient at iteration " + std::to_string(it));
      if (g.norm() < opts.grad_tolerance) break;
      nu -= eta * g;
    }
    out.iterations = std::max(out.iterations, it);
    if (it == opts.max_iterations) nu = newton_polish(reduced, nu, opts.grad_tolerance, opts.newton_steps);
    // Descent from 0 never moves an ignored coordinate and keeps the total
    // mean at zero; map every start to that representative.
    double sum = 0.0;
    for (int s = 0; s < n; ++s) {
      if (ignored[static_cast<std::size_t>(s)]) nu(s) = 0.0;
      sum += nu(s);
    }
    for (int s = 0; s < n; ++s) {
      if (!ignored[static_cast<std::size_t>(s)]) nu(s) -= sum / n_used;
    }
    DensityRatio w = density_ratio(nu, objective.reward(), objective.config(), mdp);
    for (int sa : objective.support()) {
      if (!keep[static_cast<std::size_t>(sa)]) w(sa) = 0.0;
    }
    ratios.push_back(std::move(w));
    if (k == 0) out.nu_star = nu;
  }
  out.w_star = ratios.front();
  for (const DensityRatio& w : ratios) {
    out.spread = std::max(out.spread, support_max_abs_diff(w, out.w_star, reduced.support()));
  }
  if (!(out.spread <= opts.agreement)) {
    char msg[96];
    std::snprintf(msg, sizeof msg, "oracle_optimum: starts disagree on w* (spread %.3g)", out.spread);
    throw OracleError(msg);
  }
  return out;
}

PseudoValue project_to_optimal_set(const Eigen::Ref<const PseudoValue>& nu,
                                   const Eigen::Ref<const PseudoValue>& nu_star) {
  if (nu.size() != nu_star.size()) throw InvalidArgument("project_to_optimal_set: dimension mismatch");
  return nu_star.array() + (nu - nu_star).mean();
}

GrowthEstimate estimate_growth(const DiceObjective& objective, const Eigen::Ref<const PseudoValue>& nu_star,
                               int n_probes, std::uint64_t seed) {
  return estimate_growth([&](const PseudoValue& nu) { return objective.loss(nu); }, nu_star, n_probes, seed);
}

Lemma2Result check_lemma2(const DiceInstance& instance, int T, const OracleOptions& oracle_opts) {
  if (T < 100) throw InvalidArgument("check_lemma2: T must be at least 100");
  DiceInstance inst = instance;
  inst.cfg.step_size.reset();
  const DiceObjective objective = inst.objective();
  const OracleResult oracle = oracle_optimum(objective, oracle_opts);
  const DensityRatio& w_star = oracle.w_star;
  const std::vector<int>& support = objective.support();
  const double eta = inst.cfg.eta();
  const double lf = smoothness_constant(inst.cfg);
  const double alpha = inst.cfg.alpha;
  const double gamma = inst.cfg.gamma;

  Lemma2Result out;
  out.growth = estimate_growth(objective, oracle.nu_star, 20, instance.descriptor.seed);
  const double c_hat = out.growth.c_hat;
  const double c_w = 2.0 * (1.0 + gamma) * std::sqrt(lf) / (std::sqrt(c_hat) * (1.0 + alpha));

  PseudoValue nu = PseudoValue::Zero(objective.mdp().n_states());
  const double d0 = (nu - project_to_optimal_set(nu, oracle.nu_star)).norm();
  const double l_star = objective.loss(oracle.nu_star);

  // worst[t] = max over support of |w - w*| - rhs(t), the full-bound violation.
  std::vector<double> worst(static_cast<std::size_t>(T) + 1, 0.0);
  double loss_ratio = 0.0;
  out.errors.assign(static_cast<std::size_t>(T) + 1, 0.0);
  DensityRatio w = density_ratio(nu, objective.reward(), inst.cfg, objective.mdp());
  out.errors[0] = support_max_abs_diff(w, w_star, support);
  for (int t = 1; t <= T; ++t) {
    nu = gradient_step(objective, nu, eta);
    w = density_ratio(nu, objective.reward(), inst.cfg, objective.mdp());
    out.errors[static_cast<std::size_t>(t)] = support_max_abs_diff(w, w_star, support);
    const double scale = d0 / std::sqrt(static_cast<double>(t));
    const double growth = std::exp(c_w * scale);
    double v = -std::numeric_limits<double>::infinity();
    for (int i : support) v = std::max(v, std::abs(w(i) - w_star(i)) - c_w * w_star(i) * growth * scale);
    worst[static_cast<std::size_t>(t)] = v;
    if (d0 > 0.0) loss_ratio = std::max(loss_ratio, (objective.loss(nu) - l_star) * t / (2.0 * lf * d0 * d0));
  }

  for (int t = 10; t <= 100; ++t) out.K = std::max(out.K, out.errors[static_cast<std::size_t>(t)] * std::sqrt(t));
  double envelope = 0.0;
  for (int t = 10; t <= T; ++t) envelope = std::max(envelope, out.errors[static_cast<std::size_t>(t)] * std::sqrt(t));
  double monotone = 0.0;
  double tail_max = 0.0;
  for (int t = T; t >= 0; --t) {
    monotone = std::max(monotone, tail_max - out.errors[static_cast<std::size_t>(t)]);
    tail_max = std::max(tail_max, out.errors[static_cast<std::size_t>(t)]);
  }
  out.t0 = -1;
  for (int t = T; t >= 1 && worst[static_cast<std::size_t>(t)] <= 0.0; --t) out.t0 = t;
  double full_violation = 0.0;
  if (out.t0 > 0) {
    full_violation = -std::numeric_limits<double>::infinity();
    for (int t = out.t0; t <= T; ++t) full_violation = std::max(full_violation, worst[static_cast<std::size_t>(t)]);
  } else {
    full_violation = worst[static_cast<std::size_t>(T)];
  }

  const InstanceDescriptor& desc = instance.descriptor;
  const double e100 = out.errors[100];
  const double final_bound = 1.2 * e100 * std::sqrt(100.0 / T);
  char note[160];
  std::snprintf(note, sizeof note, "certified with estimated constant c_hat=%.6g, C_w=%.6g, t0=%d", c_hat, c_w, out.t0);
  out.reports = {
      CheckReport::make("lemma2_sqrt_envelope", desc, envelope, out.K, 1e-12,
                        "max over 10<=t<=T of e(t) sqrt(t) against K fitted on [10, 100]"),
      CheckReport::make("lemma2_final_decay", desc, out.errors[static_cast<std::size_t>(T)], final_bound, 0.0,
                        "e(T) against 1.2 e(100) sqrt(100/T)"),
      CheckReport::make("lemma2_full_bound", desc, full_violation, 0.0, 0.0, note),
      CheckReport::make("lemma2_monotone_envelope", desc, monotone, 0.0, 1e-10,
                        "max over t of max_{t'>=t} e(t') - e(t)"),
      CheckReport::make("lemma2_loss_gap", desc, loss_ratio, 1.0, 0.0,
                        "recorded only: (L_t - L*) t / (2 L_f d0^2)"),
  };
  return out;
}

Lemma2Result check_lemma2(std::uint64_t seed, int n_states, int n_actions, double gamma, double alpha, int T) {
  OracleOptions opts;
  opts.seed = seed;
  // e(t) reaches ~1e-10 by T = 1e4; the oracle has to be tighter than that.
  opts.grad_tolerance = 1e-14;
  return check_lemma2(random_instance(seed, n_states, n_actions, gamma, alpha), T, opts);
}

std::vector<CheckReport> theorem1_reports(const AdaptDiceResult& run, const InstanceDescriptor& instance,
                                          bool min_property) {
  if (run.trace.empty()) throw InvalidArgument("theorem1_reports: empty trace");
  double pointwise = -std::numeric_limits<double>::infinity();
  double min_gap = 0.0;
  for (const AdaptDiceIterate& it : run.trace) {
    if (!it.bound_margin || !it.oracle_cross_error) {
      throw InvalidArgument("theorem1_reports: run was recorded without oracle checks");
    }
    pointwise = std::max(pointwise, -*it.bound_margin);
    min_gap = std::max(min_gap, std::abs(*it.oracle_cross_error - std::min(*it.oracle_delta_src, *it.oracle_delta_tar)));
  }
  std::vector<CheckReport> out{CheckReport::make(
      "theorem1_pointwise_bound", instance, pointwise, 0.0, 1e-12,
      "max over iterations and records of |w_cross - w*| - (beta dw_src + (1 - beta) dw_tar)")};
  if (min_property) {
    out.push_back(CheckReport::make("theorem1_min_property", instance, min_gap, 0.0, 1e-12,
                                    "max over iterations of |E|w_cross - w*| - min(dw_src, dw_tar)|"));
  }
  return out;
}

std::vector<CheckReport> check_theorem1(std::uint64_t seed, int n_states, int n_actions, double gamma, double alpha,
                                        int T) {
  PairSpec spec;
  spec.family = Family::Random;
  spec.n_states = n_states;
  spec.n_actions = n_actions;
  spec.gamma = gamma;
  spec.discrepancy = Discrepancy::Permutation;
  spec.branching = std::min(2, n_states);
  spec.seed = derive_seed(seed, "theorem1-pair");
  const MdpPair pair = make_pair(spec);
  const DataSpec src_spec{20, 0, 40, 30, derive_seed(seed, "theorem1-source")};
  const DataSpec tar_spec{1, 1, 10, 30, derive_seed(seed, "theorem1-target")};
  const ScenarioDatasets data = build_datasets(pair, src_spec, tar_spec);

  DiceConfig cfg;
  cfg.alpha = alpha;
  cfg.gamma = gamma;
  cfg.iterations = 2000;
  const SourceArtifacts src = pretrain_source(filter_expert(data.src), data.src, pair.src, cfg);
  const DiceInputs inputs = prepare_dice_inputs(data.expert_tar, data.union_tar, pair.tar, cfg);
  OracleOptions oracle_opts;
  oracle_opts.seed = seed;
  const OracleResult oracle =
      oracle_optimum(DiceObjective(pair.tar, inputs.r, inputs.mu, inputs.dU, cfg), oracle_opts);

  AdaptDiceOptions opts;
  opts.cfg = cfg;
  opts.cfg.iterations = T;
  opts.seed = seed;
  opts.oracle_w_star = oracle.w_star;
  const InstanceDescriptor desc{seed, n_states, n_actions, gamma, alpha};

  opts.mode = BetaMode::adaptive();
  std::vector<CheckReport> out = theorem1_reports(adaptdice_run(src, data.expert_tar, data.union_tar, pair.tar, opts),
                                                  desc, false);
  out.front().name += "_harmonic";
  opts.mode = BetaMode::theoretical();
  std::vector<CheckReport> theo =
      theorem1_reports(adaptdice_run(src, data.expert_tar, data.union_tar, pair.tar, opts), desc, true);
  theo.front().name += "_theoretical";
  out.insert(out.end(), theo.begin(), theo.end());
  return out;
}

std::string certificates_json(const std::vector<CheckReport>& reports) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const CheckReport& r : reports) {
    nlohmann::ordered_json j;
    j["name"] = r.name;
    j["instance"] = {{"seed", r.instance.seed},
                     {"n_states", r.instance.n_states},
                     {"n_actions", r.instance.n_actions},
                     {"gamma", r.instance.gamma},
                     {"alpha", r.instance.alpha}};
    j["pass"] = r.pass;
    j["measured"] = r.measured;
    j["bound"] = r.bound;
    j["margin"] = r.margin;
    j["tolerance"] = r.tolerance;
    j["note"] = r.note;
    arr.push_back(std::move(j));
  }
  return arr.dump(2) + "\n";
}

void print_summary(std::ostream& os, const std::vector<CheckReport>& reports) {
  const auto flags = os.flags();
  os << std::left << std::setw(40) << "check" << std::setw(40) << "instance (seed S A gamma alpha)" << std::right
     << std::setw(14) << "measured" << std::setw(14) << "bound" << std::setw(14) << "margin"
     << "  result\n";
  int passed = 0;
  for (const CheckReport& r : reports) {
    char inst[64];
    std::snprintf(inst, sizeof inst, "%llu %d %d %g %g", static_cast<unsigned long long>(r.instance.seed),
                  r.instance.n_states, r.instance.n_actions, r.instance.gamma, r.instance.alpha);
    os << std::left << std::setw(40) << r.name << std::setw(40) << inst << std::right << std::scientific
       << std::setprecision(4) << std::setw(14) << r.measured << std::setw(14) << r.bound << std::setw(14)
       << r.margin << "  " << (r.pass ? "PASS" : "FAIL") << '\n';
    passed += r.pass ? 1 : 0;
  }
  os << passed << "/" << reports.size() << " checks passed\n";
  os.flags(flags);
}

std::vector<CheckReport> lemma1_suite(std::uint64_t seed, int n_instances) {
  static constexpr double kGammas[] = {0.5, 0.9, 0.99};
  static constexpr double kAlphas[] = {0.01, 0.05, 0.5};
  Rng rng(derive_seed(seed, "lemma1-suite"));
  std::vector<CheckReport> out;
  for (int i = 0; i < n_instances; ++i) {
    const int n_states = 3 + static_cast<int>(rng.below(18));
    const int n_actions = 2 + static_cast<int>(rng.below(4));
    const auto reports = check_lemma1(derive_seed(seed, "lemma1-instance", static_cast<std::uint64_t>(i)), n_states,
                                      n_actions, kGammas[i % 3], kAlphas[(i / 3) % 3]);
    out.insert(out.end(), reports.begin(), reports.end());
  }
  return out;
}

std::vector<CheckReport> lemma2_suite(int n_instances, int T) {
  std::vector<CheckReport> out;
  for (int k = 0; k < n_instances; ++k) {
    const Lemma2Result r = check_lemma2(1000 + static_cast<std::uint64_t>(k), 10, 3, 0.9, 0.05, T);
    out.insert(out.end(), r.reports.begin(), r.reports.end());
  }
  return out;
}

std::vector<CheckReport> theorem1_suite(std::uint64_t seed, int n_instances) {
  Rng rng(derive_seed(seed, "theorem1-suite"));
  std::vector<CheckReport> out;
  for (int i = 0; i < n_instances; ++i) {
    const int n_states = 4 + static_cast<int>(rng.below(5));
    const int n_actions = 2 + static_cast<int>(rng.below(2));
    const auto reports =
        check_theorem1(derive_seed(seed, "theorem1-instance", static_cast<std::uint64_t>(i)), n_states, n_actions, 0.9, 0.05);
    out.insert(out.end(), reports.begin(), reports.end());
  }
  return out;
}

std::vector<CheckReport> run_suite(const std::string& name, std::uint64_t seed) {
  if (name == "lemma1") return lemma1_suite(seed);
  if (name == "lemma2") return lemma2_suite();
  if (name == "theorem1") return theorem1_suite(seed);
  if (name == "all") {
    std::vector<CheckReport> out = lemma1_suite(seed);
    for (auto part : {lemma2_suite(), theorem1_suite(seed)}) out.insert(out.end(), part.begin(), part.end());
    return out;
  }
  throw InvalidArgument("unknown suite '" + name + "' (expected lemma1, lemma2, theorem1 or all)");
}

}  // namespace adaptdice
