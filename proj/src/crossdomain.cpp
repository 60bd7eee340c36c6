#include "adaptdice/crossdomain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>

#include "adaptdice/rng.hpp"

namespace adaptdice {

MappingPair MappingPair::identity(int n_states, int n_actions) {
  MappingPair m;
  m.n_src_states = n_states;
  m.n_src_actions = n_actions;
  m.n_tar_actions = n_actions;
  m.state_map.resize(static_cast<std::size_t>(n_states));
  m.action_map.resize(static_cast<std::size_t>(n_states * n_actions));
  for (int s = 0; s < n_states; ++s) {
    m.state_map[static_cast<std::size_t>(s)] = s;
    for (int a = 0; a < n_actions; ++a) m.action_map[static_cast<std::size_t>(s * n_actions + a)] = a;
  }
  return m;
}

MappingPair MappingPair::random(int n_tar_states, int n_tar_actions, int n_src_states, int n_src_actions,
                                std::uint64_t seed) {
  Rng rng(seed);
  MappingPair m;
  m.n_src_states = n_src_states;
  m.n_src_actions = n_src_actions;
  m.n_tar_actions = n_tar_actions;
  m.state_map.resize(static_cast<std::size_t>(n_tar_states));
  m.action_map.resize(static_cast<std::size_t>(n_tar_states * n_tar_actions));
  for (auto& g : m.state_map) g = static_cast<int>(rng.below(static_cast<std::uint64_t>(n_src_states)));
  for (auto& h : m.action_map) h = static_cast<int>(rng.below(static_cast<std::uint64_t>(n_src_actions)));
  return m;
}

void MappingPair::validate() const {
  if (n_src_states <= 0 || n_src_actions <= 0 || n_tar_actions <= 0) {
    throw InvalidArgument("MappingPair: sizes must be positive");
  }
  if (action_map.size() != state_map.size() * static_cast<std::size_t>(n_tar_actions)) {
    throw InvalidArgument("MappingPair: H has the wrong size");
  }
  for (int g : state_map) {
    if (g < 0 || g >= n_src_states) throw InvalidArgument("MappingPair: G image out of source bounds");
  }
  for (int h : action_map) {
    if (h < 0 || h >= n_src_actions) throw InvalidArgument("MappingPair: H image out of source bounds");
  }
}

Eigen::VectorXd q_from_nu(const Eigen::Ref<const PseudoValue>& nu_src, const PseudoReward& r_src,
                          const TabularMdp& src_mdp) {
  if (nu_src.size() != src_mdp.n_states() || r_src.values.size() != src_mdp.n_pairs()) {
    throw InvalidArgument("q_from_nu: dimension mismatch");
  }
  return r_src.values + src_mdp.discount() * (src_mdp.transitions() * nu_src);
}

SourceArtifacts make_source_artifacts(const TabularMdp& src_mdp, PseudoValue nu, PseudoReward r, OccupancyMeasure d,
                                      const DiceConfig& cfg) {
  Eigen::VectorXd q = q_from_nu(nu, r, src_mdp);
  DensityRatio w = density_ratio(nu, r, cfg, src_mdp);
  return SourceArtifacts{src_mdp, std::move(nu), std::move(r), std::move(w), std::move(q), std::move(d)};
}

SourceArtifacts pretrain_source(const Dataset& src_expert, const Dataset& src_union, const TabularMdp& src_mdp,
                                const DiceConfig& cfg) {
  DemoDiceResult res = demodice_train(src_expert, src_union, src_mdp, cfg, cfg.iterations);
  return make_source_artifacts(src_mdp, res.nu, res.inputs.r, res.inputs.dU, cfg);
}

MappingObjective::MappingObjective(const PseudoReward& r_tar, Eigen::VectorXd q_src, int n_src_states,
                                   int n_src_actions, const Policy& policy, const Dataset& data, double gamma)
    : r_tar_(r_tar.values),
      q_src_(std::move(q_src)),
      policy_(policy.probs),
      gamma_(gamma),
      n_tar_states_(policy.n_states()),
      n_tar_actions_(policy.n_actions()),
      n_src_states_(n_src_states),
      n_src_actions_(n_src_actions) {
  if (data.empty()) throw EmptyDatasetError("map_loss: empty dataset");
  if (q_src_.size() != n_src_states_ * n_src_actions_) throw InvalidArgument("map_loss: Q_src size mismatch");
  if (r_tar_.size() != n_tar_states_ * n_tar_actions_) throw InvalidArgument("map_loss: r_tar size mismatch");

  state_seen_.assign(static_cast<std::size_t>(n_tar_states_), false);
  next_seen_.assign(static_cast<std::size_t>(n_tar_states_), false);
  pair_seen_.assign(static_cast<std::size_t>(n_tar_states_ * n_tar_actions_), false);
  std::map<std::tuple<int, int, int>, double> counts;
  for (const Transition& rec : data.records) {
    if (rec.state < 0 || rec.state >= n_tar_states_ || rec.next_state < 0 || rec.next_state >= n_tar_states_ ||
        rec.action < 0 || rec.action >= n_tar_actions_) {
      throw InvalidArgument("map_loss: record out of target bounds");
    }
    const int sa = rec.state * n_tar_actions_ + rec.action;
    if (!r_tar.support(sa)) throw InvalidArgument("map_loss: dataset pair outside the pseudo-reward support");
    counts[{rec.state, rec.action, rec.next_state}] += 1.0;
    state_seen_[static_cast<std::size_t>(rec.state)] = true;
    state_seen_[static_cast<std::size_t>(rec.next_state)] = true;
    next_seen_[static_cast<std::size_t>(rec.next_state)] = true;
    pair_seen_[static_cast<std::size_t>(sa)] = true;
  }
  transitions_.reserve(counts.size());
  for (const auto& [key, count] : counts) {
    transitions_.push_back(Aggregate{std::get<0>(key), std::get<1>(key), std::get<2>(key), count});
    total_ += count;
  }
}

bool MappingObjective::pair_constrained(int s, int a) const {
  return pair_seen_[static_cast<std::size_t>(s * n_tar_actions_ + a)] || next_seen_[static_cast<std::size_t>(s)];
}

double MappingObjective::loss(const MappingPair& map) const {
  // Expected mapped Q under pi at every target state that is a next state.
  Eigen::VectorXd next_value = Eigen::VectorXd::Zero(n_tar_states_);
  for (int s = 0; s < n_tar_states_; ++s) {
    if (!next_seen_[static_cast<std::size_t>(s)]) continue;
    double v = 0.0;
    for (int a = 0; a < n_tar_actions_; ++a) v += policy_(s, a) * q_src_(map.source_pair(s, a));
    next_value(s) = v;
  }
  double sum = 0.0;
  for (const Aggregate& tr : transitions_) {
    const double residual = r_tar_(tr.s * n_tar_actions_ + tr.a) + gamma_ * next_value(tr.s_next) -
                            q_src_(map.source_pair(tr.s, tr.a));
    sum += tr.count * std::abs(residual);
  }
  return sum / total_;
}

double map_loss(const MappingPair& map, const PseudoReward& r_tar, const Eigen::Ref<const Eigen::VectorXd>& q_src,
                const Policy& policy, const Dataset& data, double gamma) {
  map.validate();
  const MappingObjective objective(r_tar, q_src, map.n_src_states, map.n_src_actions, policy, data, gamma);
  return objective.loss(map);
}

namespace {

void check_compatible(const MappingPair& map, const MappingObjective& objective) {
  map.validate();
  if (map.n_tar_states() != objective.n_tar_states() || map.n_tar_actions != objective.n_tar_actions() ||
      map.n_src_states != objective.n_src_states() || map.n_src_actions != objective.n_src_actions()) {
    throw InvalidArgument("optimize_mappings: mapping and objective sizes differ");
  }
}

struct FillCounts {
  int states = 0;
  int pairs = 0;
};

FillCounts fill_unconstrained(MappingPair& map, const MappingObjective& objective,
                              const std::optional<OccupancyMeasure>& d_src) {
  FillCounts counts;
  const int ns = objective.n_src_states();
  const int na = objective.n_src_actions();
  int default_state = -1;
  if (d_src) {
    if (d_src->size() != ns * na) throw InvalidArgument("optimize_mappings: source occupancy size mismatch");
    state_marginal(*d_src, ns, na).maxCoeff(&default_state);
  }
  for (int s = 0; s < objective.n_tar_states(); ++s) {
    if (!objective.state_constrained(s)) {
      ++counts.states;
      if (default_state >= 0) map.state_map[static_cast<std::size_t>(s)] = default_state;
    }
    for (int a = 0; a < objective.n_tar_actions(); ++a) {
      if (objective.pair_constrained(s, a)) continue;
      ++counts.pairs;
      if (d_src) {
        int best = 0;
        d_src->segment(map.G(s) * na, na).maxCoeff(&best);
        map.action_map[static_cast<std::size_t>(s * map.n_tar_actions + a)] = best;
      }
    }
  }
  return counts;
}

// One coordinate: try every value, keep the strict minimizer (ties to lowest index).
bool improve_coordinate(int& slot, int n_values, MappingPair& map, double& current, const MappingObjective& objective) {
  const int original = slot;
  int best = original;
  double best_loss = current;
  for (int v = 0; v < n_values; ++v) {
    if (v == original) continue;
    slot = v;
    const double l = objective.loss(map);
    if (l < best_loss || (l == best_loss && v < best)) {
      best = v;
      best_loss = l;
    }
  }
  slot = best;
  current = best_loss;
  return best != original;
}

MappingSearchResult coordinate_descent(MappingPair map, const MappingObjective& objective, int budget) {
  MappingSearchResult result;
  double current = objective.loss(map);
  for (int sweep = 0; sweep < budget; ++sweep) {
    bool changed = false;
    for (int s = 0; s < objective.n_tar_states(); ++s) {
      if (!objective.state_constrained(s)) continue;
      changed |= improve_coordinate(map.state_map[static_cast<std::size_t>(s)], objective.n_src_states(), map, current,
                                    objective);
    }
    for (int s = 0; s < objective.n_tar_states(); ++s) {
      for (int a = 0; a < objective.n_tar_actions(); ++a) {
        if (!objective.pair_constrained(s, a)) continue;
        changed |= improve_coordinate(map.action_map[static_cast<std::size_t>(s * map.n_tar_actions + a)],
                                      objective.n_src_actions(), map, current, objective);
      }
    }
    result.sweeps = sweep + 1;
    if (!changed) break;
  }
  result.mapping = std::move(map);
  result.loss = current;
  return result;
}

}  // namespace

MappingSearchResult optimize_mappings(const MappingPair& init, const MappingObjective& objective,
                                      const MappingSearchOptions& opts) {
  check_compatible(init, objective);
  MappingPair start = init;
  const FillCounts fill = fill_unconstrained(start, objective, opts.source_occupancy);

  MappingSearchResult best = coordinate_descent(start, objective, std::max(opts.budget, 0));
  for (int k = 1; k <= opts.restarts; ++k) {
    MappingPair candidate = MappingPair::random(init.n_tar_states(), init.n_tar_actions, init.n_src_states,
                                                init.n_src_actions, derive_seed(opts.seed, "mapping-restart", k));
    fill_unconstrained(candidate, objective, opts.source_occupancy);
    MappingSearchResult res = coordinate_descent(std::move(candidate), objective, std::max(opts.budget, 0));
    if (res.loss < best.loss) best = std::move(res);
  }
  best.unconstrained_states = fill.states;
  best.unconstrained_pairs = fill.pairs;
  return best;
}

double mapping_space_size(int n_tar_states, int n_tar_actions, int n_src_states, int n_src_actions) {
  const double log_size = n_tar_states * std::log(static_cast<double>(n_src_states)) +
                          n_tar_states * n_tar_actions * std::log(static_cast<double>(n_src_actions));
  return log_size > 700.0 ? std::numeric_limits<double>::infinity() : std::round(std::exp(log_size));
}

MappingSearchResult exhaustive_mappings(const MappingObjective& objective, double max_space) {
  const double space = mapping_space_size(objective.n_tar_states(), objective.n_tar_actions(),
                                          objective.n_src_states(), objective.n_src_actions());
  if (space > max_space) {
    throw InvalidArgument("exhaustive_mappings: search space of " + std::to_string(space) + " exceeds the limit");
  }
  MappingPair map;
  map.n_src_states = objective.n_src_states();
  map.n_src_actions = objective.n_src_actions();
  map.n_tar_actions = objective.n_tar_actions();
  map.state_map.assign(static_cast<std::size_t>(objective.n_tar_states()), 0);
  map.action_map.assign(static_cast<std::size_t>(objective.n_tar_states() * objective.n_tar_actions()), 0);

  // Odometer over the constrained coordinates only; the rest cannot change the loss.
  std::vector<std::pair<int*, int>> digits;
  for (int s = 0; s < objective.n_tar_states(); ++s) {
    if (objective.state_constrained(s)) digits.emplace_back(&map.state_map[static_cast<std::size_t>(s)], map.n_src_states);
  }
  for (int s = 0; s < objective.n_tar_states(); ++s) {
    for (int a = 0; a < objective.n_tar_actions(); ++a) {
      if (objective.pair_constrained(s, a)) {
        digits.emplace_back(&map.action_map[static_cast<std::size_t>(s * map.n_tar_actions + a)], map.n_src_actions);
      }
    }
  }

  MappingSearchResult best;
  best.mapping = map;
  best.loss = objective.loss(map);
  while (true) {
    std::size_t k = 0;
    while (k < digits.size()) {
      int& d = *digits[k].first;
      if (++d < digits[k].second) break;
      d = 0;
      ++k;
    }
    if (k == digits.size()) break;
    const double l = objective.loss(map);
    if (l < best.loss) {
      best.loss = l;
      best.mapping = map;
    }
  }
  return best;
}

DensityRatio pullback(const MappingPair& map, const Eigen::Ref<const DensityRatio>& w_src) {
  if (w_src.size() != map.n_src_states * map.n_src_actions) throw InvalidArgument("pullback: w_src size mismatch");
  DensityRatio out(map.n_tar_states() * map.n_tar_actions);
  for (int s = 0; s < map.n_tar_states(); ++s) {
    for (int a = 0; a < map.n_tar_actions; ++a) out(s * map.n_tar_actions + a) = w_src(map.source_pair(s, a));
  }
  return out;
}

DensityRatio w_cross(double beta, const MappingPair& map, const Eigen::Ref<const DensityRatio>& w_src,
                     const Eigen::Ref<const DensityRatio>& w_tar) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw InvalidArgument("w_cross: beta must lie in [0, 1]");
  const DensityRatio pulled = pullback(map, w_src);
  if (w_tar.size() != pulled.size()) throw InvalidArgument("w_cross: w_tar size mismatch");
  return beta * pulled + (1.0 - beta) * w_tar;
}

RatioErrors ratio_errors(const MappingPair& map, const Eigen::Ref<const DensityRatio>& w_src,
                         const Eigen::Ref<const DensityRatio>& w_tar_prev,
                         const Eigen::Ref<const DensityRatio>& w_ref, const Dataset& data) {
  if (data.empty()) throw EmptyDatasetError("ratio_errors: empty dataset");
  const int na = map.n_tar_actions;
  RatioErrors e;
  for (const Transition& r : data.records) {
    const int sa = r.state * na + r.action;
    e.delta_src += std::abs(w_src(map.source_pair(r.state, r.action)) - w_ref(sa));
    e.delta_tar += std::abs(w_tar_prev(sa) - w_ref(sa));
  }
  const auto n = static_cast<double>(data.size());
  e.delta_src /= n;
  e.delta_tar /= n;
  return e;
}

double beta_theoretical(double delta_src, double delta_tar) { return delta_tar <= delta_src ? 0.0 : 1.0; }

BetaMode BetaMode::fixed(double beta) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw InvalidArgument("BetaMode: fixed beta must lie in [0, 1]");
  return {Kind::Fixed, beta};
}

BetaMode BetaMode::parse(const std::string& text) {
  if (text == "adaptive") return adaptive();
  if (text == "theoretical") return theoretical();
  const std::string prefix = "fixed:";
  if (text.rfind(prefix, 0) == 0) {
    std::size_t used = 0;
    const std::string number = text.substr(prefix.size());
    double value = 0.0;
    try {
      value = std::stod(number, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != number.size()) throw InvalidArgument("BetaMode: cannot parse '" + text + "'");
    return fixed(value);
  }
  throw InvalidArgument("BetaMode: unknown mode '" + text + "' (expected adaptive, theoretical or fixed:<beta>)");
}

std::string BetaMode::to_string() const {
  switch (kind) {
    case Kind::Adaptive:
      return "adaptive";
    case Kind::Theoretical:
      return "theoretical";
    case Kind::Fixed: {
      std::string v = std::to_string(value);
      v.erase(v.find_last_not_of('0') + 1);
      if (!v.empty() && v.back() == '.') v.pop_back();
      return "fixed:" + v;
    }
  }
  return "adaptive";
}

double beta_adaptive(const BetaState& state) {
  const double d_src = state.delta_src;
  const double d_ma = state.delta_ma;
  if (d_src < 1e-12 && d_ma < 1e-12) return 0.5;
  return d_ma / (d_src + d_ma);
}

BetaState moving_average_update(BetaState state, double new_delta_tar) {
  if (!(state.psi >= 0.0 && state.psi < 1.0)) throw InvalidArgument("moving_average_update: psi must lie in [0, 1)");
  state.delta_tar = new_delta_tar;
  if (!state.initialized) {
    state.delta_ma = new_delta_tar;
    state.initialized = true;
  } else {
    state.delta_ma = state.psi * state.delta_ma + (1.0 - state.psi) * new_delta_tar;
  }
  return state;
}

AdaptDiceResult adaptdice_run(const SourceArtifacts& src, const Dataset& expert, const Dataset& union_data,
                              const TabularMdp& tar_mdp, const AdaptDiceOptions& opts) {
  const DiceConfig& cfg = opts.cfg;
  cfg.validate();
  if (union_data.empty() || expert.empty()) throw EmptyDatasetError("adaptdice_run: empty target data");
  if (opts.oracle_w_star && opts.oracle_w_star->size() != tar_mdp.n_pairs()) {
    throw InvalidArgument("adaptdice_run: oracle ratio size mismatch");
  }

  AdaptDiceResult out;
  out.inputs = prepare_dice_inputs(expert, union_data, tar_mdp, cfg, opts.disc);
  const DiceObjective objective(tar_mdp, out.inputs.r, out.inputs.mu, out.inputs.dU, cfg);
  const double eta = cfg.eta();
  const int n_src_states = src.mdp.n_states();
  const int n_src_actions = src.mdp.n_actions();

  MappingPair map = MappingPair::random(tar_mdp.n_states(), tar_mdp.n_actions(), n_src_states, n_src_actions,
                                        derive_seed(opts.seed, "mapping-init"));
  PseudoValue nu = PseudoValue::Zero(tar_mdp.n_states());
  Policy pi = Policy::uniform(tar_mdp.n_states(), tar_mdp.n_actions());
  DensityRatio w_prev = density_ratio(nu, out.inputs.r, cfg, tar_mdp);
  DensityRatio w_tar = w_prev;
  DensityRatio wc = w_prev;
  BetaState beta_state;
  beta_state.psi = opts.psi;
  beta_state.mode = opts.mode;

  for (int t = 1; t <= cfg.iterations; ++t) {
    AdaptDiceIterate it;
    it.t = t;

    const MappingObjective map_objective(out.inputs.r, src.q, n_src_states, n_src_actions, pi, union_data, cfg.gamma);
    MappingSearchOptions search;
    search.budget = opts.map_budget;
    search.restarts = t == 1 ? opts.restarts : 0;
    search.seed = derive_seed(opts.seed, "mapping-search", static_cast<std::uint64_t>(t));
    search.source_occupancy = src.d;
    MappingSearchResult mapped = optimize_mappings(map, map_objective, search);
    map = std::move(mapped.mapping);
    it.map_loss = mapped.loss;
    out.unconstrained_states = mapped.unconstrained_states;
    out.unconstrained_pairs = mapped.unconstrained_pairs;

    try {
      nu = gradient_step(objective, nu, eta);
      it.dice_loss = objective.loss(nu);
    } catch (const NumericalError& e) {
      throw NumericalError("adaptdice_run: iteration " + std::to_string(t) + ": " + e.what());
    }
    RatioDiagnostics diag;
    w_tar = density_ratio(nu, out.inputs.r, cfg, tar_mdp, &diag);
    it.clipped_ratios = diag.clipped;

    const RatioErrors errs = ratio_errors(map, src.w, w_prev, w_tar, union_data);
    beta_state.delta_src = errs.delta_src;
    beta_state = moving_average_update(beta_state, errs.delta_tar);
    it.delta_src = beta_state.delta_src;
    it.delta_tar = beta_state.delta_tar;
    it.delta_ma = beta_state.delta_ma;

    std::optional<RatioErrors> oracle;
    if (opts.oracle_w_star) oracle = ratio_errors(map, src.w, w_tar, *opts.oracle_w_star, union_data);

    switch (opts.mode.kind) {
      case BetaMode::Kind::Adaptive:
        it.beta = beta_adaptive(beta_state);
        break;
      case BetaMode::Kind::Theoretical:
        it.beta = oracle ? beta_theoretical(oracle->delta_src, oracle->delta_tar)
                         : beta_theoretical(beta_state.delta_src, beta_state.delta_ma);
        break;
      case BetaMode::Kind::Fixed:
        it.beta = opts.mode.value;
        break;
    }

    wc = w_cross(it.beta, map, src.w, w_tar);
    pi = extract_policy_bc(wc, union_data, tar_mdp, cfg);

    if (oracle) {
      const DensityRatio& w_star = *opts.oracle_w_star;
      const DensityRatio pulled = pullback(map, src.w);
      double cross_error = 0.0;
      double margin = std::numeric_limits<double>::infinity();
      for (const Transition& r : union_data.records) {
        const int sa = tar_mdp.index(r.state, r.action);
        const double lhs = std::abs(wc(sa) - w_star(sa));
        const double bound =
            it.beta * std::abs(pulled(sa) - w_star(sa)) + (1.0 - it.beta) * std::abs(w_tar(sa) - w_star(sa));
        cross_error += lhs;
        margin = std::min(margin, bound - lhs);
      }
      it.oracle_delta_src = oracle->delta_src;
      it.oracle_delta_tar = oracle->delta_tar;
      it.oracle_cross_error = cross_error / static_cast<double>(union_data.size());
      it.oracle_ratio_error = (w_tar - w_star).cwiseAbs().maxCoeff();
      it.bound_margin = margin;
    }
    if (opts.evaluator && (t % std::max(opts.eval_every, 1) == 0 || t == cfg.iterations)) {
      it.policy_metric = opts.evaluator(pi);
    }
    if (!std::isfinite(it.beta) || !std::isfinite(it.delta_src) || !std::isfinite(it.delta_ma) ||
        !std::isfinite(it.map_loss)) {
      throw NumericalError("adaptdice_run: non-finite diagnostic at iteration " + std::to_string(t));
    }
    out.trace.push_back(std::move(it));
    w_prev = w_tar;
  }

  out.policy = std::move(pi);
  out.mapping = std::move(map);
  out.nu = std::move(nu);
  out.w_tar = std::move(w_tar);
  out.w_cross = std::move(wc);
  return out;
}

}  // namespace adaptdice
