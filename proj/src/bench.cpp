#include "adaptdice/bench.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "adaptdice/rng.hpp"

namespace adaptdice {

std::string to_string(Family f) {
  switch (f) {
    case Family::Chain:
      return "chain";
    case Family::Gridworld:
      return "gridworld";
    case Family::Random:
      return "random";
  }
  return "random";
}

std::string to_string(Discrepancy d) {
  switch (d) {
    case Discrepancy::Permutation:
      return "permutation";
    case Discrepancy::ActionAugmentation:
      return "action-augmentation";
    case Discrepancy::StateAugmentation:
      return "state-augmentation";
    case Discrepancy::DynamicsPerturbation:
      return "dynamics-perturbation";
    case Discrepancy::RewardShift:
      return "reward-shift";
  }
  return "permutation";
}

Family parse_family(const std::string& text) {
  for (Family f : {Family::Chain, Family::Gridworld, Family::Random}) {
    if (to_string(f) == text) return f;
  }
  throw InvalidArgument("unknown MDP family '" + text + "'");
}

Discrepancy parse_discrepancy(const std::string& text) {
  for (Discrepancy d : {Discrepancy::Permutation, Discrepancy::ActionAugmentation, Discrepancy::StateAugmentation,
                        Discrepancy::DynamicsPerturbation, Discrepancy::RewardShift}) {
    if (to_string(d) == text) return d;
  }
  throw InvalidArgument("unknown discrepancy '" + text + "'");
}

namespace {

int target_states(const PairSpec& s) {
  return s.n_states + (s.discrepancy == Discrepancy::StateAugmentation ? s.extra_states : 0);
}

int target_actions(const PairSpec& s) {
  return s.n_actions + (s.discrepancy == Discrepancy::ActionAugmentation ? s.extra_actions : 0);
}

void check_permutation(const std::optional<std::vector<int>>& perm, int n, const char* what) {
  if (!perm) return;
  std::vector<int> sorted = *perm;
  std::sort(sorted.begin(), sorted.end());
  bool ok = static_cast<int>(sorted.size()) == n;
  for (int i = 0; ok && i < n; ++i) ok = sorted[static_cast<std::size_t>(i)] == i;
  if (!ok) throw InvalidArgument(std::string("PairSpec: ") + what + " is not a permutation of the target labels");
}

}  // namespace

void PairSpec::validate() const {
  if (n_states < 1 || n_actions < 1) throw InvalidArgument("PairSpec: sizes must be positive");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw InvalidArgument("PairSpec: gamma must lie in [0, 1)");
  if (family == Family::Gridworld && n_actions > 5) throw InvalidArgument("PairSpec: gridworld has at most 5 actions");
  if (family == Family::Random && (branching < 1 || branching > n_states)) {
    throw InvalidArgument("PairSpec: branching must lie in [1, n_states]");
  }
  if (!(slip >= 0.0 && slip <= 1.0)) throw InvalidArgument("PairSpec: slip must lie in [0, 1]");
  if (discrepancy == Discrepancy::ActionAugmentation && (extra_actions < 1 || extra_actions > n_actions)) {
    throw InvalidArgument("PairSpec: extra_actions must lie in [1, n_actions]");
  }
  if (discrepancy == Discrepancy::StateAugmentation && (extra_states < 1 || extra_states > n_states)) {
    throw InvalidArgument("PairSpec: extra_states must lie in [1, n_states]");
  }
  if (discrepancy == Discrepancy::DynamicsPerturbation && !(epsilon_p >= 0.0 && epsilon_p <= 1.0)) {
    throw InvalidArgument("PairSpec: epsilon_p must lie in [0, 1]");
  }
  if (discrepancy == Discrepancy::RewardShift && !std::isfinite(reward_shift)) {
    throw InvalidArgument("PairSpec: reward_shift must be finite");
  }
  check_permutation(state_permutation, target_states(*this), "state_permutation");
  check_permutation(action_permutation, target_actions(*this), "action_permutation");
}

TabularMdp make_family_mdp(Family family, int n_states, int n_actions, double gamma, int branching, double slip,
                           std::uint64_t seed, const std::string& id) {
  Rng rng(derive_seed(seed, "family"));
  const int n = n_states;
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n * n_actions, n);
  Eigen::VectorXd R = Eigen::VectorXd::Zero(n * n_actions);
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(n);

  switch (family) {
    case Family::Chain: {
      // 0 = left, 1 = right, further actions jump to a fixed state; moves stay put with prob. slip.
      std::vector<int> jump(static_cast<std::size_t>(n_actions), 0);
      for (int a = 2; a < n_actions; ++a) jump[static_cast<std::size_t>(a)] = static_cast<int>(rng.below(n));
      for (int s = 0; s < n; ++s) {
        for (int a = 0; a < n_actions; ++a) {
          int dest = s;
          if (a == 0) dest = std::max(s - 1, 0);
          if (a == 1) dest = std::min(s + 1, n - 1);
          if (a >= 2) dest = jump[static_cast<std::size_t>(a)];
          P(s * n_actions + a, dest) += 1.0 - slip;
          P(s * n_actions + a, s) += slip;
          R(s * n_actions + a) = s == n - 1 ? 1.0 : 0.0;
        }
      }
      mu(0) = 1.0;
      break;
    }
    case Family::Gridworld: {
      int height = 1;
      for (int h = 1; h * h <= n; ++h) {
        if (n % h == 0) height = h;
      }
      const int width = n / height;
      const int dr[5] = {-1, 0, 1, 0, 0};
      const int dc[5] = {0, 1, 0, -1, 0};
      auto move = [&](int s, int m) {
        const int r = std::clamp(s / width + dr[m], 0, height - 1);
        const int c = std::clamp(s % width + dc[m], 0, width - 1);
        return r * width + c;
      };
      for (int s = 0; s < n; ++s) {
        for (int a = 0; a < n_actions; ++a) {
          P(s * n_actions + a, move(s, a)) += 1.0 - slip;
          for (int m = 0; m < n_actions; ++m) P(s * n_actions + a, move(s, m)) += slip / n_actions;
          R(s * n_actions + a) = s == n - 1 ? 1.0 : 0.0;
        }
      }
      mu(0) = 1.0;
      break;
    }
    case Family::Random: {
      for (int sa = 0; sa < n * n_actions; ++sa) {
        const std::vector<int> order = rng.permutation(n);
        const Eigen::VectorXd weights = rng.simplex(branching);
        for (int k = 0; k < branching; ++k) P(sa, order[static_cast<std::size_t>(k)]) = weights(k);
        R(sa) = rng.uniform();
      }
      mu = rng.simplex(n);
      break;
    }
  }
  return TabularMdp(n, n_actions, std::move(P), std::move(mu), gamma, std::move(R), id);
}

namespace {

struct Relabeled {
  TabularMdp mdp;
  MappingPair map;
};

// Target label sigma(s) for base state s and tau(a) for base action a.
Relabeled relabel(const TabularMdp& base, const MappingPair& base_map, const std::vector<int>& sigma,
                  const std::vector<int>& tau) {
  const int n = base.n_states();
  const int m = base.n_actions();
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n * m, n);
  Eigen::VectorXd R = Eigen::VectorXd::Zero(n * m);
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(n);
  MappingPair map = base_map;
  for (int s = 0; s < n; ++s) {
    const int ts = sigma[static_cast<std::size_t>(s)];
    mu(ts) = base.initial_dist()(s);
    map.state_map[static_cast<std::size_t>(ts)] = base_map.G(s);
    for (int a = 0; a < m; ++a) {
      const int row = ts * m + tau[static_cast<std::size_t>(a)];
      for (int s2 = 0; s2 < n; ++s2) P(row, sigma[static_cast<std::size_t>(s2)]) = base.transition(s, a, s2);
      R(row) = (*base.reward())(base.index(s, a));
      map.action_map[static_cast<std::size_t>(row)] = base_map.H(s, a);
    }
  }
  return {TabularMdp(n, m, std::move(P), std::move(mu), base.discount(), std::move(R), base.id()), std::move(map)};
}

std::vector<int> distinct_sample(Rng& rng, int population, int count) {
  std::vector<int> order = rng.permutation(population);
  order.resize(static_cast<std::size_t>(count));
  std::sort(order.begin(), order.end());
  return order;
}

}  // namespace

MdpPair make_pair(const PairSpec& spec) {
  spec.validate();
  const TabularMdp src = make_family_mdp(spec.family, spec.n_states, spec.n_actions, spec.gamma, spec.branching,
                                         spec.slip, derive_seed(spec.seed, "source"), "source");
  Rng rng(derive_seed(spec.seed, "discrepancy"));
  const int n = spec.n_states;
  const int m = spec.n_actions;

  MappingPair map = MappingPair::identity(n, m);
  std::optional<TabularMdp> base;
  bool structural = true;

  switch (spec.discrepancy) {
    case Discrepancy::Permutation:
      base = src;
      break;
    case Discrepancy::ActionAugmentation: {
      const int m2 = m + spec.extra_actions;
      const std::vector<int> dup = distinct_sample(rng, m, spec.extra_actions);
      Eigen::MatrixXd P(n * m2, n);
      Eigen::VectorXd R(n * m2);
      map.n_tar_actions = m2;
      map.action_map.assign(static_cast<std::size_t>(n * m2), 0);
      for (int s = 0; s < n; ++s) {
        for (int a = 0; a < m2; ++a) {
          const int orig = a < m ? a : dup[static_cast<std::size_t>(a - m)];
          P.row(s * m2 + a) = src.transitions().row(src.index(s, orig));
          R(s * m2 + a) = (*src.reward())(src.index(s, orig));
          map.action_map[static_cast<std::size_t>(s * m2 + a)] = orig;
        }
      }
      base.emplace(n, m2, std::move(P), src.initial_dist(), src.discount(), std::move(R), "target");
      break;
    }
    case Discrepancy::StateAugmentation: {
      const int n2 = n + spec.extra_states;
      const std::vector<int> dup = distinct_sample(rng, n, spec.extra_states);
      // origin[s2] is the source state that target state s2 copies.
      std::vector<int> origin(static_cast<std::size_t>(n2));
      std::vector<int> twin(static_cast<std::size_t>(n), -1);
      for (int s = 0; s < n; ++s) origin[static_cast<std::size_t>(s)] = s;
      for (int j = 0; j < spec.extra_states; ++j) {
        origin[static_cast<std::size_t>(n + j)] = dup[static_cast<std::size_t>(j)];
        twin[static_cast<std::size_t>(dup[static_cast<std::size_t>(j)])] = n + j;
      }
      auto split = [&](const Eigen::VectorXd& row) {
        Eigen::VectorXd out = Eigen::VectorXd::Zero(n2);
        for (int s = 0; s < n; ++s) {
          const int t = twin[static_cast<std::size_t>(s)];
          out(s) += t < 0 ? row(s) : 0.5 * row(s);
          if (t >= 0) out(t) += 0.5 * row(s);
        }
        return out;
      };
      Eigen::MatrixXd P(n2 * m, n2);
      Eigen::VectorXd R(n2 * m);
      map.state_map.assign(static_cast<std::size_t>(n2), 0);
      map.action_map.assign(static_cast<std::size_t>(n2 * m), 0);
      for (int s2 = 0; s2 < n2; ++s2) {
        const int s = origin[static_cast<std::size_t>(s2)];
        map.state_map[static_cast<std::size_t>(s2)] = s;
        for (int a = 0; a < m; ++a) {
          P.row(s2 * m + a) = split(src.transitions().row(src.index(s, a)).transpose()).transpose();
          R(s2 * m + a) = (*src.reward())(src.index(s, a));
          map.action_map[static_cast<std::size_t>(s2 * m + a)] = a;
        }
      }
      base.emplace(n2, m, std::move(P), split(src.initial_dist()), src.discount(), std::move(R), "target");
      break;
    }
    case Discrepancy::DynamicsPerturbation: {
      structural = false;
      Eigen::MatrixXd P = (1.0 - spec.epsilon_p) * src.transitions();
      P.array() += spec.epsilon_p / n;
      base.emplace(n, m, std::move(P), src.initial_dist(), src.discount(), src.reward(), "target");
      break;
    }
    case Discrepancy::RewardShift: {
      Eigen::VectorXd R = *src.reward();
      for (Eigen::Index i = 0; i < R.size(); ++i) R(i) += spec.reward_shift * rng.uniform(-1.0, 1.0);
      base.emplace(n, m, src.transitions(), src.initial_dist(), src.discount(), std::move(R), "target");
      break;
    }
  }

  const int tn = base->n_states();
  const int tm = base->n_actions();
  std::vector<int> sigma(static_cast<std::size_t>(tn));
  std::vector<int> tau(static_cast<std::size_t>(tm));
  for (int i = 0; i < tn; ++i) sigma[static_cast<std::size_t>(i)] = i;
  for (int i = 0; i < tm; ++i) tau[static_cast<std::size_t>(i)] = i;
  if (spec.discrepancy == Discrepancy::Permutation || spec.also_permute) {
    sigma = spec.state_permutation ? *spec.state_permutation : rng.permutation(tn);
    tau = spec.action_permutation ? *spec.action_permutation : rng.permutation(tm);
  }
  Relabeled tar = relabel(*base, map, sigma, tau);
  MdpPair pair{src, tar.mdp.with_id("target"), std::nullopt};
  if (structural) {
    tar.map.validate();
    pair.ground_truth = std::move(tar.map);
  }
  return pair;
}

void DataSpec::validate() const {
  if (n_expert < 0 || n_expert_in_mix < 0 || n_random_in_mix < 0) {
    throw InvalidArgument("DataSpec: trajectory counts must be non-negative");
  }
  if (horizon < 1) throw InvalidArgument("DataSpec: horizon must be >= 1");
}

Dataset build_dataset(const TabularMdp& mdp, const Policy& expert, const DataSpec& spec) {
  spec.validate();
  const Policy random = Policy::uniform(mdp.n_states(), mdp.n_actions());
  Dataset out;
  out.metadata = DatasetMetadata{mdp.id(), "expert+mix", spec.seed};
  auto append = [&](const Policy& pi, int count, int first, bool is_expert, const char* purpose) {
    SamplingOptions opts;
    opts.n_trajectories = count;
    opts.horizon = spec.horizon;
    opts.seed = derive_seed(spec.seed, purpose);
    opts.is_expert = is_expert;
    opts.first_traj_id = first;
    const Dataset part = sample_trajectories(mdp, pi, opts);
    out.records.insert(out.records.end(), part.records.begin(), part.records.end());
  };
  append(expert, spec.n_expert, 0, true, "expert");
  append(expert, spec.n_expert_in_mix, spec.n_expert, false, "mix-expert");
  append(random, spec.n_random_in_mix, spec.n_expert + spec.n_expert_in_mix, false, "mix-random");
  return out;
}

ScenarioDatasets build_datasets(const MdpPair& pair, const DataSpec& src_spec, const DataSpec& tar_spec) {
  if (!pair.src.reward() || !pair.tar.reward()) throw InvalidArgument("build_datasets: both MDPs need rewards");
  const Dataset src = build_dataset(pair.src, expert_policy(pair.src), src_spec);
  const Dataset union_tar = build_dataset(pair.tar, expert_policy(pair.tar), tar_spec);
  Dataset expert_tar = filter_expert(union_tar);
  return {src, std::move(expert_tar), union_tar};
}

ScenarioBundle make_bundle(std::string name, const PairSpec& pair_spec, const DataSpec& src_spec,
                           const DataSpec& tar_spec) {
  MdpPair pair = make_pair(pair_spec);
  ScenarioDatasets data = build_datasets(pair, src_spec, tar_spec);
  Policy src_expert = expert_policy(pair.src);
  Policy tar_expert = expert_policy(pair.tar);
  OccupancyMeasure d_src = occupancy_measure(pair.src, src_expert);
  OccupancyMeasure d_tar = occupancy_measure(pair.tar, tar_expert);
  return ScenarioBundle{std::move(name),  pair_spec,           src_spec,         tar_spec,
                        std::move(pair),  std::move(data),     std::move(src_expert), std::move(tar_expert),
                        std::move(d_src), std::move(d_tar)};
}

ScenarioBundle transfer_favorable_pair(std::uint64_t seed) {
  PairSpec pair;
  pair.family = Family::Random;
  pair.n_states = 8;
  pair.n_actions = 2;
  pair.gamma = 0.9;
  pair.discrepancy = Discrepancy::ActionAugmentation;
  pair.extra_actions = 1;
  pair.also_permute = true;
  pair.branching = 2;
  pair.seed = derive_seed(seed, "pair");

  DataSpec src{50, 0, 200, 50, derive_seed(seed, "source-data")};
  DataSpec tar{1, 1, 30, 50, derive_seed(seed, "target-data")};
  return make_bundle("transfer-favorable", pair, src, tar);
}

}  // namespace adaptdice
