#include "adaptdice/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "adaptdice/rng.hpp"

namespace adaptdice {

std::size_t Dataset::n_trajectories() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (i == 0 || records[i].traj_id != records[i - 1].traj_id) ++n;
  }
  return n;
}

void Dataset::validate(const TabularMdp& mdp) const {
  std::set<int> seen;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const Transition& r = records[i];
    if (r.state < 0 || r.state >= mdp.n_states() || r.next_state < 0 || r.next_state >= mdp.n_states() ||
        r.action < 0 || r.action >= mdp.n_actions()) {
      throw InvalidArgument("Dataset: record " + std::to_string(i) + " is out of the MDP's bounds");
    }
    const bool starts = i == 0 || records[i - 1].traj_id != r.traj_id;
    if (starts) {
      if (!seen.insert(r.traj_id).second) {
        throw InvalidArgument("Dataset: trajectory " + std::to_string(r.traj_id) + " is not contiguous");
      }
    } else if (r.step != records[i - 1].step + 1) {
      throw InvalidArgument("Dataset: steps of trajectory " + std::to_string(r.traj_id) + " are not consecutive");
    }
  }
}

Eigen::VectorXd pair_mass(const Dataset& data, int n_states, int n_actions, double gamma, Weighting weighting,
                          RecordFilter filter) {
  Eigen::VectorXd mass = Eigen::VectorXd::Zero(n_states * n_actions);
  for (const Transition& r : data.records) {
    if (filter == RecordFilter::ExpertOnly && !r.is_expert) continue;
    if (r.state < 0 || r.state >= n_states || r.action < 0 || r.action >= n_actions) {
      throw InvalidArgument("pair_mass: record out of bounds");
    }
    const double w = weighting == Weighting::Discounted ? std::pow(gamma, r.step) : 1.0;
    mass(r.state * n_actions + r.action) += w;
  }
  return mass;
}

OccupancyMeasure empirical_occupancy(const Dataset& data, const TabularMdp& mdp, RecordFilter filter,
                                     Weighting weighting) {
  Eigen::VectorXd mass = pair_mass(data, mdp.n_states(), mdp.n_actions(), mdp.discount(), weighting, filter);
  const double total = mass.sum();
  if (!(total > 0.0)) throw EmptyDatasetError("empirical_occupancy: no records after filtering");
  return mass / total;
}

Eigen::VectorXd initial_state_distribution(const Dataset& data, int n_states) {
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(n_states);
  for (std::size_t i = 0; i < data.records.size(); ++i) {
    if (i == 0 || data.records[i].traj_id != data.records[i - 1].traj_id) {
      const int s = data.records[i].state;
      if (s < 0 || s >= n_states) throw InvalidArgument("initial_state_distribution: state out of bounds");
      mu(s) += 1.0;
    }
  }
  if (!(mu.sum() > 0.0)) throw EmptyDatasetError("initial_state_distribution: empty dataset");
  return mu / mu.sum();
}

Eigen::Array<bool, Eigen::Dynamic, 1> pair_support(const Dataset& data, int n_states, int n_actions) {
  Eigen::Array<bool, Eigen::Dynamic, 1> mask = Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(n_states * n_actions, false);
  for (const Transition& r : data.records) mask(r.state * n_actions + r.action) = true;
  return mask;
}

Dataset filter_expert(const Dataset& data) {
  Dataset out;
  out.metadata = data.metadata;
  std::copy_if(data.records.begin(), data.records.end(), std::back_inserter(out.records),
               [](const Transition& r) { return r.is_expert; });
  return out;
}

Dataset concat(const Dataset& a, const Dataset& b) {
  Dataset out = a;
  int offset = 0;
  for (const Transition& r : a.records) offset = std::max(offset, r.traj_id + 1);
  for (Transition r : b.records) {
    r.traj_id += offset;
    out.records.push_back(r);
  }
  return out;
}

Dataset sample_trajectories(const TabularMdp& mdp, const Policy& policy, const SamplingOptions& opts) {
  if (opts.horizon < 1) throw InvalidArgument("sample_trajectories: horizon must be >= 1");
  if (opts.n_trajectories < 0) throw InvalidArgument("sample_trajectories: negative trajectory count");
  if (policy.n_states() != mdp.n_states() || policy.n_actions() != mdp.n_actions()) {
    throw InvalidArgument("sample_trajectories: policy does not match the MDP");
  }
  policy.validate();

  Dataset data;
  data.metadata = DatasetMetadata{mdp.id(), opts.policy_name, opts.seed};
  data.records.reserve(static_cast<std::size_t>(opts.n_trajectories) * static_cast<std::size_t>(opts.horizon));
  for (int i = 0; i < opts.n_trajectories; ++i) {
    const int traj_id = opts.first_traj_id + i;
    Rng rng(derive_seed(opts.seed, "trajectory", static_cast<std::uint64_t>(traj_id)));
    int s = static_cast<int>(rng.categorical(mdp.initial_dist()));
    for (int t = 0; t < opts.horizon; ++t) {
      const int a = static_cast<int>(rng.categorical(policy.probs.row(s)));
      const int s_next = static_cast<int>(rng.categorical(mdp.transitions().row(mdp.index(s, a))));
      data.records.push_back(Transition{traj_id, t, s, a, s_next, opts.is_expert});
      s = s_next;
    }
  }
  return data;
}

}  // namespace adaptdice
