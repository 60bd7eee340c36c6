#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "adaptdice/dataset.hpp"
#include "adaptdice/dice.hpp"
#include "adaptdice/mdp.hpp"

namespace adaptdice {

/// Discrete cross-domain mapping: G sends target states to source states,
/// H sends target (state, action) pairs to source actions.
struct MappingPair {
  std::vector<int> state_map;   ///< G, size n_tar_states
  std::vector<int> action_map;  ///< H, size n_tar_states * n_tar_actions
  int n_src_states = 0;
  int n_src_actions = 0;
  int n_tar_actions = 0;

  static MappingPair identity(int n_states, int n_actions);
  static MappingPair random(int n_tar_states, int n_tar_actions, int n_src_states, int n_src_actions,
                            std::uint64_t seed);

  int n_tar_states() const noexcept { return static_cast<int>(state_map.size()); }
  int G(int s) const { return state_map[static_cast<std::size_t>(s)]; }
  int H(int s, int a) const { return action_map[static_cast<std::size_t>(s * n_tar_actions + a)]; }
  /// Source pair index of the mapped target pair.
  int source_pair(int s, int a) const { return G(s) * n_src_actions + H(s, a); }

  void validate() const;

  friend bool operator==(const MappingPair&, const MappingPair&) = default;
};

/// Q_src(s,a) = r_src(s,a) + gamma * sum_s' P_src(s'|s,a) nu_src(s').
Eigen::VectorXd q_from_nu(const Eigen::Ref<const PseudoValue>& nu_src, const PseudoReward& r_src,
                          const TabularMdp& src_mdp);

/// Pretrained source-domain quantities consumed by the cross-domain loop.
struct SourceArtifacts {
  TabularMdp mdp;
  PseudoValue nu;
  PseudoReward r;
  DensityRatio w;
  Eigen::VectorXd q;
  /// Source data occupancy; decides where unconstrained target coordinates map.
  OccupancyMeasure d;
};

SourceArtifacts make_source_artifacts(const TabularMdp& src_mdp, PseudoValue nu, PseudoReward r,
                                      OccupancyMeasure d, const DiceConfig& cfg);

/// Runs DemoDICE on the source data and packages the result.
SourceArtifacts pretrain_source(const Dataset& src_expert, const Dataset& src_union, const TabularMdp& src_mdp,
                                const DiceConfig& cfg);

/// Bellman-consistency mapping loss
///   mean_{(s,a,s') in D} | r_tar(s,a) + gamma sum_a' pi(a'|s') Q_src(G(s'), H(s',a')) - Q_src(G(s), H(s,a)) |.
/// Transitions are aggregated once so the loss of a candidate mapping costs
/// O(unique transitions + |S_tar||A_tar|).
class MappingObjective {
 public:
  MappingObjective(const PseudoReward& r_tar, Eigen::VectorXd q_src, int n_src_states, int n_src_actions,
                   const Policy& policy, const Dataset& data, double gamma);

  double loss(const MappingPair& map) const;

  int n_tar_states() const noexcept { return n_tar_states_; }
  int n_tar_actions() const noexcept { return n_tar_actions_; }
  int n_src_states() const noexcept { return n_src_states_; }
  int n_src_actions() const noexcept { return n_src_actions_; }
  /// G(s) influences the loss only if s occurs in the data.
  bool state_constrained(int s) const { return state_seen_[static_cast<std::size_t>(s)]; }
  /// H(s,a) influences the loss if (s,a) occurs or s is a next state.
  bool pair_constrained(int s, int a) const;

 private:
  struct Aggregate {
    int s, a, s_next;
    double count;
  };
  std::vector<Aggregate> transitions_;
  Eigen::VectorXd r_tar_;
  Eigen::VectorXd q_src_;
  Eigen::MatrixXd policy_;
  std::vector<bool> state_seen_;
  std::vector<bool> pair_seen_;
  std::vector<bool> next_seen_;
  double total_ = 0.0;
  double gamma_;
  int n_tar_states_, n_tar_actions_, n_src_states_, n_src_actions_;
};

double map_loss(const MappingPair& map, const PseudoReward& r_tar, const Eigen::Ref<const Eigen::VectorXd>& q_src,
                const Policy& policy, const Dataset& data, double gamma);

struct MappingSearchOptions {
  /// Maximum coordinate-descent sweeps; 0 returns the (default-filled) init.
  int budget = 10;
  /// Extra random initializations; the lowest final loss wins.
  int restarts = 0;
  std::uint64_t seed = 0;
  /// Source occupancy used to fill unconstrained coordinates (most-visited
  /// source state, then most-visited action there). Empty leaves them as is.
  std::optional<OccupancyMeasure> source_occupancy;
};

struct MappingSearchResult {
  MappingPair mapping;
  double loss = 0.0;
  int sweeps = 0;
  int unconstrained_states = 0;
  int unconstrained_pairs = 0;
};

/// Coordinate descent: each sweep visits every constrained G coordinate and
/// then every constrained H coordinate, assigning the loss-minimizing value
/// with ties toward the lowest index. Stops after a sweep without change.
MappingSearchResult optimize_mappings(const MappingPair& init, const MappingObjective& objective,
                                      const MappingSearchOptions& opts = {});

/// Size of the full search space |S_src|^|S_tar| * |A_src|^(|S_tar||A_tar|)
/// (saturating at infinity).
double mapping_space_size(int n_tar_states, int n_tar_actions, int n_src_states, int n_src_actions);

/// Exhaustive minimizer over every mapping; the first minimizer in
/// lexicographic order wins. Throws InvalidArgument above `max_space`.
MappingSearchResult exhaustive_mappings(const MappingObjective& objective, double max_space = 1e6);

/// w_src(G(s), H(s,a)) for every target pair.
DensityRatio pullback(const MappingPair& map, const Eigen::Ref<const DensityRatio>& w_src);

/// beta * w_src(G(s), H(s,a)) + (1 - beta) * w_tar(s,a).
DensityRatio w_cross(double beta, const MappingPair& map, const Eigen::Ref<const DensityRatio>& w_src,
                     const Eigen::Ref<const DensityRatio>& w_tar);

struct RatioErrors {
  double delta_src = 0.0;
  double delta_tar = 0.0;
};

/// Record-averaged |w_src o (G,H) - w_ref| and |w_tar_prev - w_ref|.
RatioErrors ratio_errors(const MappingPair& map, const Eigen::Ref<const DensityRatio>& w_src,
                         const Eigen::Ref<const DensityRatio>& w_tar_prev,
                         const Eigen::Ref<const DensityRatio>& w_ref, const Dataset& data);

/// 0 if delta_tar <= delta_src, otherwise 1.
double beta_theoretical(double delta_src, double delta_tar);

struct BetaMode {
  enum class Kind { Theoretical, Adaptive, Fixed };
  Kind kind = Kind::Adaptive;
  double value = 0.0;

  static BetaMode adaptive() { return {Kind::Adaptive, 0.0}; }
  static BetaMode theoretical() { return {Kind::Theoretical, 0.0}; }
  static BetaMode fixed(double beta);
  /// "adaptive", "theoretical", or "fixed:<beta>".
  static BetaMode parse(const std::string& text);
  std::string to_string() const;

  friend bool operator==(const BetaMode&, const BetaMode&) = default;
};

struct BetaState {
  double psi = 0.9;
  double delta_src = 0.0;
  double delta_tar = 0.0;
  double delta_ma = 0.0;
  bool initialized = false;
  BetaMode mode;
};

/// Harmonic weight (1/d_src) / (1/d_src + 1/d_ma) = d_ma / (d_src + d_ma);
/// 0.5 when both errors are below 1e-12.
double beta_adaptive(const BetaState& state);

/// delta_ma <- psi * delta_ma + (1 - psi) * new_delta_tar; the first call
/// initializes delta_ma to new_delta_tar.
BetaState moving_average_update(BetaState state, double new_delta_tar);

struct AdaptDiceOptions {
  DiceConfig cfg;
  BetaMode mode = BetaMode::adaptive();
  double psi = 0.9;
  int map_budget = 10;
  int restarts = 0;
  std::uint64_t seed = 0;
  DiscriminatorOptions disc;
  /// Optimum of the target DICE objective; enables the oracle diagnostics
  /// and, in theoretical mode, oracle-driven beta.
  std::optional<DensityRatio> oracle_w_star;
  /// Optional per-iteration policy metric (e.g. occupancy KL to the expert).
  std::function<double(const Policy&)> evaluator;
  int eval_every = 1;
};

struct AdaptDiceIterate {
  int t = 0;
  double beta = 0.0;
  double delta_src = 0.0;
  double delta_tar = 0.0;
  double delta_ma = 0.0;
  double map_loss = 0.0;
  double dice_loss = 0.0;
  int clipped_ratios = 0;
  // Populated when an oracle optimum is supplied.
  std::optional<double> oracle_delta_src;
  std::optional<double> oracle_delta_tar;
  std::optional<double> oracle_cross_error;
  std::optional<double> oracle_ratio_error;
  /// min over dataset records of  beta*dw_src + (1-beta)*dw_tar - |w_cross - w*|.
  std::optional<double> bound_margin;
  std::optional<double> policy_metric;
};

struct AdaptDiceResult {
  Policy policy;
  MappingPair mapping;
  std::vector<AdaptDiceIterate> trace;
  DiceInputs inputs;
  PseudoValue nu;
  DensityRatio w_tar;
  DensityRatio w_cross;
  int unconstrained_states = 0;
  int unconstrained_pairs = 0;
};

/// The cross-domain loop. Per iteration t: mapping update against pi^(t-1),
/// one gradient step on the target DICE loss, ratio errors with the current
/// ratio as reference, beta, and weighted BC with the hybrid ratio.
AdaptDiceResult adaptdice_run(const SourceArtifacts& src, const Dataset& expert, const Dataset& union_data,
                              const TabularMdp& tar_mdp, const AdaptDiceOptions& opts);

}  // namespace adaptdice
