#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "adaptdice/bench.hpp"
#include "adaptdice/crossdomain.hpp"
#include "adaptdice/dice.hpp"
#include "adaptdice/io.hpp"

namespace adaptdice {

struct PolicyMetrics {
  /// KL(d^pi || d^E) with d^E floored at kRatioEps.
  double kl = 0.0;
  /// Mean over expert-visited states of 0.5 ||pi(.|s) - pi_E(.|s)||_1.
  double tv = 0.0;
  /// <d^pi, R> / (1 - gamma) when the MDP has a reward.
  std::optional<double> discounted_return;
};

PolicyMetrics evaluate_policy(const Policy& policy, const TabularMdp& mdp, const Policy& expert,
                              const Eigen::Ref<const OccupancyMeasure>& expert_occupancy);

/// KL(p || q) = sum_{p > 0} p log(p / max(q, kRatioEps)).
double occupancy_kl(const Eigen::Ref<const OccupancyMeasure>& p, const Eigen::Ref<const OccupancyMeasure>& q);

enum class Algorithm { DemoDice, AdaptDice };
std::string to_string(Algorithm a);
Algorithm parse_algorithm(const std::string& text);

/// Either a named bundle ("transfer-favorable"), a bundle directory written
/// by `gen`, or a custom pair + data specs. Named and custom scenarios are
/// regenerated per seed; a directory is shared by all seeds.
struct ScenarioRef {
  std::string name = "transfer-favorable";
  std::optional<std::filesystem::path> bundle_dir;
  PairSpec pair;
  DataSpec src_data{50, 0, 200, 50, 0};
  DataSpec tar_data{1, 1, 30, 50, 0};

  std::string label() const;
};

ScenarioBundle resolve_scenario(const ScenarioRef& ref, std::uint64_t seed);

struct ExperimentConfig {
  ScenarioRef scenario;
  Algorithm algorithm = Algorithm::AdaptDice;
  BetaMode beta_mode = BetaMode::adaptive();
  /// gamma is taken from the scenario's target MDP.
  DiceConfig cfg;
  /// DemoDICE iterations used to pretrain the source domain.
  int source_iterations = 5000;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  double psi = 0.9;
  int map_budget = 10;
  int restarts = 5;
  /// Record policy metrics every this many iterations (and at the last).
  int eval_every = 10;
  std::filesystem::path output_dir = "results";
  bool oracle_checks = false;
  /// Concurrent seeds; 0 uses the hardware concurrency.
  int workers = 0;

  void validate() const;
  std::string label() const;
};

io::Json to_json(const ExperimentConfig& cfg);
/// Fields present in `j` override those of `base`.
ExperimentConfig experiment_config_from_json(const io::Json& j, ExperimentConfig base = {});

struct CurvePoint {
  int t = 0;
  double value = 0.0;
};

struct SeedResult {
  std::uint64_t seed = 0;
  PolicyMetrics metrics;
  /// Relative to the output directory.
  std::string trace_path;
  std::optional<std::string> certificate_path;
  std::vector<CurvePoint> learning_curve;
  std::vector<CurvePoint> beta_trace;
  std::optional<std::string> error;
};

struct Aggregate {
  double mean = 0.0;
  double std = 0.0;
};

/// Sample standard deviation (n - 1 denominator; 0 for a single value).
Aggregate aggregate(const std::vector<double>& values);

struct RunResult {
  std::string scenario;
  std::string label;
  std::vector<SeedResult> seeds;
  Aggregate kl;
  Aggregate tv;
  std::optional<Aggregate> discounted_return;

  bool ok() const;
};

/// Runs every seed (concurrently, up to cfg.workers), writes per-seed
/// trace.jsonl, policy.json, metrics.json, certificates.json (oracle mode)
/// and the aggregate results.json under cfg.output_dir. Failed seeds are
/// recorded with their error and excluded from the aggregate.
RunResult run_experiment(const ExperimentConfig& cfg);

/// Rebuilds a RunResult (curves included) from a results directory.
RunResult load_run_result(const std::filesystem::path& dir);

enum class PlotKind { LearningCurve, BetaTrace, Bar };
PlotKind parse_plot_kind(const std::string& text);

/// CSV with header `x,series,mean,std`. Throws InvalidArgument on an empty
/// list or on results from different scenarios.
std::string emit_plot_data(const std::vector<RunResult>& results, PlotKind kind);

}  // namespace adaptdice
