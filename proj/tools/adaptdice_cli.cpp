// adaptdice: scenario generation, training runs, theory certificates and
// plot-data export. Exit status is 0 iff every requested run or check
// succeeded.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "adaptdice/bench.hpp"
#include "adaptdice/io.hpp"
#include "adaptdice/runner.hpp"
#include "adaptdice/theory.hpp"

namespace fs = std::filesystem;
using namespace adaptdice;

namespace {

// Raw strings for enum-valued flags; parsed after CLI11 has run.
struct ScenarioFlags {
  std::string family;
  std::string discrepancy;
};

void add_scenario_flags(CLI::App* app, ScenarioRef& ref, ScenarioFlags& raw) {
  app->add_option("--scenario", ref.name, "transfer-favorable or custom");
  app->add_option("--family", raw.family, "custom pair: chain, gridworld or random");
  app->add_option("--discrepancy", raw.discrepancy,
                  "custom pair: permutation, action-augmentation, state-augmentation, dynamics-perturbation, "
                  "reward-shift");
  app->add_option("--states", ref.pair.n_states, "custom pair: source states");
  app->add_option("--actions", ref.pair.n_actions, "custom pair: source actions");
  app->add_option("--gamma", ref.pair.gamma, "custom pair: discount");
  app->add_flag("--also-permute", ref.pair.also_permute, "custom pair: relabel the target after the discrepancy");
  app->add_option("--branching", ref.pair.branching, "custom pair: successors per pair (random family)");
  app->add_option("--slip", ref.pair.slip, "custom pair: slip probability (chain, gridworld)");
  app->add_option("--extra-actions", ref.pair.extra_actions, "custom pair: duplicated actions");
  app->add_option("--extra-states", ref.pair.extra_states, "custom pair: twinned states");
  app->add_option("--epsilon-p", ref.pair.epsilon_p, "custom pair: dynamics perturbation strength");
  app->add_option("--reward-shift", ref.pair.reward_shift, "custom pair: reward offset");
  app->add_option("--src-expert", ref.src_data.n_expert, "source expert trajectories");
  app->add_option("--src-random", ref.src_data.n_random_in_mix, "source random trajectories");
  app->add_option("--tar-expert", ref.tar_data.n_expert, "labelled target expert trajectories");
  app->add_option("--tar-mix-expert", ref.tar_data.n_expert_in_mix, "unlabelled target expert trajectories");
  app->add_option("--tar-random", ref.tar_data.n_random_in_mix, "unlabelled target random trajectories");
  app->add_option("--horizon", ref.src_data.horizon, "trajectory horizon (both domains)");
}

void finish_scenario(ScenarioRef& ref, const ScenarioFlags& raw) {
  if (!raw.family.empty()) ref.pair.family = parse_family(raw.family);
  if (!raw.discrepancy.empty()) ref.pair.discrepancy = parse_discrepancy(raw.discrepancy);
  ref.tar_data.horizon = ref.src_data.horizon;
}

int cmd_gen(ScenarioRef ref, const ScenarioFlags& raw, const std::string& config, std::uint64_t seed,
            const fs::path& out) {
  finish_scenario(ref, raw);
  if (!config.empty()) {
    ExperimentConfig base;
    base.scenario = ref;
    ref = experiment_config_from_json(io::read_json(config), base).scenario;
  }
  const ScenarioBundle bundle = resolve_scenario(ref, seed);
  io::write_bundle(out, bundle);
  std::cout << "wrote " << bundle.name << " bundle to " << out.string() << " (" << bundle.data.src.n_trajectories()
            << " source, " << bundle.data.union_tar.n_trajectories() << " target trajectories)\n";
  return 0;
}

int cmd_train(ExperimentConfig cfg, const ScenarioFlags& raw, const std::string& bundle,
              const std::string& algorithm, const std::string& beta, const std::string& weighting,
              const std::vector<std::uint64_t>& seeds, const std::string& config) {
  finish_scenario(cfg.scenario, raw);
  if (!bundle.empty()) cfg.scenario.bundle_dir = fs::path(bundle);
  cfg.algorithm = parse_algorithm(algorithm);
  cfg.beta_mode = BetaMode::parse(beta);
  if (weighting == "unweighted") {
    cfg.cfg.weighting = Weighting::Unweighted;
  } else if (weighting != "discounted") {
    throw InvalidArgument("--weighting must be discounted or unweighted");
  }
  if (!seeds.empty()) cfg.seeds = seeds;
  if (!config.empty()) cfg = experiment_config_from_json(io::read_json(config), cfg);

  const RunResult result = run_experiment(cfg);
  std::cout << result.label << " on " << result.scenario << "\n";
  for (const SeedResult& s : result.seeds) {
    if (s.error) {
      std::cout << "  seed " << s.seed << ": FAILED " << *s.error << "\n";
    } else {
      std::cout << "  seed " << s.seed << ": kl=" << s.metrics.kl << " tv=" << s.metrics.tv << "\n";
    }
  }
  std::cout << "  kl " << result.kl.mean << " +- " << result.kl.std << ", tv " << result.tv.mean << " +- "
            << result.tv.std << "\n";
  std::cout << "results in " << (cfg.output_dir / "results.json").string() << "\n";
  return result.ok() ? 0 : 1;
}

int cmd_verify(const std::string& suite, std::uint64_t seed, const fs::path& out) {
  const std::vector<CheckReport> reports = run_suite(suite, seed);
  io::write_text(out / "certificates.json", certificates_json(reports));
  print_summary(std::cout, reports);
  for (const CheckReport& r : reports) {
    if (!r.pass) return 1;
  }
  return 0;
}

int cmd_report(const std::vector<std::string>& dirs, const std::string& kind, const std::string& out) {
  std::vector<RunResult> results;
  for (const auto& d : dirs) results.push_back(load_run_result(d));
  const std::string csv = emit_plot_data(results, parse_plot_kind(kind));
  if (out.empty()) {
    std::cout << csv;
  } else {
    io::write_text(out, csv);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-domain DICE imitation on tabular MDPs"};
  app.require_subcommand(1);

  // gen
  ScenarioRef gen_ref;
  ScenarioFlags gen_raw;
  std::string gen_config;
  std::uint64_t gen_seed = 0;
  std::string gen_out = "bundle";
  auto* gen = app.add_subcommand("gen", "Write a scenario bundle");
  add_scenario_flags(gen, gen_ref, gen_raw);
  gen->add_option("--config", gen_config, "JSON overriding the flags (keys: scenario.pair, .source_data, .target_data)");
  gen->add_option("--seed", gen_seed, "scenario seed");
  gen->add_option("--out", gen_out, "output directory");

  // train
  ExperimentConfig cfg;
  ScenarioFlags train_raw;
  std::string bundle, algorithm = "adaptdice", beta = "adaptive", weighting = "discounted", train_config;
  std::vector<std::uint64_t> seeds;
  std::string train_out = "results";
  auto* train = app.add_subcommand("train", "Run DemoDICE or AdaptDICE over seeds");
  add_scenario_flags(train, cfg.scenario, train_raw);
  train->add_option("--bundle", bundle, "scenario bundle directory written by gen");
  train->add_option("--algorithm", algorithm, "demodice or adaptdice");
  train->add_option("--beta", beta, "adaptive, theoretical or fixed:<value>");
  train->add_option("--alpha", cfg.cfg.alpha, "f-divergence regularization strength");
  train->add_option("--step-size", cfg.cfg.step_size, "gradient step (default 1/L_f)");
  train->add_option("--iterations", cfg.cfg.iterations, "target iterations");
  train->add_option("--weighting", weighting, "discounted or unweighted");
  train->add_option("--source-iterations", cfg.source_iterations, "source DemoDICE iterations");
  train->add_option("--seeds", seeds, "seed list");
  train->add_option("--seed", seeds, "single seed (same as --seeds with one value)");
  train->add_option("--psi", cfg.psi, "moving-average factor");
  train->add_option("--map-budget", cfg.map_budget, "mapping sweeps per iteration");
  train->add_option("--restarts", cfg.restarts, "random mapping restarts at the first iteration");
  train->add_option("--eval-every", cfg.eval_every, "policy metric period");
  train->add_option("--workers", cfg.workers, "concurrent seeds (0 = hardware threads)");
  train->add_option("--out", train_out, "output directory");
  train->add_flag("--oracle", cfg.oracle_checks, "compute the target optimum and emit certificates");
  train->add_option("--config", train_config, "JSON config; its fields override the flags");

  // verify
  std::string suite = "all";
  std::uint64_t verify_seed = 0;
  std::string verify_out = "certificates";
  auto* verify = app.add_subcommand("verify", "Run theory-check suites and write certificates.json");
  verify->add_option("--suite", suite, "lemma1, lemma2, theorem1 or all");
  verify->add_option("--seed", verify_seed, "instance seed (lemma2 instances are fixed)");
  verify->add_option("--out", verify_out, "output directory");

  // report
  std::vector<std::string> dirs;
  std::string kind = "learning-curve";
  std::string report_out;
  auto* report = app.add_subcommand("report", "Emit plot-ready CSV from results directories");
  report->add_option("dirs", dirs, "results directories")->required();
  report->add_option("--kind", kind, "learning-curve, beta-trace or bar");
  report->add_option("--out", report_out, "CSV path (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen(gen_ref, gen_raw, gen_config, gen_seed, gen_out);
    if (train->parsed()) {
      cfg.output_dir = train_out;
      return cmd_train(cfg, train_raw, bundle, algorithm, beta, weighting, seeds, train_config);
    }
    if (verify->parsed()) return cmd_verify(suite, verify_seed, verify_out);
    if (report->parsed()) return cmd_report(dirs, kind, report_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
