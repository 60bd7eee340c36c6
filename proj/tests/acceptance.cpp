// Acceptance criteria AC1..AC13. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "adaptdice/bench.hpp"
#include "adaptdice/crossdomain.hpp"
#include "adaptdice/dice.hpp"
#include "adaptdice/runner.hpp"
#include "adaptdice/theory.hpp"
#include "fixtures.hpp"
#include "helpers.hpp"

using namespace adaptdice;
using namespace testing_support;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Worst margin among the reports whose name starts with `prefix`; counts failures.
struct Tally {
  int total = 0;
  int failed = 0;
  double worst_margin = std::numeric_limits<double>::infinity();
};

Tally tally(const std::vector<CheckReport>& reports, const std::string& prefix) {
  Tally t;
  for (const CheckReport& r : reports) {
    if (r.name.rfind(prefix, 0) != 0) continue;
    ++t.total;
    t.failed += r.pass ? 0 : 1;
    t.worst_margin = std::min(t.worst_margin, r.margin);
  }
  return t;
}

Outcome ac1_lemma1() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<CheckReport> reports = lemma1_suite(0, 100);
  const double secs = seconds_since(t0);
  const Tally chord = tally(reports, "lemma1_convexity_chord");
  const Tally lip = tally(reports, "lemma1_gradient_lipschitz");
  const Tally ones = tally(reports, "lemma1_orthogonal_to_ones");
  const bool pass = chord.total == 100 && lip.total == 100 && ones.total == 100 && chord.failed + lip.failed +
                    ones.failed == 0 && secs < 60.0;
  return {pass, "300 checks on 100 instances, failures " + std::to_string(chord.failed + lip.failed + ones.failed) +
                    ", worst chord margin " + fmt("%.3g", chord.worst_margin) + ", worst Lipschitz margin " +
                    fmt("%.3g", lip.worst_margin) + ", " + fmt("%.1fs", secs)};
}

Outcome ac2_gradient() {
  double worst = 0.0;
  Rng rng(2);
  for (int k = 0; k < 20; ++k) {
    const int n = 3 + k % 8;
    const int m = 2 + k % 4;
    const double gammas[] = {0.5, 0.9, 0.99};
    const double alphas[] = {0.01, 0.05, 0.5};
    const DiceInstance inst = random_instance(derive_seed(2, "ac2", k), n, m, gammas[k % 3], alphas[(k / 3) % 3]);
    const DiceObjective obj = inst.objective();
    Eigen::VectorXd nu(n);
    for (int i = 0; i < n; ++i) nu(i) = rng.uniform(-2.0, 2.0);
    const Eigen::VectorXd g = obj.gradient(nu);
    // Fourth-order central differences.
    const double h = 1e-3;
    for (int i = 0; i < n; ++i) {
      auto at = [&](double step) {
        Eigen::VectorXd x = nu;
        x(i) += step;
        return obj.loss(x);
      };
      const double fd = (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12 * h);
      const double rel = std::abs(fd - g(i)) / std::max({std::abs(g(i)), std::abs(fd), 1e-8});
      worst = std::max(worst, rel);
    }
  }
  return {worst <= 1e-5, "worst per-coordinate relative error " + fmt("%.3g", worst) + " over 20 instances"};
}

Outcome ac3_shift() {
  double worst = 0.0;
  Rng rng(3);
  for (int k = 0; k < 100; ++k) {
    const DiceInstance inst = random_instance(derive_seed(3, "ac3", k), 3 + k % 10, 2 + k % 4, 0.9, 0.05);
    const DiceObjective obj = inst.objective();
    Eigen::VectorXd nu(inst.mdp.n_states());
    for (Eigen::Index i = 0; i < nu.size(); ++i) nu(i) = rng.uniform(-5.0, 5.0);
    const double c = rng.uniform(-100.0, 100.0);
    worst = std::max(worst, std::abs(obj.loss(nu.array() + c) - obj.loss(nu)) / (1.0 + std::abs(c)));
  }
  return {worst <= 1e-9, "worst |L(nu + c1) - L(nu)| / (1 + |c|) = " + fmt("%.3g", worst)};
}

Outcome ac4_lemma2() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<CheckReport> reports = lemma2_suite(5, 10'000);
  const double secs = seconds_since(t0);
  const Tally env = tally(reports, "lemma2_sqrt_envelope");
  const Tally fin = tally(reports, "lemma2_final_decay");
  const Tally full = tally(reports, "lemma2_full_bound");
  const bool pass = env.total == 5 && fin.total == 5 && env.failed + fin.failed == 0 && secs < 300.0;
  return {pass, "envelope failures " + std::to_string(env.failed) + "/5, final-decay failures " +
                    std::to_string(fin.failed) + "/5, full bound with estimated constant " +
                    std::to_string(full.total - full.failed) + "/5, " + fmt("%.1fs", secs)};
}

// Theorem 1 evidence: the certificate suite plus oracle-checked runs on the
// transfer-favorable scenario under both adaptive and theoretical beta.
std::vector<CheckReport> theorem1_evidence() {
  static std::vector<CheckReport> cached;
  if (!cached.empty()) return cached;
  cached = theorem1_suite(0, 3);
  for (const BetaMode mode : {BetaMode::adaptive(), BetaMode::theoretical()}) {
    ExperimentConfig c;
    c.beta_mode = mode;
    c.cfg.iterations = 300;
    c.source_iterations = 2000;
    c.oracle_checks = true;
    c.workers = 1;
    c.output_dir = scratch_dir("ac5_" + mode.to_string());
    const RunResult r = run_experiment(c);
    for (const SeedResult& s : r.seeds) {
      if (s.error) {
        cached.push_back(CheckReport::make("theorem1_run_error", {s.seed, 0, 0, 0, 0}, 1.0, 0.0, 0.0, *s.error));
        continue;
      }
      const io::Json certs = io::read_json(c.output_dir / *s.certificate_path);
      for (const io::Json& j : certs) {
        CheckReport rep = CheckReport::make(j.at("name").get<std::string>(), {s.seed, 8, 3, 0.9, c.cfg.alpha},
                                            j.at("measured").get<double>(), j.at("bound").get<double>(),
                                            j.at("tolerance").get<double>());
        cached.push_back(rep);
      }
    }
  }
  return cached;
}

Outcome ac5_pointwise() {
  const std::vector<CheckReport> reports = theorem1_evidence();
  const Tally t = tally(reports, "theorem1_pointwise_bound");
  const Tally errors = tally(reports, "theorem1_run_error");
  return {t.failed == 0 && errors.total == 0 && t.total >= 16,
          std::to_string(t.total) + " pointwise reports (suite plus oracle-checked runs), failures " + std::to_string(t.failed) +
              ", worst margin " + fmt("%.3g", t.worst_margin)};
}

Outcome ac6_min_property() {
  const std::vector<CheckReport> reports = theorem1_evidence();
  const Tally t = tally(reports, "theorem1_min_property");
  return {t.failed == 0 && t.total >= 8, std::to_string(t.total) + " min-property reports, failures " +
                                             std::to_string(t.failed) + ", worst margin " +
                                             fmt("%.3g", t.worst_margin)};
}

Outcome ac7_beta() {
  std::vector<std::string> problems;
  std::vector<double> grid(100);
  for (int i = 0; i < 100; ++i) grid[static_cast<std::size_t>(i)] = i == 0 ? 0.0 : std::pow(10.0, -6.0 + 7.0 * i / 99.0);
  auto adaptive = [](double src, double tar) {
    BetaState st;
    st.delta_src = src;
    st.delta_ma = tar;
    return beta_adaptive(st);
  };
  for (double a : grid) {
    for (double b : grid) {
      for (double beta : {adaptive(a, b), beta_theoretical(a, b)}) {
        if (!(beta >= 0.0 && beta <= 1.0)) problems.push_back("beta out of range");
      }
    }
    if (adaptive(a, a) != 0.5) problems.push_back("equal deltas " + fmt("%g", a) + " do not give 0.5");
  }
  for (double fixed : {0.0, 0.01, 0.3, 2.0}) {
    for (std::size_t i = 1; i < grid.size(); ++i) {
      if (adaptive(fixed, grid[i]) < adaptive(fixed, grid[i - 1])) problems.push_back("not increasing in tar");
      if (adaptive(grid[i], fixed) > adaptive(grid[i - 1], fixed)) problems.push_back("not decreasing in src");
      if (beta_theoretical(fixed, grid[i]) < beta_theoretical(fixed, grid[i - 1])) problems.push_back("theoretical");
    }
  }
  BetaState st;
  st.psi = 0.9;
  st = moving_average_update(st, 1.0);
  const double m1 = st.delta_ma;
  st = moving_average_update(st, 0.0);
  const double m2 = st.delta_ma;
  st = moving_average_update(st, 0.0);
  const double m3 = st.delta_ma;
  if (m1 != 1.0 || m2 != 0.9 || m3 != 0.9 * 0.9 || m3 != 0.81) problems.push_back("moving average");
  std::string detail = "range, 0.5 at equality, 100-point monotonicity, moving average " + fmt("%.17g", m1) + ", " +
                       fmt("%.17g", m2) + ", " + fmt("%.17g", m3);
  if (!problems.empty()) detail += "; first problem: " + problems.front();
  return {problems.empty(), detail};
}

Outcome ac8_beta_zero() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const ScenarioBundle b = transfer_favorable_pair(seed);
    DiceConfig src_cfg;
    src_cfg.gamma = b.pair.src.discount();
    src_cfg.iterations = 2000;
    const SourceArtifacts src = pretrain_source(filter_expert(b.data.src), b.data.src, b.pair.src, src_cfg);
    AdaptDiceOptions opts;
    opts.cfg.gamma = b.pair.tar.discount();
    opts.cfg.iterations = 1000;
    opts.mode = BetaMode::fixed(0.0);
    opts.restarts = 5;
    opts.seed = seed;
    const AdaptDiceResult a = adaptdice_run(src, b.data.expert_tar, b.data.union_tar, b.pair.tar, opts);
    const DemoDiceResult d = demodice_train(b.data.expert_tar, b.data.union_tar, b.pair.tar, opts.cfg);
    worst = std::max(worst, (a.policy.probs - d.policy.probs).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-12, "max elementwise policy difference over 5 seeds " + fmt("%.3g", worst)};
}

Outcome ac9_mapping_recovery() {
  const auto t0 = std::chrono::steady_clock::now();
  int recovered = 0;
  std::string misses;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const int n = seed % 2 == 0 ? 4 : 3;
    const int m = seed % 2 == 0 ? 2 : 3;
    const RecoveryFixture f = recovery_fixture(derive_seed(9, "ac9", seed), n, m);
    const MappingObjective obj = f.objective();
    MappingSearchOptions opts;
    opts.budget = 50;
    opts.restarts = 50;
    opts.seed = seed;
    opts.source_occupancy = f.dU_src;
    const MappingSearchResult cd = optimize_mappings(MappingPair::random(n, m, n, m, seed), obj, opts);
    const MappingSearchResult ex = exhaustive_mappings(obj);
    const bool ok = agrees_on_visited(cd.mapping, f.truth, f.data) && agrees_on_visited(ex.mapping, f.truth, f.data);
    recovered += ok ? 1 : 0;
    if (!ok) misses += " " + std::to_string(seed);
  }
  const double secs = seconds_since(t0);
  return {recovered >= 9 && secs < 120.0, std::to_string(recovered) + "/10 pairs recovered on visited coordinates" +
                                              (misses.empty() ? "" : " (missed:" + misses + ")") + ", " +
                                              fmt("%.1fs", secs)};
}

Outcome ac10_transfer() {
  const auto t0 = std::chrono::steady_clock::now();
  auto run = [](const BetaMode& mode) {
    ExperimentConfig c;
    c.beta_mode = mode;
    c.cfg.iterations = 1000;
    c.workers = 1;
    c.output_dir = scratch_dir("ac10_" + mode.to_string());
    const RunResult r = run_experiment(c);
    std::vector<double> kl;
    for (const SeedResult& s : r.seeds) {
      if (s.error) throw std::runtime_error(*s.error);
      kl.push_back(s.metrics.kl);
    }
    return median(kl);
  };
  const double adaptive = run(BetaMode::adaptive());
  const double f0 = run(BetaMode::fixed(0.0));
  const double f1 = run(BetaMode::fixed(1.0));
  const double secs = seconds_since(t0);
  const bool beats_target_only = adaptive <= f0;
  const bool near_best = adaptive <= 1.1 * std::min(f0, f1);
  return {beats_target_only && near_best && secs < 300.0,
          "median KL adaptive " + fmt("%.6g", adaptive) + ", fixed(0) " + fmt("%.6g", f0) + ", fixed(1) " +
              fmt("%.6g", f1) + "; adaptive <= fixed(0): " + (beats_target_only ? "yes" : "no") +
              "; adaptive <= 1.1 x best: " + (near_best ? "yes" : "no") + ", " + fmt("%.1fs", secs)};
}

Outcome ac11_demodice_sanity() {
  const TabularMdp chain = make_family_mdp(Family::Chain, 5, 2, 0.9, 1, 0.1, 0, "chain");
  const Policy expert = expert_policy(chain);
  const Dataset data = build_dataset(chain, expert, DataSpec{500, 0, 500, 50, 11});
  DiceConfig cfg;
  cfg.alpha = 0.05;
  cfg.gamma = 0.9;
  cfg.iterations = 5000;
  const DemoDiceResult r = demodice_train(filter_expert(data), data, chain, cfg);
  const OccupancyMeasure dE = occupancy_measure(chain, expert);
  const PolicyMetrics m = evaluate_policy(r.policy, chain, expert, dE);
  return {m.tv <= 0.05, "TV to expert on expert-visited states " + fmt("%.4g", m.tv)};
}

Outcome ac12_discriminator() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const TabularMdp mdp = dense_mdp(seed, 3 + static_cast<int>(seed % 6), 2 + static_cast<int>(seed % 3), 0.9);
    const OccupancyMeasure dE = occupancy_measure(mdp, expert_policy(mdp));
    const OccupancyMeasure dU = occupancy_measure(mdp, random_policy(seed + 50, mdp.n_states(), mdp.n_actions()));
    const Discriminator disc = fit_discriminator(dE, dU);
    for (Eigen::Index i = 0; i < dE.size(); ++i) {
      if (!(dE(i) > 0.0) || !(dU(i) > 0.0)) continue;
      const double r = std::log(disc.raw(i) / (1.0 - disc.raw(i)));
      worst = std::max(worst, std::abs(r - std::log(dE(i) / dU(i))));
    }
  }
  return {worst <= 1e-10, "worst |logit(c_raw) - log(dE/dU)| " + fmt("%.3g", worst) + " over 20 instances"};
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(ADAPTDICE_CLI) + " " + args + " > /dev/null 2>&1";
  return std::system(cmd.c_str());
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// Every regular file under `a` has a byte-identical twin under `b`, and vice versa.
bool same_tree(const fs::path& a, const fs::path& b, int& n_files, std::string& diff) {
  n_files = 0;
  for (const auto& [from, to] : {std::pair{a, b}, std::pair{b, a}}) {
    for (const auto& e : fs::recursive_directory_iterator(from)) {
      if (!e.is_regular_file()) continue;
      const fs::path rel = fs::relative(e.path(), from);
      if (!fs::exists(to / rel) || slurp(e.path()) != slurp(to / rel)) {
        diff = rel.string();
        return false;
      }
      if (from == a) ++n_files;
    }
  }
  return true;
}

Outcome ac13_determinism() {
  const fs::path root = scratch_dir("ac13");
  std::vector<std::string> rc;
  for (const char* run : {"a", "b"}) {
    const fs::path dir = root / run;
    const std::string d = dir.string();
    const int gen = run_cli("gen --seed 7 --out " + d + "/gen");
    const int gen_custom = run_cli("gen --scenario custom --family gridworld --states 9 --actions 4 --discrepancy "
                                   "state-augmentation --seed 7 --out " + d + "/gen_custom");
    const int train = run_cli("train --seeds 7 --iterations 200 --source-iterations 500 --oracle --out " + d +
                              "/train");
    // Both runs read the same bundle: results.json records the bundle path.
    const int train_bundle = run_cli("train --bundle " + (root / "a" / "gen").string() + " --seeds 7 --algorithm demodice --iterations 200 "
                                     "--out " + d + "/train_bundle");
    const int verify = run_cli("verify --suite all --seed 7 --out " + d + "/verify");
    const int report = run_cli("report " + d + "/train --kind learning-curve --out " + d + "/report.csv");
    for (int code : {gen, gen_custom, train, train_bundle, verify, report}) {
      if (code != 0) rc.push_back(std::string(run) + ": exit " + std::to_string(code));
    }
  }
  int n_files = 0;
  std::string diff;
  const bool same = rc.empty() && same_tree(root / "a", root / "b", n_files, diff);
  std::string detail = std::to_string(n_files) + " files compared across two invocations of gen, train, verify, report";
  if (!rc.empty()) detail += "; " + rc.front();
  if (!diff.empty()) detail += "; differs: " + diff;
  return {same && n_files > 0, detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"AC1  Lemma 1 suite", ac1_lemma1},
      {"AC2  gradient vs finite differences", ac2_gradient},
      {"AC3  shift invariance", ac3_shift},
      {"AC4  Lemma 2 rate", ac4_lemma2},
      {"AC5  Theorem 1 pointwise bound", ac5_pointwise},
      {"AC6  Theorem 1 min property", ac6_min_property},
      {"AC7  beta properties", ac7_beta},
      {"AC8  beta = 0 equals DemoDICE", ac8_beta_zero},
      {"AC9  mapping recovery", ac9_mapping_recovery},
      {"AC10 scaled transfer benefit", ac10_transfer},
      {"AC11 DemoDICE sanity", ac11_demodice_sanity},
      {"AC12 discriminator identity", ac12_discriminator},
      {"AC13 CLI determinism", ac13_determinism},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS  " : "FAIL  ") << name << "  | " << o.detail << std::endl;
  }
  std::cout << (13 - failed) << "/13 acceptance criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
