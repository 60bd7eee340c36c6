#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "adaptdice/runner.hpp"
#include "helpers.hpp"

using namespace adaptdice;
using namespace testing_support;

namespace {

ExperimentConfig small_config(const std::string& name) {
  ExperimentConfig c;
  c.cfg.iterations = 60;
  c.source_iterations = 300;
  c.seeds = {0, 1, 2};
  c.restarts = 1;
  c.eval_every = 20;
  c.workers = 1;
  c.output_dir = scratch_dir(name);
  return c;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace

TEST_CASE("expert policy scores zero against itself") {
  const TabularMdp m = dense_mdp(1, 5, 3, 0.9);
  const Policy e = expert_policy(m);
  const OccupancyMeasure d = occupancy_measure(m, e);
  const PolicyMetrics pm = evaluate_policy(e, m, e, d);
  CHECK(std::abs(pm.kl) < 1e-12);
  CHECK(pm.tv == 0.0);
  REQUIRE(pm.discounted_return.has_value());
  CHECK(*pm.discounted_return == doctest::Approx(return_by_rollout(m, e, *m.reward())).epsilon(1e-10));
}

TEST_CASE("uniform policy has zero TV to itself") {
  const TabularMdp m = dense_mdp(2, 4, 2, 0.9);
  const Policy u = Policy::uniform(4, 2);
  CHECK(evaluate_policy(u, m, u, occupancy_measure(m, u)).tv == 0.0);
}

TEST_CASE("policy metrics match term-by-term sums") {
  const TabularMdp m = dense_mdp(3, 4, 3, 0.85);
  const Policy pi = random_policy(4, 4, 3);
  Policy e = random_policy(5, 4, 3);
  e.probs.row(2).setZero();
  e.probs(2, 1) = 1.0;
  const Eigen::VectorXd dp = occupancy_by_rollout(m, pi);
  const Eigen::VectorXd de = occupancy_by_rollout(m, e);
  double kl = 0.0;
  for (int i = 0; i < dp.size(); ++i) {
    if (dp(i) > 0.0) kl += dp(i) * (std::log(dp(i)) - std::log(std::max(de(i), 1e-12)));
  }
  double tv = 0.0;
  for (int s = 0; s < 4; ++s) {
    for (int a = 0; a < 3; ++a) tv += 0.5 * std::abs(pi(s, a) - e(s, a)) / 4.0;
  }
  const PolicyMetrics pm = evaluate_policy(pi, m, e, occupancy_measure(m, e));
  CHECK(pm.kl == doctest::Approx(kl).epsilon(1e-9));
  CHECK(pm.tv == doctest::Approx(tv).epsilon(1e-12));
  CHECK_THROWS_AS(evaluate_policy(Policy::uniform(3, 3), m, e, de), InvalidArgument);
}

TEST_CASE("aggregate uses the sample standard deviation") {
  const Aggregate a = aggregate({1.0, 2.0, 4.0});
  CHECK(a.mean == doctest::Approx(7.0 / 3.0));
  CHECK(a.std == doctest::Approx(std::sqrt(((1 - 7.0 / 3) * (1 - 7.0 / 3) + (2 - 7.0 / 3) * (2 - 7.0 / 3) +
                                            (4 - 7.0 / 3) * (4 - 7.0 / 3)) / 2.0)));
  CHECK(aggregate({3.0}).std == 0.0);
}

TEST_CASE("config validation") {
  ExperimentConfig c;
  c.seeds.clear();
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = ExperimentConfig{};
  c.scenario.name = "nowhere";
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = ExperimentConfig{};
  c.scenario.bundle_dir = std::filesystem::path("/nonexistent/bundle");
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  CHECK_NOTHROW(ExperimentConfig{}.validate());
}

TEST_CASE("beta zero and DemoDICE produce the same final policy") {
  ExperimentConfig a = small_config("beta0");
  a.beta_mode = BetaMode::fixed(0.0);
  ExperimentConfig d = small_config("demo");
  d.algorithm = Algorithm::DemoDice;
  const RunResult ra = run_experiment(a);
  const RunResult rd = run_experiment(d);
  REQUIRE(ra.ok());
  REQUIRE(rd.ok());
  for (std::size_t i = 0; i < ra.seeds.size(); ++i) {
    CHECK(ra.seeds[i].metrics.kl == rd.seeds[i].metrics.kl);
    CHECK(ra.seeds[i].metrics.tv == rd.seeds[i].metrics.tv);
  }
}

TEST_CASE("persisted results rebuild the aggregate and the plot data") {
  ExperimentConfig c = small_config("replot");
  c.oracle_checks = true;
  const RunResult r = run_experiment(c);
  REQUIRE(r.ok());
  const RunResult back = load_run_result(c.output_dir);
  CHECK(back.kl.mean == r.kl.mean);
  CHECK(back.kl.std == r.kl.std);
  CHECK(back.seeds.size() == 3);
  for (const SeedResult& s : back.seeds) {
    REQUIRE(s.certificate_path.has_value());
    CHECK(std::filesystem::exists(c.output_dir / *s.certificate_path));
  }

  // Re-aggregate the beta trace straight from the trace files.
  std::map<int, std::vector<double>> by_t;
  for (const SeedResult& s : back.seeds) {
    std::istringstream lines(io::read_text(c.output_dir / s.trace_path));
    std::string line;
    while (std::getline(lines, line)) {
      const io::Json j = io::Json::parse(line);
      by_t[j.at("t").get<int>()].push_back(j.at("beta").get<double>());
    }
  }
  const std::string csv = emit_plot_data({back}, PlotKind::BetaTrace);
  std::istringstream rows(csv);
  std::string line;
  std::getline(rows, line);
  CHECK(line == "x,series,mean,std");
  int n_rows = 0;
  while (std::getline(rows, line)) {
    const auto cells = split_csv(line);
    REQUIRE(cells.size() == 4);
    const auto& values = by_t.at(std::stoi(cells[0]));
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= values.size();
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    CHECK(std::stod(cells[2]) == doctest::Approx(mean).epsilon(1e-15));
    CHECK(std::stod(cells[3]) == doctest::Approx(std::sqrt(ss / (values.size() - 1))).epsilon(1e-12));
    CHECK(std::stod(cells[2]) >= 0.0);
    CHECK(std::stod(cells[2]) <= 1.0);
    ++n_rows;
  }
  CHECK(n_rows == 60);
}

TEST_CASE("plot data rejects empty and mixed inputs") {
  CHECK_THROWS_AS(emit_plot_data({}, PlotKind::Bar), InvalidArgument);
  RunResult a, b;
  a.scenario = "x";
  b.scenario = "y";
  CHECK_THROWS_AS(emit_plot_data({a, b}, PlotKind::LearningCurve), InvalidArgument);
  CHECK_THROWS_AS(parse_plot_kind("pie"), InvalidArgument);
}

TEST_CASE("failed seeds are recorded and excluded") {
  ExperimentConfig c = small_config("failing");
  const auto bundle = scratch_dir("broken_bundle");
  io::write_text(bundle / "manifest.json", "{}");
  c.scenario.bundle_dir = bundle;
  c.seeds = {0};
  const RunResult r = run_experiment(c);
  CHECK_FALSE(r.ok());
  REQUIRE(r.seeds[0].error.has_value());
  CHECK(r.seeds[0].error->find("seed 0") != std::string::npos);
}
