#include "adaptdice/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <map>
#include <sstream>
#include <thread>

#include "adaptdice/rng.hpp"
#include "adaptdice/theory.hpp"

namespace adaptdice {

namespace fs = std::filesystem;
using io::Json;

double occupancy_kl(const Eigen::Ref<const OccupancyMeasure>& p, const Eigen::Ref<const OccupancyMeasure>& q) {
  if (p.size() != q.size()) throw InvalidArgument("occupancy_kl: dimension mismatch");
  double kl = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p(i) > 0.0) kl += p(i) * std::log(p(i) / std::max(q(i), kRatioEps));
  }
  return kl;
}

PolicyMetrics evaluate_policy(const Policy& policy, const TabularMdp& mdp, const Policy& expert,
                              const Eigen::Ref<const OccupancyMeasure>& expert_occupancy) {
  if (policy.n_states() != mdp.n_states() || policy.n_actions() != mdp.n_actions() ||
      expert.n_states() != mdp.n_states() || expert.n_actions() != mdp.n_actions() ||
      expert_occupancy.size() != mdp.n_pairs()) {
    throw InvalidArgument("evaluate_policy: dimension mismatch");
  }
  const OccupancyMeasure d = occupancy_measure(mdp, policy);
  PolicyMetrics m;
  m.kl = occupancy_kl(d, expert_occupancy);
  const Eigen::VectorXd visited = state_marginal(expert_occupancy, mdp.n_states(), mdp.n_actions());
  double tv = 0.0;
  int count = 0;
  for (int s = 0; s < mdp.n_states(); ++s) {
    if (!(visited(s) > 0.0)) continue;
    tv += 0.5 * (policy.probs.row(s) - expert.probs.row(s)).cwiseAbs().sum();
    ++count;
  }
  m.tv = count > 0 ? tv / count : 0.0;
  if (mdp.reward()) m.discounted_return = d.dot(*mdp.reward()) / (1.0 - mdp.discount());
  return m;
}

std::string to_string(Algorithm a) { return a == Algorithm::DemoDice ? "demodice" : "adaptdice"; }

Algorithm parse_algorithm(const std::string& text) {
  if (text == "demodice") return Algorithm::DemoDice;
  if (text == "adaptdice") return Algorithm::AdaptDice;
  throw InvalidArgument("unknown algorithm '" + text + "' (expected demodice or adaptdice)");
}

std::string ScenarioRef::label() const { return bundle_dir ? "dir:" + bundle_dir->generic_string() : name; }

ScenarioBundle resolve_scenario(const ScenarioRef& ref, std::uint64_t seed) {
  if (ref.bundle_dir) return io::read_bundle(*ref.bundle_dir);
  if (ref.name == "transfer-favorable") return transfer_favorable_pair(seed);
  if (ref.name == "custom") {
    PairSpec pair = ref.pair;
    DataSpec src = ref.src_data;
    DataSpec tar = ref.tar_data;
    pair.seed = derive_seed(pair.seed, "run-pair", seed);
    src.seed = derive_seed(src.seed, "run-source", seed);
    tar.seed = derive_seed(tar.seed, "run-target", seed);
    return make_bundle("custom", pair, src, tar);
  }
  throw InvalidArgument("unknown scenario '" + ref.name + "' (expected transfer-favorable, custom or a directory)");
}

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw InvalidArgument("ExperimentConfig: seeds must not be empty");
  if (!(psi >= 0.0 && psi < 1.0)) throw InvalidArgument("ExperimentConfig: psi must lie in [0, 1)");
  if (map_budget < 0 || restarts < 0) throw InvalidArgument("ExperimentConfig: map_budget and restarts must be >= 0");
  if (eval_every < 1) throw InvalidArgument("ExperimentConfig: eval_every must be >= 1");
  if (source_iterations < 1) throw InvalidArgument("ExperimentConfig: source_iterations must be >= 1");
  if (workers < 0) throw InvalidArgument("ExperimentConfig: workers must be >= 0");
  if (!scenario.bundle_dir && scenario.name != "transfer-favorable" && scenario.name != "custom") {
    throw InvalidArgument("ExperimentConfig: unknown scenario '" + scenario.name + "'");
  }
  if (scenario.bundle_dir && !fs::exists(*scenario.bundle_dir / "manifest.json")) {
    throw InvalidArgument("ExperimentConfig: no manifest.json under " + scenario.bundle_dir->string());
  }
  if (!scenario.bundle_dir && scenario.name == "custom") {
    scenario.pair.validate();
    scenario.src_data.validate();
    scenario.tar_data.validate();
  }
  DiceConfig probe = cfg;
  probe.validate();
}

std::string ExperimentConfig::label() const {
  return algorithm == Algorithm::DemoDice ? "demodice" : "adaptdice-" + beta_mode.to_string();
}

Json to_json(const ExperimentConfig& c) {
  Json j;
  Json scenario;
  scenario["name"] = c.scenario.name;
  scenario["bundle_dir"] = c.scenario.bundle_dir ? Json(c.scenario.bundle_dir->generic_string()) : Json(nullptr);
  if (c.scenario.name == "custom") {
    scenario["pair"] = io::to_json(c.scenario.pair);
    scenario["source_data"] = io::to_json(c.scenario.src_data);
    scenario["target_data"] = io::to_json(c.scenario.tar_data);
  }
  j["scenario"] = std::move(scenario);
  j["algorithm"] = to_string(c.algorithm);
  j["beta_mode"] = c.beta_mode.to_string();
  j["alpha"] = c.cfg.alpha;
  j["step_size"] = c.cfg.step_size ? Json(*c.cfg.step_size) : Json(nullptr);
  j["iterations"] = c.cfg.iterations;
  j["weighting"] = c.cfg.weighting == Weighting::Discounted ? "discounted" : "unweighted";
  j["source_iterations"] = c.source_iterations;
  j["seeds"] = c.seeds;
  j["psi"] = c.psi;
  j["map_budget"] = c.map_budget;
  j["restarts"] = c.restarts;
  j["eval_every"] = c.eval_every;
  j["oracle_checks"] = c.oracle_checks;
  return j;
}

ExperimentConfig experiment_config_from_json(const Json& j, ExperimentConfig c) {
  try {
    if (j.contains("scenario")) {
      const Json& s = j.at("scenario");
      if (s.is_string()) {
        c.scenario.name = s.get<std::string>();
      } else {
        if (s.contains("name")) c.scenario.name = s.at("name").get<std::string>();
        if (s.contains("bundle_dir") && !s.at("bundle_dir").is_null()) {
          c.scenario.bundle_dir = fs::path(s.at("bundle_dir").get<std::string>());
        }
        if (s.contains("pair")) c.scenario.pair = io::pair_spec_from_json(s.at("pair"), c.scenario.pair);
        if (s.contains("source_data")) {
          c.scenario.src_data = io::data_spec_from_json(s.at("source_data"), c.scenario.src_data);
        }
        if (s.contains("target_data")) {
          c.scenario.tar_data = io::data_spec_from_json(s.at("target_data"), c.scenario.tar_data);
        }
      }
    }
    if (j.contains("algorithm")) c.algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
    if (j.contains("beta_mode")) c.beta_mode = BetaMode::parse(j.at("beta_mode").get<std::string>());
    if (j.contains("alpha")) c.cfg.alpha = j.at("alpha").get<double>();
    if (j.contains("step_size")) {
      c.cfg.step_size = j.at("step_size").is_null() ? std::nullopt : std::optional<double>(j.at("step_size").get<double>());
    }
    if (j.contains("iterations")) c.cfg.iterations = j.at("iterations").get<int>();
    if (j.contains("weighting")) {
      const auto w = j.at("weighting").get<std::string>();
      if (w != "discounted" && w != "unweighted") throw InvalidArgument("weighting must be discounted or unweighted");
      c.cfg.weighting = w == "discounted" ? Weighting::Discounted : Weighting::Unweighted;
    }
    if (j.contains("source_iterations")) c.source_iterations = j.at("source_iterations").get<int>();
    if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("psi")) c.psi = j.at("psi").get<double>();
    if (j.contains("map_budget")) c.map_budget = j.at("map_budget").get<int>();
    if (j.contains("restarts")) c.restarts = j.at("restarts").get<int>();
    if (j.contains("eval_every")) c.eval_every = j.at("eval_every").get<int>();
    if (j.contains("oracle_checks")) c.oracle_checks = j.at("oracle_checks").get<bool>();
    if (j.contains("workers")) c.workers = j.at("workers").get<int>();
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw io::FormatError(std::string("experiment config: ") + e.what());
  }
  return c;
}

Aggregate aggregate(const std::vector<double>& values) {
  Aggregate a;
  if (values.empty()) return a;
  for (double v : values) a.mean += v;
  a.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - a.mean) * (v - a.mean);
    a.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return a;
}

bool RunResult::ok() const {
  return std::none_of(seeds.begin(), seeds.end(), [](const SeedResult& s) { return s.error.has_value(); });
}

namespace {

Json metrics_json(const PolicyMetrics& m) {
  Json j;
  j["kl"] = m.kl;
  j["tv"] = m.tv;
  j["discounted_return"] = m.discounted_return ? Json(*m.discounted_return) : Json(nullptr);
  return j;
}

PolicyMetrics metrics_from_json(const Json& j) {
  PolicyMetrics m;
  m.kl = j.at("kl").get<double>();
  m.tv = j.at("tv").get<double>();
  if (!j.at("discounted_return").is_null()) m.discounted_return = j.at("discounted_return").get<double>();
  return m;
}

Json aggregate_json(const Aggregate& a) { return Json{{"mean", a.mean}, {"std", a.std}}; }

Json iterate_json(const AdaptDiceIterate& it) {
  Json j;
  j["t"] = it.t;
  j["beta"] = it.beta;
  j["delta_src"] = it.delta_src;
  j["delta_tar"] = it.delta_tar;
  j["delta_ma"] = it.delta_ma;
  j["map_loss"] = it.map_loss;
  j["dice_loss"] = it.dice_loss;
  j["clipped_ratios"] = it.clipped_ratios;
  if (it.oracle_ratio_error) {
    j["oracle_ratio_error"] = *it.oracle_ratio_error;
    j["oracle_delta_src"] = *it.oracle_delta_src;
    j["oracle_delta_tar"] = *it.oracle_delta_tar;
    j["oracle_cross_error"] = *it.oracle_cross_error;
    j["bound_margin"] = *it.bound_margin;
  }
  if (it.policy_metric) j["kl"] = *it.policy_metric;
  return j;
}

SeedResult run_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
  SeedResult out;
  out.seed = seed;
  const std::string dir_name = "seed_" + std::to_string(seed);
  const fs::path dir = cfg.output_dir / dir_name;
  out.trace_path = dir_name + "/trace.jsonl";

  const ScenarioBundle bundle = resolve_scenario(cfg.scenario, seed);
  const TabularMdp& tar = bundle.pair.tar;
  DiceConfig dc = cfg.cfg;
  dc.gamma = tar.discount();
  const Dataset& expert = bundle.data.expert_tar;
  const Dataset& union_data = bundle.data.union_tar;
  const InstanceDescriptor desc{seed, tar.n_states(), tar.n_actions(), dc.gamma, dc.alpha};
  auto kl_of = [&](const Policy& p) { return occupancy_kl(occupancy_measure(tar, p), bundle.tar_expert_occupancy); };

  std::optional<OracleResult> oracle;
  if (cfg.oracle_checks) {
    const DiceInputs inputs = prepare_dice_inputs(expert, union_data, tar, dc);
    OracleOptions opts;
    opts.seed = seed;
    // Data-driven targets have near-flat directions that descent alone does
    // not resolve; the Newton polish does the rest.
    opts.max_iterations = 20'000;
    opts.grad_tolerance = 1e-14;
    oracle = oracle_optimum(DiceObjective(tar, inputs.r, inputs.mu, inputs.dU, dc), opts);
  }

  std::ostringstream trace;
  std::vector<CheckReport> certificates;
  Policy policy;
  if (cfg.algorithm == Algorithm::DemoDice) {
    const DemoDiceResult res = demodice_train(expert, union_data, tar, dc, cfg.eval_every);
    for (const NuIterate& it : res.trace.iterates) {
      const DensityRatio w = density_ratio(it.nu, res.inputs.r, dc, tar);
      const double kl = kl_of(extract_policy_bc(w, union_data, tar, dc));
      Json line{{"t", it.iteration}, {"dice_loss", it.loss}, {"grad_norm", it.grad_norm}, {"kl", kl}};
      if (oracle) {
        double e = 0.0;
        for (int i = 0; i < tar.n_pairs(); ++i) {
          if (res.inputs.dU(i) > 0.0) e = std::max(e, std::abs(w(i) - oracle->w_star(i)));
        }
        line["oracle_ratio_error"] = e;
      }
      trace << line.dump() << '\n';
      out.learning_curve.push_back({it.iteration, kl});
    }
    policy = res.policy;
    if (oracle) {
      const DensityRatio w0 = density_ratio(PseudoValue::Zero(tar.n_states()), res.inputs.r, dc, tar);
      double e0 = 0.0;
      double eT = 0.0;
      for (int i = 0; i < tar.n_pairs(); ++i) {
        if (!(res.inputs.dU(i) > 0.0)) continue;
        e0 = std::max(e0, std::abs(w0(i) - oracle->w_star(i)));
        eT = std::max(eT, std::abs(res.w(i) - oracle->w_star(i)));
      }
      certificates.push_back(CheckReport::make("demodice_ratio_error_decrease", desc, eT, e0, 0.0,
                                               "max |w^(T) - w*| against max |w^(0) - w*|"));
    }
  } else {
    DiceConfig src_cfg = cfg.cfg;
    src_cfg.gamma = bundle.pair.src.discount();
    src_cfg.iterations = cfg.source_iterations;
    const SourceArtifacts src = pretrain_source(filter_expert(bundle.data.src), bundle.data.src, bundle.pair.src,
                                                src_cfg);
    AdaptDiceOptions opts;
    opts.cfg = dc;
    opts.mode = cfg.beta_mode;
    opts.psi = cfg.psi;
    opts.map_budget = cfg.map_budget;
    opts.restarts = cfg.restarts;
    opts.seed = seed;
    if (oracle) opts.oracle_w_star = oracle->w_star;
    opts.evaluator = kl_of;
    opts.eval_every = cfg.eval_every;
    const AdaptDiceResult res = adaptdice_run(src, expert, union_data, tar, opts);
    for (const AdaptDiceIterate& it : res.trace) {
      trace << iterate_json(it).dump() << '\n';
      out.beta_trace.push_back({it.t, it.beta});
      if (it.policy_metric) out.learning_curve.push_back({it.t, *it.policy_metric});
    }
    policy = res.policy;
    if (oracle) {
      certificates = theorem1_reports(res, desc, cfg.beta_mode.kind == BetaMode::Kind::Theoretical);
    }
    io::write_json(dir / "mapping.json", io::to_json(res.mapping));
  }

  out.metrics = evaluate_policy(policy, tar, bundle.tar_expert, bundle.tar_expert_occupancy);
  io::write_text(dir / "trace.jsonl", trace.str());
  io::write_json(dir / "policy.json", io::to_json(policy));
  io::write_json(dir / "metrics.json", metrics_json(out.metrics));
  if (oracle) {
    out.certificate_path = dir_name + "/certificates.json";
    io::write_text(dir / "certificates.json", certificates_json(certificates));
  }
  return out;
}

void fill_aggregate(RunResult& r) {
  std::vector<double> kl, tv, ret;
  for (const SeedResult& s : r.seeds) {
    if (s.error) continue;
    kl.push_back(s.metrics.kl);
    tv.push_back(s.metrics.tv);
    if (s.metrics.discounted_return) ret.push_back(*s.metrics.discounted_return);
  }
  r.kl = aggregate(kl);
  r.tv = aggregate(tv);
  if (!ret.empty() && ret.size() == kl.size()) r.discounted_return = aggregate(ret);
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  fs::create_directories(cfg.output_dir);
  RunResult result;
  result.scenario = cfg.scenario.label();
  result.label = cfg.label();

  const int workers = cfg.workers > 0 ? cfg.workers : std::max(1u, std::thread::hardware_concurrency());
  result.seeds.resize(cfg.seeds.size());
  for (std::size_t begin = 0; begin < cfg.seeds.size(); begin += static_cast<std::size_t>(workers)) {
    const std::size_t end = std::min(cfg.seeds.size(), begin + static_cast<std::size_t>(workers));
    std::vector<std::future<SeedResult>> jobs;
    for (std::size_t i = begin; i < end; ++i) {
      jobs.push_back(std::async(workers > 1 ? std::launch::async : std::launch::deferred,
                                [&cfg, seed = cfg.seeds[i]] { return run_seed(cfg, seed); }));
    }
    for (std::size_t i = begin; i < end; ++i) {
      try {
        result.seeds[i] = jobs[i - begin].get();
      } catch (const std::exception& e) {
        result.seeds[i].seed = cfg.seeds[i];
        result.seeds[i].error = "seed " + std::to_string(cfg.seeds[i]) + ": " + e.what();
      }
    }
  }
  fill_aggregate(result);

  Json j;
  j["scenario"] = result.scenario;
  j["label"] = result.label;
  j["config"] = to_json(cfg);
  Json seeds = Json::array();
  for (const SeedResult& s : result.seeds) {
    Json e;
    e["seed"] = s.seed;
    if (s.error) {
      e["error"] = *s.error;
    } else {
      e["metrics"] = metrics_json(s.metrics);
      e["trace"] = s.trace_path;
      e["certificates"] = s.certificate_path ? Json(*s.certificate_path) : Json(nullptr);
    }
    seeds.push_back(std::move(e));
  }
  j["seeds"] = std::move(seeds);
  j["aggregate"] = {{"kl", aggregate_json(result.kl)},
                    {"tv", aggregate_json(result.tv)},
                    {"discounted_return",
                     result.discounted_return ? aggregate_json(*result.discounted_return) : Json(nullptr)}};
  io::write_json(cfg.output_dir / "results.json", j);
  return result;
}

RunResult load_run_result(const fs::path& dir) {
  const Json j = io::read_json(dir / "results.json");
  RunResult r;
  try {
    r.scenario = j.at("scenario").get<std::string>();
    r.label = j.at("label").get<std::string>();
    for (const Json& e : j.at("seeds")) {
      SeedResult s;
      s.seed = e.at("seed").get<std::uint64_t>();
      if (e.contains("error")) {
        s.error = e.at("error").get<std::string>();
        r.seeds.push_back(std::move(s));
        continue;
      }
      s.metrics = metrics_from_json(e.at("metrics"));
      s.trace_path = e.at("trace").get<std::string>();
      if (!e.at("certificates").is_null()) s.certificate_path = e.at("certificates").get<std::string>();
      std::istringstream lines(io::read_text(dir / s.trace_path));
      std::string line;
      while (std::getline(lines, line)) {
        if (line.empty()) continue;
        const Json it = Json::parse(line);
        const int t = it.at("t").get<int>();
        if (it.contains("kl")) s.learning_curve.push_back({t, it.at("kl").get<double>()});
        if (it.contains("beta")) s.beta_trace.push_back({t, it.at("beta").get<double>()});
      }
      r.seeds.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw io::FormatError((dir / "results.json").string() + ": " + e.what());
  }
  fill_aggregate(r);
  return r;
}

PlotKind parse_plot_kind(const std::string& text) {
  if (text == "learning-curve") return PlotKind::LearningCurve;
  if (text == "beta-trace") return PlotKind::BetaTrace;
  if (text == "bar") return PlotKind::Bar;
  throw InvalidArgument("unknown plot kind '" + text + "' (expected learning-curve, beta-trace or bar)");
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string emit_plot_data(const std::vector<RunResult>& results, PlotKind kind) {
  if (results.empty()) throw InvalidArgument("emit_plot_data: no results");
  for (const RunResult& r : results) {
    if (r.scenario != results.front().scenario) {
      throw InvalidArgument("emit_plot_data: results mix scenarios '" + results.front().scenario + "' and '" +
                            r.scenario + "'");
    }
  }
  std::ostringstream os;
  os << "x,series,mean,std\n";
  for (const RunResult& r : results) {
    if (kind == PlotKind::Bar) {
      std::vector<std::pair<std::string, std::vector<double>>> metrics{{"kl", {}}, {"tv", {}}, {"return", {}}};
      for (const SeedResult& s : r.seeds) {
        if (s.error) continue;
        metrics[0].second.push_back(s.metrics.kl);
        metrics[1].second.push_back(s.metrics.tv);
        if (s.metrics.discounted_return) metrics[2].second.push_back(*s.metrics.discounted_return);
      }
      for (const auto& [name, values] : metrics) {
        if (values.empty()) continue;
        const Aggregate a = aggregate(values);
        os << name << ',' << r.label << ',' << fmt(a.mean) << ',' << fmt(a.std) << '\n';
      }
      continue;
    }
    std::map<int, std::vector<double>> by_t;
    for (const SeedResult& s : r.seeds) {
      if (s.error) continue;
      for (const CurvePoint& p : kind == PlotKind::LearningCurve ? s.learning_curve : s.beta_trace) {
        by_t[p.t].push_back(p.value);
      }
    }
    for (const auto& [t, values] : by_t) {
      const Aggregate a = aggregate(values);
      os << t << ',' << r.label << ',' << fmt(a.mean) << ',' << fmt(a.std) << '\n';
    }
  }
  return os.str();
}

}  // namespace adaptdice
