#include "adaptdice/io.hpp"

#include <fstream>
#include <sstream>

namespace adaptdice::io {

namespace fs = std::filesystem;

Json vector_to_json(const Eigen::Ref<const Eigen::VectorXd>& v) {
  Json j = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v(i));
  return j;
}

Json matrix_to_json(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  Json j = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) j.push_back(vector_to_json(m.row(r).transpose()));
  return j;
}

Eigen::VectorXd vector_from_json(const Json& j) {
  if (!j.is_array()) throw FormatError("expected a JSON array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw FormatError("expected a number at index " + std::to_string(i));
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

Eigen::MatrixXd matrix_from_json(const Json& j) {
  if (!j.is_array() || j.empty()) throw FormatError("expected a non-empty JSON array of rows");
  const std::size_t cols = j[0].size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (j[r].size() != cols) throw FormatError("ragged matrix at row " + std::to_string(r));
    m.row(static_cast<Eigen::Index>(r)) = vector_from_json(j[r]).transpose();
  }
  return m;
}

Json to_json(const TabularMdp& mdp) {
  Json j;
  j["id"] = mdp.id();
  j["n_states"] = mdp.n_states();
  j["n_actions"] = mdp.n_actions();
  j["discount"] = mdp.discount();
  j["transitions"] = matrix_to_json(mdp.transitions());
  j["initial_dist"] = vector_to_json(mdp.initial_dist());
  j["reward"] = mdp.reward() ? vector_to_json(*mdp.reward()) : Json(nullptr);
  return j;
}

TabularMdp mdp_from_json(const Json& j) {
  try {
    std::optional<Eigen::VectorXd> reward;
    if (j.contains("reward") && !j.at("reward").is_null()) reward = vector_from_json(j.at("reward"));
    return TabularMdp(j.at("n_states").get<int>(), j.at("n_actions").get<int>(), matrix_from_json(j.at("transitions")),
                      vector_from_json(j.at("initial_dist")), j.at("discount").get<double>(), std::move(reward),
                      j.value("id", std::string("mdp")));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("MDP JSON: ") + e.what());
  }
}

Json to_json(const Policy& policy) { return matrix_to_json(policy.probs); }

Policy policy_from_json(const Json& j) {
  Policy p{matrix_from_json(j)};
  p.validate(1e-9);
  return p;
}

Json to_json(const MappingPair& map) {
  Json j;
  j["n_src_states"] = map.n_src_states;
  j["n_src_actions"] = map.n_src_actions;
  j["n_tar_actions"] = map.n_tar_actions;
  j["G"] = map.state_map;
  Json h = Json::array();
  for (int s = 0; s < map.n_tar_states(); ++s) {
    Json row = Json::array();
    for (int a = 0; a < map.n_tar_actions; ++a) row.push_back(map.H(s, a));
    h.push_back(std::move(row));
  }
  j["H"] = std::move(h);
  return j;
}

MappingPair mapping_from_json(const Json& j) {
  try {
    MappingPair m;
    m.n_src_states = j.at("n_src_states").get<int>();
    m.n_src_actions = j.at("n_src_actions").get<int>();
    m.n_tar_actions = j.at("n_tar_actions").get<int>();
    m.state_map = j.at("G").get<std::vector<int>>();
    for (const Json& row : j.at("H")) {
      const auto values = row.get<std::vector<int>>();
      if (static_cast<int>(values.size()) != m.n_tar_actions) throw FormatError("mapping JSON: H row has wrong length");
      m.action_map.insert(m.action_map.end(), values.begin(), values.end());
    }
    m.validate();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("mapping JSON: ") + e.what());
  }
}

Json to_json(const PairSpec& s) {
  Json j;
  j["family"] = to_string(s.family);
  j["n_states"] = s.n_states;
  j["n_actions"] = s.n_actions;
  j["gamma"] = s.gamma;
  j["discrepancy"] = to_string(s.discrepancy);
  j["also_permute"] = s.also_permute;
  j["state_permutation"] = s.state_permutation ? Json(*s.state_permutation) : Json(nullptr);
  j["action_permutation"] = s.action_permutation ? Json(*s.action_permutation) : Json(nullptr);
  j["extra_actions"] = s.extra_actions;
  j["extra_states"] = s.extra_states;
  j["epsilon_p"] = s.epsilon_p;
  j["reward_shift"] = s.reward_shift;
  j["branching"] = s.branching;
  j["slip"] = s.slip;
  j["seed"] = s.seed;
  return j;
}

PairSpec pair_spec_from_json(const Json& j, PairSpec s) {
  try {
    if (j.contains("family")) s.family = parse_family(j.at("family").get<std::string>());
    if (j.contains("discrepancy")) s.discrepancy = parse_discrepancy(j.at("discrepancy").get<std::string>());
    auto take = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    take("n_states", s.n_states);
    take("n_actions", s.n_actions);
    take("gamma", s.gamma);
    take("also_permute", s.also_permute);
    take("extra_actions", s.extra_actions);
    take("extra_states", s.extra_states);
    take("epsilon_p", s.epsilon_p);
    take("reward_shift", s.reward_shift);
    take("branching", s.branching);
    take("slip", s.slip);
    take("seed", s.seed);
    if (j.contains("state_permutation") && !j.at("state_permutation").is_null()) {
      s.state_permutation = j.at("state_permutation").get<std::vector<int>>();
    }
    if (j.contains("action_permutation") && !j.at("action_permutation").is_null()) {
      s.action_permutation = j.at("action_permutation").get<std::vector<int>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("pair spec: ") + e.what());
  }
  return s;
}

Json to_json(const DataSpec& s) {
  Json j;
  j["n_expert"] = s.n_expert;
  j["n_expert_in_mix"] = s.n_expert_in_mix;
  j["n_random_in_mix"] = s.n_random_in_mix;
  j["horizon"] = s.horizon;
  j["seed"] = s.seed;
  return j;
}

DataSpec data_spec_from_json(const Json& j, DataSpec s) {
  try {
    if (j.contains("n_expert")) s.n_expert = j.at("n_expert").get<int>();
    if (j.contains("n_expert_in_mix")) s.n_expert_in_mix = j.at("n_expert_in_mix").get<int>();
    if (j.contains("n_random_in_mix")) s.n_random_in_mix = j.at("n_random_in_mix").get<int>();
    if (j.contains("horizon")) s.horizon = j.at("horizon").get<int>();
    if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("data spec: ") + e.what());
  }
  return s;
}

void write_dataset(std::ostream& os, const Dataset& data) {
  Json header;
  header["format"] = "adaptdice-dataset";
  header["mdp_id"] = data.metadata.mdp_id;
  header["policy"] = data.metadata.policy;
  header["seed"] = data.metadata.seed;
  header["n_records"] = data.size();
  os << header.dump() << "\ntraj_id,step,state,action,next_state,is_expert\n";
  for (const Transition& r : data.records) {
    os << r.traj_id << ',' << r.step << ',' << r.state << ',' << r.action << ',' << r.next_state << ','
       << (r.is_expert ? 1 : 0) << '\n';
  }
}

Dataset read_dataset(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw FormatError("dataset: missing header line");
  Dataset data;
  std::size_t expected = 0;
  try {
    const Json header = Json::parse(line);
    if (header.value("format", std::string()) != "adaptdice-dataset") throw FormatError("dataset: unknown format");
    data.metadata.mdp_id = header.value("mdp_id", std::string());
    data.metadata.policy = header.value("policy", std::string());
    data.metadata.seed = header.value("seed", std::uint64_t{0});
    expected = header.at("n_records").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("dataset header: ") + e.what());
  }
  if (!std::getline(is, line)) throw FormatError("dataset: missing column line");
  std::size_t line_no = 2;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    Transition r;
    char c1, c2, c3, c4, c5;
    int expert = 0;
    if (!(fields >> r.traj_id >> c1 >> r.step >> c2 >> r.state >> c3 >> r.action >> c4 >> r.next_state >> c5 >>
          expert) ||
        c1 != ',' || c2 != ',' || c3 != ',' || c4 != ',' || c5 != ',' || (expert != 0 && expert != 1)) {
      throw FormatError("dataset: malformed record on line " + std::to_string(line_no));
    }
    r.is_expert = expert == 1;
    data.records.push_back(r);
  }
  if (data.size() != expected) {
    throw FormatError("dataset: header announces " + std::to_string(expected) + " records, found " +
                      std::to_string(data.size()));
  }
  return data;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os << text;
  if (!os) throw std::runtime_error("failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

Json read_json(const fs::path& path) {
  try {
    return Json::parse(read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

namespace {

void write_dataset_file(const fs::path& path, const Dataset& data) {
  std::ostringstream os;
  write_dataset(os, data);
  write_text(path, os.str());
}

Dataset read_dataset_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  try {
    return read_dataset(is);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace

void write_bundle(const fs::path& dir, const ScenarioBundle& b) {
  fs::create_directories(dir);
  write_json(dir / "src_mdp.json", to_json(b.pair.src));
  write_json(dir / "tar_mdp.json", to_json(b.pair.tar));
  write_dataset_file(dir / "src_data.csv", b.data.src);
  write_dataset_file(dir / "tar_expert.csv", b.data.expert_tar);
  write_dataset_file(dir / "tar_union.csv", b.data.union_tar);

  Json m;
  m["format"] = "adaptdice-bundle";
  m["name"] = b.name;
  m["pair_spec"] = to_json(b.pair_spec);
  m["source_data_spec"] = to_json(b.src_spec);
  m["target_data_spec"] = to_json(b.tar_spec);
  m["files"] = {{"src_mdp", "src_mdp.json"},
                {"tar_mdp", "tar_mdp.json"},
                {"src_data", "src_data.csv"},
                {"tar_expert", "tar_expert.csv"},
                {"tar_union", "tar_union.csv"}};
  m["ground_truth"] = b.pair.ground_truth ? to_json(*b.pair.ground_truth) : Json(nullptr);
  m["counts"] = {{"src_trajectories", b.data.src.n_trajectories()},
                 {"tar_expert_trajectories", b.data.expert_tar.n_trajectories()},
                 {"tar_union_trajectories", b.data.union_tar.n_trajectories()}};
  write_json(dir / "manifest.json", m);
}

ScenarioBundle read_bundle(const fs::path& dir) {
  const Json m = read_json(dir / "manifest.json");
  if (m.value("format", std::string()) != "adaptdice-bundle") {
    throw FormatError((dir / "manifest.json").string() + ": not a bundle manifest");
  }
  const Json& files = m.at("files");
  MdpPair pair{mdp_from_json(read_json(dir / files.at("src_mdp").get<std::string>())),
               mdp_from_json(read_json(dir / files.at("tar_mdp").get<std::string>())), std::nullopt};
  if (!m.at("ground_truth").is_null()) pair.ground_truth = mapping_from_json(m.at("ground_truth"));
  ScenarioDatasets data{read_dataset_file(dir / files.at("src_data").get<std::string>()),
                        read_dataset_file(dir / files.at("tar_expert").get<std::string>()),
                        read_dataset_file(dir / files.at("tar_union").get<std::string>())};
  data.src.validate(pair.src);
  data.expert_tar.validate(pair.tar);
  data.union_tar.validate(pair.tar);
  if (!pair.src.reward() || !pair.tar.reward()) throw FormatError("bundle: MDPs must carry rewards");
  Policy src_expert = expert_policy(pair.src);
  Policy tar_expert = expert_policy(pair.tar);
  OccupancyMeasure d_src = occupancy_measure(pair.src, src_expert);
  OccupancyMeasure d_tar = occupancy_measure(pair.tar, tar_expert);
  return ScenarioBundle{m.value("name", std::string("bundle")),
                        pair_spec_from_json(m.at("pair_spec")),
                        data_spec_from_json(m.at("source_data_spec")),
                        data_spec_from_json(m.at("target_data_spec")),
                        std::move(pair),
                        std::move(data),
                        std::move(src_expert),
                        std::move(tar_expert),
                        std::move(d_src),
                        std::move(d_tar)};
}

}  // namespace adaptdice::io
