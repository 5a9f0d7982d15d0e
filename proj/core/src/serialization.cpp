#include "redslds/serialization.hpp"

#include <cmath>
#include <json.hpp>
#include <limits>

#include "redslds/errors.hpp"

namespace redslds {
namespace {

using json = nlohmann::json;

json num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double get_num(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw ConfigError("invalid number '" + s + "'");
  }
  return j.get<double>();
}

json vec(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(num(v(i)));
  return out;
}

Vector get_vec(const json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = get_num(j[i]);
  return v;
}

json mat(const Matrix& m) {
  json data = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index k = 0; k < m.cols(); ++k) data.push_back(num(m(i, k)));
  return {{"shape", {m.rows(), m.cols()}}, {"data", data}};
}

Matrix get_mat(const json& j) {
  const auto rows = j.at("shape").at(0).get<Eigen::Index>();
  const auto cols = j.at("shape").at(1).get<Eigen::Index>();
  const json& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) throw ConfigError("matrix data has wrong length");
  Matrix m(rows, cols);
  std::size_t n = 0;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = get_num(data[n++]);
  return m;
}

json config_json(const ModelConfig& c) {
  return {{"num_modes", c.num_modes},
          {"latent_dim", c.latent_dim},
          {"obs_dim", c.obs_dim},
          {"max_duration", c.max_duration},
          {"recurrent_state", c.recurrent_state},
          {"explicit_duration", c.explicit_duration},
          {"recurrent_duration", c.recurrent_duration},
          {"shared_emission", c.shared_emission}};
}

ModelConfig get_config(const json& j) {
  ModelConfig c;
  c.num_modes = j.at("num_modes").get<int>();
  c.latent_dim = j.at("latent_dim").get<int>();
  c.obs_dim = j.at("obs_dim").get<int>();
  c.max_duration = j.at("max_duration").get<int>();
  c.recurrent_state = j.at("recurrent_state").get<bool>();
  c.explicit_duration = j.at("explicit_duration").get<bool>();
  c.recurrent_duration = j.at("recurrent_duration").get<bool>();
  c.shared_emission = j.at("shared_emission").get<bool>();
  c.validate();
  return c;
}

json regs_json(const std::vector<StickRegression>& regs) {
  json out = json::array();
  for (const auto& r : regs) out.push_back({{"weights", mat(r.weights)}, {"bias", vec(r.bias)}});
  return out;
}

std::vector<StickRegression> get_regs(const json& j) {
  std::vector<StickRegression> out;
  for (const auto& r : j) {
    StickRegression reg;
    reg.weights = get_mat(r.at("weights"));
    reg.bias = get_vec(r.at("bias"));
    out.push_back(std::move(reg));
  }
  return out;
}

json params_json(const ModelParams& p) {
  json modes = json::array();
  for (const auto& m : p.modes)
    modes.push_back({{"A", mat(m.a_mat)}, {"a", vec(m.a_bias)}, {"Q", mat(m.q_cov)},
                     {"C", mat(m.c_mat)}, {"c", vec(m.c_bias)}, {"S", mat(m.s_cov)}});
  json mu = json::array(), sigma = json::array();
  for (const auto& v : p.init.mu_init) mu.push_back(vec(v));
  for (const auto& m : p.init.sigma_init) sigma.push_back(mat(m));
  return {{"modes", modes},
          {"pi0", vec(p.init.pi0)},
          {"mu_init", mu},
          {"sigma_init", sigma},
          {"trans", mat(p.trans)},
          {"state_reg", regs_json(p.state_reg)},
          {"dur_reg", regs_json(p.dur_reg)},
          {"dur_table", mat(p.dur_table)}};
}

ModelParams get_params(const json& j) {
  ModelParams p;
  for (const auto& m : j.at("modes"))
    p.modes.push_back({get_mat(m.at("A")), get_vec(m.at("a")), get_mat(m.at("Q")), get_mat(m.at("C")),
                       get_vec(m.at("c")), get_mat(m.at("S"))});
  p.init.pi0 = get_vec(j.at("pi0"));
  for (const auto& v : j.at("mu_init")) p.init.mu_init.push_back(get_vec(v));
  for (const auto& m : j.at("sigma_init")) p.init.sigma_init.push_back(get_mat(m));
  p.trans = get_mat(j.at("trans"));
  p.state_reg = get_regs(j.at("state_reg"));
  p.dur_reg = get_regs(j.at("dur_reg"));
  p.dur_table = get_mat(j.at("dur_table"));
  return p;
}

json aux_json(const std::vector<PGAuxiliaries>& aux) {
  json out = json::array();
  for (const auto& a : aux) {
    if (a.empty()) out.push_back(nullptr);
    else out.push_back({{"omega", vec(a.omega)}, {"kappa", vec(a.kappa)}});
  }
  return out;
}

std::vector<PGAuxiliaries> get_aux(const json& j) {
  std::vector<PGAuxiliaries> out(j.size());
  for (std::size_t t = 0; t < j.size(); ++t) {
    if (j[t].is_null()) continue;
    out[t].omega = get_vec(j[t].at("omega"));
    out[t].kappa = get_vec(j[t].at("kappa"));
  }
  return out;
}

json state_json(const ChainState& st) {
  json trajs = json::array();
  for (const auto& t : st.trajectories) trajs.push_back({{"s", t.s}, {"d", t.d}, {"x", mat(t.x)}});
  json pg = json::array();
  for (const auto& p : st.pg) pg.push_back({{"state", aux_json(p.state)}, {"duration", aux_json(p.duration)}});
  return {{"params", params_json(st.params)},
          {"trajectories", trajs},
          {"pg", pg},
          {"iteration", st.iteration},
          {"rng", st.rng.state()}};
}

ChainState get_state(const json& j) {
  ChainState st;
  st.params = get_params(j.at("params"));
  for (const auto& t : j.at("trajectories")) {
    LatentTrajectory traj;
    traj.s = t.at("s").get<std::vector<int>>();
    traj.d = t.at("d").get<std::vector<int>>();
    traj.x = get_mat(t.at("x"));
    st.trajectories.push_back(std::move(traj));
  }
  for (const auto& p : j.at("pg")) st.pg.push_back({get_aux(p.at("state")), get_aux(p.at("duration"))});
  st.iteration = j.at("iteration").get<std::int64_t>();
  st.rng.set_state(j.at("rng").get<std::string>());
  return st;
}

json parse(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
}

template <typename F>
auto guarded(F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed document: ") + e.what());
  }
}

}  // namespace

std::string config_to_json(const ModelConfig& config) { return config_json(config).dump(2); }
ModelConfig config_from_json(const std::string& text) {
  return guarded([&] { return get_config(parse(text)); });
}

std::string params_to_json(const ModelParams& params) { return params_json(params).dump(); }
ModelParams params_from_json(const std::string& text) {
  return guarded([&] { return get_params(parse(text)); });
}

std::string chain_state_to_json(const ChainState& state) { return state_json(state).dump(); }
ChainState chain_state_from_json(const std::string& text) {
  return guarded([&] { return get_state(parse(text)); });
}

std::string checkpoint_to_json(const Checkpoint& cp) {
  const FitResult& r = cp.result;
  json diag = {{"joint_log_density", json::array()},
               {"evidence_proxy", json::array()},
               {"occupancy", r.diagnostics.occupancy},
               {"jitter_events", r.diagnostics.jitter_events}};
  for (double v : r.diagnostics.joint_log_density) diag["joint_log_density"].push_back(num(v));
  for (double v : r.diagnostics.evidence_proxy) diag["evidence_proxy"].push_back(num(v));
  json votes = json::array();
  for (const auto& v : r.votes) {
    json rows = json::array();
    for (Eigen::Index t = 0; t < v.rows(); ++t) {
      std::vector<int> row(v.cols());
      for (Eigen::Index k = 0; k < v.cols(); ++k) row[k] = v(t, k);
      rows.push_back(row);
    }
    votes.push_back(rows);
  }
  json snaps = json::array();
  for (const auto& s : r.snapshots) snaps.push_back(state_json(s));
  json doc = {{"version", kCheckpointVersion},
              {"config", config_json(cp.config)},
              {"state", state_json(r.state)},
              {"diagnostics", diag},
              {"votes", votes},
              {"kept", r.kept},
              {"snapshots", snaps}};
  return doc.dump();
}

Checkpoint checkpoint_from_json(const std::string& text) {
  return guarded([&] {
    const json doc = parse(text);
    if (doc.at("version").get<int>() != kCheckpointVersion)
      throw ConfigError("unsupported checkpoint version " + doc.at("version").dump());
    Checkpoint cp;
    cp.config = get_config(doc.at("config"));
    FitResult& r = cp.result;
    r.state = get_state(doc.at("state"));
    const json& diag = doc.at("diagnostics");
    for (const auto& v : diag.at("joint_log_density")) r.diagnostics.joint_log_density.push_back(get_num(v));
    for (const auto& v : diag.at("evidence_proxy")) r.diagnostics.evidence_proxy.push_back(get_num(v));
    r.diagnostics.occupancy = diag.at("occupancy").get<std::vector<std::vector<std::int64_t>>>();
    r.diagnostics.jitter_events = diag.at("jitter_events").get<std::vector<std::int64_t>>();
    for (const auto& rows : doc.at("votes")) {
      const auto len = static_cast<Eigen::Index>(rows.size());
      const Eigen::Index k = len > 0 ? static_cast<Eigen::Index>(rows[0].size()) : cp.config.num_modes;
      Eigen::MatrixXi v(len, k);
      for (Eigen::Index t = 0; t < len; ++t)
        for (Eigen::Index c = 0; c < k; ++c) v(t, c) = rows[t][c].get<int>();
      r.votes.push_back(std::move(v));
    }
    r.kept = doc.at("kept").get<std::int64_t>();
    for (const auto& s : doc.at("snapshots")) r.snapshots.push_back(get_state(s));
    return cp;
  });
}

}  // namespace redslds
