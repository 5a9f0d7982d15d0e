#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include <redslds/errors.hpp>

#include "redslds_cli/cli.hpp"

namespace redslds::cli {
namespace {

using json = nlohmann::json;

void check_keys(const json& j, const std::string& block, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ConfigError("'" + block + "' must be an object");
  for (const auto& [key, _] : j.items())
    if (!allowed.contains(key)) throw ConfigError("unknown key '" + key + "' in '" + block + "'");
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void read_mniw(const json& j, const std::string& name, double& v0, double& s0, double& n0) {
  check_keys(j, name, {"v0", "s0_scale", "n0_offset"});
  read(j, "v0", v0);
  read(j, "s0_scale", s0);
  read(j, "n0_offset", n0);
}

}  // namespace

std::uint64_t RunConfig::seed() const {
  if (!run.seed) throw ConfigError("a seed is required (run.seed or --seed)");
  return *run.seed;
}

RunConfig parse_run_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  try {
    check_keys(doc, "config", {"model", "prior", "run", "data"});
    if (doc.contains("model")) {
      const json& m = doc["model"];
      check_keys(m, "model", {"variant", "num_modes", "latent_dim", "max_duration", "shared_emission"});
      if (m.contains("variant")) c.model.variant = parse_variant(m["variant"].get<std::string>());
      read(m, "num_modes", c.model.num_modes);
      read(m, "latent_dim", c.model.latent_dim);
      read(m, "max_duration", c.model.max_duration);
      read(m, "shared_emission", c.model.shared_emission);
    }
    if (doc.contains("prior")) {
      const json& p = doc["prior"];
      check_keys(p, "prior", {"dynamics_prior", "emission_prior", "state_reg_var", "dur_reg_var", "dirichlet", "init"});
      PriorSettings& s = c.prior;
      if (p.contains("dynamics_prior"))
        read_mniw(p["dynamics_prior"], "dynamics_prior", s.dynamics_v0, s.dynamics_s0_scale, s.dynamics_n0_offset);
      if (p.contains("emission_prior"))
        read_mniw(p["emission_prior"], "emission_prior", s.emission_v0, s.emission_s0_scale, s.emission_n0_offset);
      read(p, "state_reg_var", s.state_reg_var);
      read(p, "dur_reg_var", s.dur_reg_var);
      if (p.contains("dirichlet")) {
        const json& d = p["dirichlet"];
        check_keys(d, "dirichlet", {"pi0", "trans", "duration"});
        read(d, "pi0", s.pi0_alpha);
        read(d, "trans", s.trans_alpha);
        read(d, "duration", s.dur_alpha);
      }
      if (p.contains("init")) {
        const json& i = p["init"];
        check_keys(i, "init", {"mean_scale", "cov_scale"});
        read(i, "mean_scale", s.init_mean_scale);
        read(i, "cov_scale", s.init_cov_scale);
      }
    }
    if (doc.contains("run")) {
      const json& r = doc["run"];
      check_keys(r, "run", {"iterations", "burn_in", "chains", "seed", "init", "checkpoint_every", "estimate"});
      read(r, "iterations", c.run.iterations);
      read(r, "burn_in", c.run.burn_in);
      read(r, "chains", c.run.chains);
      if (r.contains("seed")) c.run.seed = r["seed"].get<std::uint64_t>();
      if (r.contains("init")) {
        const auto s = r["init"].get<std::string>();
        if (s == "I") c.run.init = InitScheme::kInitI;
        else if (s == "II") c.run.init = InitScheme::kInitII;
        else throw ConfigError("run.init must be \"I\" or \"II\"");
      }
      read(r, "checkpoint_every", c.run.checkpoint_every);
      if (r.contains("estimate")) {
        const auto s = r["estimate"].get<std::string>();
        if (s == "final") c.run.majority_vote = false;
        else if (s == "majority") c.run.majority_vote = true;
        else throw ConfigError("run.estimate must be \"final\" or \"majority\"");
      }
    }
    if (doc.contains("data")) {
      const json& d = doc["data"];
      check_keys(d, "data", {"generator", "csv", "splits", "fraction", "standardize"});
      if (d.contains("generator") && d.contains("csv"))
        throw ConfigError("data block must name either a generator or a csv source, not both");
      if (d.contains("generator")) {
        const json& g = d["generator"];
        check_keys(g, "generator", {"runs", "length", "obs_dim", "noise_scale", "dynamics_noise"});
        read(g, "runs", c.data.generator.runs);
        read(g, "length", c.data.generator.length);
        read(g, "obs_dim", c.data.generator.obs_dim);
        read(g, "noise_scale", c.data.generator.noise_scale);
        read(g, "dynamics_noise", c.data.generator.dynamics_noise);
      }
      if (d.contains("csv")) {
        const json& s = d["csv"];
        check_keys(s, "csv", {"path", "id_column", "label_column", "feature_columns", "schema"});
        c.data.generate = false;
        read(s, "path", c.data.csv_path);
        read(s, "id_column", c.data.csv.id_column);
        read(s, "label_column", c.data.csv.label_column);
        read(s, "feature_columns", c.data.csv.feature_columns);
        if (s.contains("schema")) {
          const auto schema = s["schema"].get<std::string>();
          if (schema == "bee") c.data.bee = true;
          else if (schema != "plain") throw ConfigError("csv.schema must be \"plain\" or \"bee\"");
        }
      }
      read(d, "splits", c.data.splits);
      if (!c.data.generate && !d.contains("splits")) c.data.splits = 0;
      read(d, "fraction", c.data.fraction);
      read(d, "standardize", c.data.standardize);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config has a value of the wrong type: ") + e.what());
  }

  if (c.run.iterations < 0) throw ConfigError("run.iterations must be non-negative");
  if (c.run.chains < 1) throw ConfigError("run.chains must be positive");
  if (!(c.run.burn_in >= 0.0 && c.run.burn_in < 1.0)) throw ConfigError("run.burn_in must lie in [0, 1)");
  if (c.run.checkpoint_every < 0) throw ConfigError("run.checkpoint_every must be non-negative");
  if (c.model.num_modes < 1 || c.model.latent_dim < 1 || c.model.max_duration < 1)
    throw ConfigError("model sizes must be positive");
  if (c.data.splits < 0) throw ConfigError("data.splits must be non-negative");
  if (!(c.data.fraction > 0.0 && c.data.fraction <= 1.0)) throw ConfigError("data.fraction must lie in (0, 1]");
  c.prior.validate();
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

ModelConfig model_config(const RunConfig& config, int obs_dim) {
  ModelConfig m = ModelConfig::from_variant(config.model.variant, config.model.num_modes,
                                            config.model.latent_dim, obs_dim, config.model.max_duration);
  m.shared_emission = config.model.shared_emission;
  m.validate();
  return m;
}

}  // namespace redslds::cli
