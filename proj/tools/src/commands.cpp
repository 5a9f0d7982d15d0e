#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <redslds/arhmm.hpp>
#include <redslds/discrete_fb.hpp>
#include <redslds/errors.hpp>
#include <redslds/serialization.hpp>

#include "redslds_cli/cli.hpp"

namespace redslds::cli {
namespace fs = std::filesystem;
namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw DataError("failed writing '" + path.string() + "'");
  }
  fs::rename(tmp, path);
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory '" + dir.string() + "': " + ec.message());
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

fs::path manifest_path(const fs::path& csv) {
  fs::path p = csv;
  p.replace_extension(".manifest.json");
  return p;
}

Dataset load_dataset(const RunConfig& config, const std::string& path) {
  Dataset ds = config.data.bee ? load_bee_csv(path, config.data.csv.id_column, config.data.csv.label_column)
                               : load_csv(path, config.data.csv);
  const fs::path mp = manifest_path(path);
  if (fs::exists(mp)) ds.manifest = manifest_from_json(read_file(mp));
  if (config.data.standardize && !ds.manifest.standardized) ds = standardize(ds);
  return ds;
}

std::string diagnostics_csv(const Diagnostics& d, int modes) {
  std::string out = "iteration,joint_log_density,evidence_proxy,jitter_events";
  for (int k = 0; k < modes; ++k) out += ",occupancy_" + std::to_string(k);
  out += '\n';
  for (std::size_t i = 0; i < d.size(); ++i) {
    out += std::to_string(i + 1) + ',' + fmt(d.joint_log_density[i]) + ',' + fmt(d.evidence_proxy[i]) + ',' +
           std::to_string(d.jitter_events[i]);
    for (auto c : d.occupancy[i]) out += ',' + std::to_string(c);
    out += '\n';
  }
  return out;
}

std::string segmentation_csv(const Dataset& ds, const ChainState& state) {
  std::string out = "seq,t,s,d\n";
  for (std::size_t i = 0; i < ds.ids.size(); ++i) {
    const auto& traj = state.trajectories[i];
    for (std::size_t t = 0; t < traj.size(); ++t)
      out += ds.ids[i] + ',' + std::to_string(t) + ',' + std::to_string(traj.s[t]) + ',' +
             std::to_string(traj.d[t]) + '\n';
  }
  return out;
}

double evidence_at(const ChainState& state, const std::vector<Matrix>& data, const ModelConfig& config) {
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i)
    total += forward_filter(state.params, config, data[i], state.trajectories[i].x).log_evidence();
  return total;
}

std::vector<std::string> header_of(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::string line;
  std::getline(in, line);
  std::vector<std::string> cols;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    cols.push_back(cell);
  }
  return cols;
}

}  // namespace

Dataset build_dataset(const RunConfig& config) {
  const std::uint64_t seed = config.seed();
  Dataset ds;
  if (config.data.generate) {
    Rng gen(seed, 0);
    ds = generate_nascar(config.data.generator, gen);
    ds.manifest.seed = seed;
  } else {
    if (config.data.csv_path.empty()) throw ConfigError("data.csv.path is required for a csv source");
    ds = config.data.bee ? load_bee_csv(config.data.csv_path, config.data.csv.id_column, config.data.csv.label_column)
                         : load_csv(config.data.csv_path, config.data.csv);
    ds.manifest.seed = seed;
  }
  if (config.data.splits > 0) {
    Rng split(seed, 1);
    ds = chunk_and_sample(ds, config.data.splits, config.data.fraction, split);
  }
  if (config.data.standardize) ds = standardize(ds);
  return ds;
}

void cmd_generate(const RunConfig& config, const std::string& out_dir) {
  const Dataset ds = build_dataset(config);
  make_dir(out_dir);
  write_csv(ds, (fs::path(out_dir) / "data.csv").string());
  write_file(fs::path(out_dir) / "data.manifest.json", manifest_to_json(ds.manifest) + "\n");
}

FitOutputs cmd_fit(const RunConfig& config, const std::string& data_path, const std::string& out_dir,
                   bool resume) {
  const std::uint64_t seed = config.seed();
  const Dataset ds = data_path.empty() ? build_dataset(config) : load_dataset(config, data_path);
  ds.validate();
  if (ds.sequences.empty()) throw DataError("dataset has no sequences");
  const auto obs_dim = static_cast<int>(ds.sequences[0].cols());
  const ModelConfig mc = model_config(config, obs_dim);
  const Matrix obs_cov = pooled_covariance(ds.sequences);
  const Matrix latent_cov = pca_project(ds.sequences, mc.latent_dim).projected_cov;
  const Priors priors = make_priors(config.prior, mc, obs_cov, latent_cov);

  FitOptions fit_opts;
  fit_opts.iterations = config.run.iterations;
  fit_opts.burn_in = config.run.burn_in;
  fit_opts.checkpoint_every = config.run.checkpoint_every;
  InitOptions init;
  init.scheme = config.run.init;

  make_dir(out_dir);
  std::mutex io;
  const int chains = config.run.chains;
  FitOutputs outputs;
  outputs.chains.resize(chains);
  std::vector<std::exception_ptr> errors(chains);

  const auto run_chain = [&](int c) {
    const fs::path dir = fs::path(out_dir) / ("chain" + std::to_string(c));
    const fs::path cp_path = dir / "checkpoint.json";
    {
      std::lock_guard lock(io);
      make_dir(dir);
    }
    const auto save = [&](const FitResult& r) {
      const std::string text = checkpoint_to_json({mc, r});
      std::lock_guard lock(io);
      write_file(cp_path, text);
    };
    FitResult& result = outputs.chains[c];
    bool resumed = false;
    if (resume && fs::exists(cp_path)) {
      Checkpoint cp = checkpoint_from_json(read_file(cp_path));
      if (config_to_json(cp.config) != config_to_json(mc))
        throw ConfigError("checkpoint '" + cp_path.string() + "' was written for a different model");
      result = std::move(cp.result);
      resumed = true;
    }
    if (!resumed) result.state = initialize(ds.sequences, mc, priors, init, Rng(seed, static_cast<std::uint64_t>(c) + 2));
    continue_fit(result, ds.sequences, mc, priors, fit_opts, save);
    save(result);
    const std::string diag = diagnostics_csv(result.diagnostics, mc.num_modes);
    const std::string seg = segmentation_csv(ds, result.state);
    std::lock_guard lock(io);
    write_file(dir / "diagnostics.csv", diag);
    write_file(dir / "segmentation.csv", seg);
  };

  std::vector<std::thread> workers;
  for (int c = 0; c < chains; ++c)
    workers.emplace_back([&, c] {
      try {
        run_chain(c);
      } catch (...) {
        errors[c] = std::current_exception();
      }
    });
  for (auto& w : workers) w.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<ChainSummary> summaries;
  for (const FitResult& r : outputs.chains) {
    ChainSummary s;
    s.joint_log_density = total_joint_log_density(r.state, ds.sequences, mc);
    s.evidence_proxy = evidence_at(r.state, ds.sequences, mc);
    if (ds.has_labels()) {
      std::vector<std::vector<int>> pred;
      if (config.run.majority_vote) pred = majority_vote(r);
      else
        for (const auto& t : r.state.trajectories) pred.push_back(t.s);
      s.scores = score(pred, ds.labels);
    }
    summaries.push_back(std::move(s));
  }
  outputs.report = make_report(summaries);
  write_file(fs::path(out_dir) / "report.json", outputs.report.to_json() + "\n");
  write_file(fs::path(out_dir) / "report.txt", outputs.report.to_text());
  return outputs;
}

SegmentationScore cmd_evaluate(const std::string& pred_path, const std::string& truth_path,
                               const std::string& out_dir) {
  const auto header = header_of(pred_path);
  CsvSchema pred_schema;
  pred_schema.label_column = std::find(header.begin(), header.end(), "s") != header.end() ? "s" : "label";
  pred_schema.feature_columns = {};
  for (const auto& col : header)
    if (col != pred_schema.id_column && col != pred_schema.label_column) {
      pred_schema.feature_columns = {col};
      break;
    }
  const Dataset pred = load_csv(pred_path, pred_schema);
  const Dataset truth = load_csv(truth_path);
  if (!pred.has_labels()) throw DataError("'" + pred_path + "' has no 's' or 'label' column");
  if (!truth.has_labels()) throw DataError("'" + truth_path + "' has no label column");
  std::vector<std::vector<int>> p, t;
  for (std::size_t i = 0; i < truth.ids.size(); ++i) {
    const auto it = std::find(pred.ids.begin(), pred.ids.end(), truth.ids[i]);
    if (it == pred.ids.end()) throw DataError("sequence '" + truth.ids[i] + "' missing from predictions");
    const auto& labels = pred.labels[static_cast<std::size_t>(it - pred.ids.begin())];
    if (labels.size() != truth.labels[i].size())
      throw DataError("sequence '" + truth.ids[i] + "': prediction has " + std::to_string(labels.size()) +
                      " steps, truth has " + std::to_string(truth.labels[i].size()));
    p.push_back(labels);
    t.push_back(truth.labels[i]);
  }
  const SegmentationScore s = score(p, t);
  if (!out_dir.empty()) {
    make_dir(out_dir);
    write_file(fs::path(out_dir) / "score.json", score_to_json(s) + "\n");
  }
  return s;
}

int run(int argc, char** argv) {
  CLI::App app{"Recurrent explicit-duration switching linear dynamical systems"};
  app.require_subcommand(1);
  std::string config_path, data_path, out_dir, pred_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> chains, iters;
  bool resume = false;

  auto* gen = app.add_subcommand("generate", "Generate a synthetic dataset");
  gen->add_option("--config", config_path, "Run configuration (JSON)")->required();
  gen->add_option("--out", out_dir, "Output directory")->required();
  gen->add_option("--seed", seed, "Override run.seed");

  auto* fitc = app.add_subcommand("fit", "Fit a model with Gibbs sampling");
  fitc->add_option("--config", config_path, "Run configuration (JSON)")->required();
  fitc->add_option("--data", data_path, "Dataset CSV; generated from the config when omitted");
  fitc->add_option("--out", out_dir, "Output directory")->required();
  fitc->add_option("--seed", seed, "Override run.seed");
  fitc->add_option("--chains", chains, "Override run.chains");
  fitc->add_option("--iters", iters, "Override run.iterations");
  fitc->add_flag("--resume", resume, "Continue chains from their checkpoints");

  auto* eval = app.add_subcommand("evaluate", "Score a segmentation against labels");
  eval->add_option("--pred", pred_path, "Prediction CSV (seq, s or label)")->required();
  eval->add_option("--data", data_path, "Labeled dataset CSV")->required();
  eval->add_option("--out", out_dir, "Output directory for score.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    const auto load = [&] {
      RunConfig c = load_run_config(config_path);
      if (seed) c.run.seed = *seed;
      if (chains) c.run.chains = *chains;
      if (iters) c.run.iterations = *iters;
      if (c.run.chains < 1) throw ConfigError("--chains must be positive");
      if (c.run.iterations < 0) throw ConfigError("--iters must be non-negative");
      return c;
    };
    if (*gen) {
      cmd_generate(load(), out_dir);
    } else if (*fitc) {
      const FitOutputs out = cmd_fit(load(), data_path, out_dir, resume);
      std::cout << out.report.to_text();
    } else if (*eval) {
      std::cout << score_to_json(cmd_evaluate(pred_path, data_path, out_dir)) << '\n';
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kNumericalError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kOtherError;
  }
  return kOk;
}

}  // namespace redslds::cli
