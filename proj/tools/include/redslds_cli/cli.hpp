#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <redslds/data.hpp>
#include <redslds/gibbs.hpp>
#include <redslds/metrics.hpp>
#include <redslds/model.hpp>

namespace redslds::cli {

enum ExitCode { kOk = 0, kOtherError = 1, kConfigError = 2, kDataError = 3, kNumericalError = 4 };

struct ModelBlock {
  Variant variant = Variant::kRedslds;
  int num_modes = 4;
  int latent_dim = 2;
  int max_duration = 100;
  bool shared_emission = false;
};

struct RunBlock {
  int iterations = 1000;
  double burn_in = 0.5;
  int chains = 1;
  std::optional<std::uint64_t> seed;
  InitScheme init = InitScheme::kInitI;
  int checkpoint_every = 100;
  bool majority_vote = false;
};

struct DataBlock {
  bool generate = true;
  NascarOptions generator;
  std::string csv_path;
  CsvSchema csv;
  bool bee = false;
  int splits = 5;
  double fraction = 0.8;
  bool standardize = false;
};

struct RunConfig {
  ModelBlock model;
  PriorSettings prior;
  RunBlock run;
  DataBlock data;

  std::uint64_t seed() const;  // throws ConfigError when absent
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

ModelConfig model_config(const RunConfig& config, int obs_dim);

/// Dataset described by the data block (generated, chunked, sampled).
Dataset build_dataset(const RunConfig& config);

/// Writes data.csv and data.manifest.json under out_dir.
void cmd_generate(const RunConfig& config, const std::string& out_dir);

struct FitOutputs {
  FitReport report;
  std::vector<FitResult> chains;
};

/// Fits every chain and writes, under out_dir: report.json, report.txt and
/// per chain chain<i>/{checkpoint.json, diagnostics.csv, segmentation.csv}.
/// With `resume`, chains continue from their checkpoints when present.
FitOutputs cmd_fit(const RunConfig& config, const std::string& data_path, const std::string& out_dir,
                   bool resume = false);

/// Scores a prediction CSV (columns seq and s, or label) against a labeled
/// dataset CSV, writing score.json under out_dir when given.
SegmentationScore cmd_evaluate(const std::string& pred_path, const std::string& truth_path,
                               const std::string& out_dir = {});

/// Full command-line entry point; returns the process exit code.
int run(int argc, char** argv);

}  // namespace redslds::cli
