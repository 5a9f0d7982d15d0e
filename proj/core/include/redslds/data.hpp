#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "redslds/linalg.hpp"
#include "redslds/rng.hpp"

namespace redslds {

/// Provenance of a dataset: enough to regenerate it from seeds or sources.
struct Manifest {
  std::string source;  // "nascar" or the CSV path
  std::string generator_version;
  std::optional<std::uint64_t> seed;
  int runs = 0;
  int length = 0;
  int obs_dim = 0;
  double noise_scale = 0.0;
  double dynamics_noise = 0.0;
  // chunk_and_sample
  int splits = 0;
  double fraction = 0.0;
  std::vector<std::pair<int, int>> chunks;  // (source sequence, chunk index) per output sequence
  int dropped_tail = 0;                     // rows dropped from the end of each source sequence
  // standardize
  bool standardized = false;
  Vector mean;
  Vector scale;
};

std::string manifest_to_json(const Manifest& manifest);
Manifest manifest_from_json(const std::string& text);

struct Dataset {
  std::vector<std::string> ids;
  std::vector<Matrix> sequences;        // T_i x N
  std::vector<std::vector<int>> labels; // empty, or one per sequence (0-based)
  Manifest manifest;

  bool has_labels() const { return !labels.empty(); }
  std::size_t total_points() const;
  void validate() const;
};

struct NascarOptions {
  int runs = 10;
  int length = 12000;
  int obs_dim = 10;
  double noise_scale = 0.1;       // emission noise standard deviation
  double dynamics_noise = 1e-2;   // dynamics noise standard deviation
};

inline constexpr char kNascarVersion[] = "nascar-1";
/// Every latent coordinate of the generator stays below this bound.
inline constexpr double kNascarLatentBound = 20.0;

/// Four-mode oval: right turn (0), left turn (1), top straight (2), bottom
/// straight (3) in two latent dimensions, projected to obs_dim with a random
/// matrix shared by all runs.
Dataset generate_nascar(const NascarOptions& options, Rng& rng);
Dataset generate_nascar(int runs, int length, int obs_dim, double noise_scale, Rng& rng);

/// Same, also returning the latent paths (one T x 2 matrix per run).
Dataset generate_nascar(const NascarOptions& options, Rng& rng, std::vector<Matrix>* latents);

/// Cuts every sequence into `splits` equal chunks (tail remainder dropped)
/// and keeps round(fraction * splits) of them, drawn without replacement.
Dataset chunk_and_sample(const Dataset& dataset, int splits, double fraction, Rng& rng);

struct CsvSchema {
  std::string id_column = "seq";
  std::string label_column = "label";     // used when present in the header
  std::vector<std::string> feature_columns; // empty: every other column
};

Dataset load_csv(const std::string& path, const CsvSchema& schema = {});
void write_csv(const Dataset& dataset, const std::string& path);

/// Builds (cos theta, sin theta, x, y) features from raw x, y, theta columns.
Matrix bee_features(const Vector& x, const Vector& y, const Vector& theta);
Dataset load_bee_csv(const std::string& path, const std::string& id_column = "seq",
                     const std::string& label_column = "label");

/// Pooled zero-mean unit-variance features; constants accumulate in the manifest.
Dataset standardize(const Dataset& dataset);
Dataset inverse_standardize(const Dataset& dataset);

/// Pooled empirical covariance (divisor = number of points).
Matrix pooled_covariance(const std::vector<Matrix>& sequences);

}  // namespace redslds
