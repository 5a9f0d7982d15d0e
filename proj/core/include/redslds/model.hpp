#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "redslds/linalg.hpp"
#include "redslds/rng.hpp"
#include "redslds/stick_break.hpp"

namespace redslds {

enum class Variant { kSlds, kRslds, kEdslds, kRedslds };

Variant parse_variant(std::string_view name);
std::string_view variant_name(Variant v);

/// Structural configuration. States are 0-based (0..K-1); durations are
/// 1-based counters (1..D) where D = duration_support().
struct ModelConfig {
  int num_modes = 1;     // K
  int latent_dim = 1;    // M
  int obs_dim = 1;       // N
  int max_duration = 50; // D_max
  bool recurrent_state = false;
  bool explicit_duration = false;
  bool recurrent_duration = false;
  bool shared_emission = false;

  static ModelConfig from_variant(Variant v, int num_modes, int latent_dim, int obs_dim,
                                  int max_duration = 50);

  // Support of the duration counter; 1 when durations are not modeled.
  int duration_support() const { return explicit_duration ? max_duration : 1; }
  std::optional<Variant> variant() const;
  void validate() const;
};

struct ModeParams {
  Matrix a_mat;  // M x M
  Vector a_bias; // M
  Matrix q_cov;  // M x M
  Matrix c_mat;  // N x M
  Vector c_bias; // N
  Matrix s_cov;  // N x N
};

struct InitParams {
  Vector pi0;                      // K
  std::vector<Vector> mu_init;     // K x M
  std::vector<Matrix> sigma_init;  // K x (M x M)
};

/// Full parameter set. Only the fields demanded by the variant are used:
/// `trans` without recurrent states, `state_reg` with them, `dur_reg` for
/// recurrent durations and `dur_table` for table durations.
struct ModelParams {
  std::vector<ModeParams> modes;
  InitParams init;
  Matrix trans;                          // K x K
  std::vector<StickRegression> state_reg;// K regressions over K categories
  std::vector<StickRegression> dur_reg;  // K regressions over D categories
  Matrix dur_table;                      // K x D

  // Shape-correct parameters (identity covariances, uniform laws, zero weights).
  static ModelParams allocate(const ModelConfig& config);
  void validate(const ModelConfig& config) const;
};

struct LatentTrajectory {
  std::vector<int> s;  // 0-based modes
  std::vector<int> d;  // durations in 1..D
  Matrix x;            // T x M

  std::size_t size() const { return s.size(); }
};

/// Countdown law: d_{t-1} > 1 forces s_t = s_{t-1} and d_t = d_{t-1} - 1.
bool satisfies_countdown(const std::vector<int>& s, const std::vector<int>& d, int num_modes,
                         int duration_support);
bool satisfies_countdown(const LatentTrajectory& traj, const ModelConfig& config);

/// Cached factorizations of the per-mode covariances.
struct ModeNoise {
  GaussianNoise dynamics;
  GaussianNoise emission;
  GaussianNoise init;
};
std::vector<ModeNoise> build_noise_cache(const ModelParams& params);

/// log p(s_t | s_{t-1}, d_{t-1} = 1, x_{t-1}) as a K x K matrix (row = s_{t-1}).
Matrix log_state_kernel(const ModelParams& params, const ModelConfig& config, const Vector& x_prev);
/// log p(d_t | s_t, d_{t-1} = 1, x_{t-1}) as K x D (row = s_t).
Matrix log_duration_kernel(const ModelParams& params, const ModelConfig& config,
                           const Vector& x_prev);
/// log p(d_1 | s_1) as K x D; the recurrent law is evaluated at mu_init.
Matrix log_initial_duration(const ModelParams& params, const ModelConfig& config);

/// Distribution over the next (state, duration) pair as a K x D probability
/// matrix, entry (k, j) for state k and duration j + 1.
Matrix transition_kernel(int s_prev, int d_prev, const Vector& x_prev, const ModelParams& params,
                         const ModelConfig& config);

struct Simulation {
  Matrix y;  // T x N
  LatentTrajectory traj;
};

Simulation simulate(const ModelParams& params, const ModelConfig& config, int length, Rng& rng);

/// log p(y, x, s, d); -inf when the countdown law or ranges are violated.
double joint_log_density(const ModelParams& params, const ModelConfig& config, const Matrix& y,
                         const LatentTrajectory& traj);

}  // namespace redslds
