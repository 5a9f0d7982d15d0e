#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "redslds/kalman_info.hpp"
#include "redslds/model.hpp"
#include "redslds/rand_dist.hpp"

namespace redslds {

/// Prior hyperparameters. MNIW blocks act on augmented coefficients
/// (A, a) of shape M x (M + 1) and (C, c) of shape N x (M + 1).
struct Priors {
  MNIWParams dynamics;
  MNIWParams emission;
  Vector init_mean;      // prior mean of mu_init
  Matrix init_mean_cov;  // prior covariance of mu_init
  Matrix init_cov_scale; // inverse-Wishart scale of sigma_init
  double init_cov_dof = 0.0;
  double pi0_alpha = 1.0;
  double trans_alpha = 1.0;
  double dur_alpha = 1.0;
  Matrix state_reg_cov;  // (M + 1) x (M + 1), per stick row of (R^S, r^S)
  Matrix dur_reg_cov;    // (M + 1) x (M + 1), per stick row of (R^D, r^D)

  void validate(const ModelConfig& config) const;
};

/// Scalar knobs from which Priors are built.
struct PriorSettings {
  double dynamics_v0 = 1.0;             // V0 = dynamics_v0 * I
  double emission_v0 = 1.0;
  double dynamics_s0_scale = 0.75 * 0.75;   // times the latent covariance
  double emission_s0_scale = 0.075 * 0.75;  // times the observation covariance
  double dynamics_n0_offset = 2.0;      // n0 = M + offset
  double emission_n0_offset = 2.0;      // n0 = N + offset
  double state_reg_var = 1.0;           // Sigma^{RS}_0 = state_reg_var * I
  double dur_reg_var = 1.0;             // Sigma^{RD}_0 = dur_reg_var * I
  double pi0_alpha = 1.0;
  double trans_alpha = 1.0;
  double dur_alpha = 1.0;
  double init_mean_scale = 1.0;         // cov of mu_init = scale * latent covariance
  double init_cov_scale = 1.0;          // IW scale = scale * latent covariance

  void validate() const;
};

/// `obs_cov` is the empirical observation covariance and `latent_cov` that of
/// the PCA projection.
Priors make_priors(const PriorSettings& settings, const ModelConfig& config, const Matrix& obs_cov,
                   const Matrix& latent_cov);

ModelParams sample_params_from_prior(const Priors& priors, const ModelConfig& config, Rng& rng);

struct ChainState {
  ModelParams params;
  std::vector<LatentTrajectory> trajectories;
  std::vector<PGSequence> pg;
  std::int64_t iteration = 0;
  Rng rng;

  bool operator==(const ChainState& other) const;
};

struct Diagnostics {
  std::vector<double> joint_log_density;
  std::vector<double> evidence_proxy;
  std::vector<std::vector<std::int64_t>> occupancy;  // per iteration, K counts
  std::vector<std::int64_t> jitter_events;

  std::size_t size() const { return joint_log_density.size(); }
};

/// Blocks updated by a sweep.
struct SweepMask {
  bool discrete = true;    // z
  bool continuous = true;  // x
  bool params = true;      // theta
};

/// Polya-gamma auxiliaries for every stick draw of a trajectory.
PGSequence sample_pg_sequence(const ModelParams& params, const ModelConfig& config,
                              const LatentTrajectory& traj, Rng& rng);

void update_dynamics(ModelParams& params, const std::vector<LatentTrajectory>& trajs,
                     const Priors& priors, Rng& rng);
void update_emissions(ModelParams& params, const ModelConfig& config,
                      const std::vector<LatentTrajectory>& trajs, const std::vector<Matrix>& data,
                      const Priors& priors, Rng& rng);
void update_initial(ModelParams& params, const ModelConfig& config,
                    const std::vector<LatentTrajectory>& trajs, const std::vector<PGSequence>& pg,
                    const Priors& priors, Rng& rng);
void update_transition_matrix(ModelParams& params, const ModelConfig& config,
                              const std::vector<LatentTrajectory>& trajs, const Priors& priors,
                              Rng& rng);
void update_state_regression(ModelParams& params, const ModelConfig& config,
                             const std::vector<LatentTrajectory>& trajs,
                             const std::vector<PGSequence>& pg, const Priors& priors, Rng& rng);
void update_duration_model(ModelParams& params, const ModelConfig& config,
                           const std::vector<LatentTrajectory>& trajs,
                           const std::vector<PGSequence>& pg, const Priors& priors, Rng& rng);

/// All parameter blocks given (z, x, omega).
void update_params(ChainState& state, const std::vector<Matrix>& data, const ModelConfig& config,
                   const Priors& priors);

/// Per-sweep quantities recorded in Diagnostics.
struct SweepInfo {
  double evidence_proxy = 0.0;
};

/// One Gibbs sweep in place: per sequence z, fresh omega, x, omega; then theta.
SweepInfo sweep(ChainState& state, const std::vector<Matrix>& data, const ModelConfig& config,
                const Priors& priors, const SweepMask& mask = {});

double total_joint_log_density(const ChainState& state, const std::vector<Matrix>& data,
                               const ModelConfig& config);
std::vector<std::int64_t> occupancy(const ChainState& state, const ModelConfig& config);

enum class InitScheme { kInitI, kInitII };

struct InitOptions {
  InitScheme scheme = InitScheme::kInitI;
  int arhmm_restarts = 5;
  int frozen_sweeps = 5;
};

/// PCA + ARHMM initialization followed by a parameter draw; Init I adds
/// parameter-only sweeps with (z, x) frozen.
ChainState initialize(const std::vector<Matrix>& data, const ModelConfig& config,
                      const Priors& priors, const InitOptions& options, Rng rng);

struct FitOptions {
  int iterations = 100;     // total sweeps after initialization
  double burn_in = 0.5;     // fraction of iterations discarded for estimates
  int snapshot_every = 0;   // post-burn-in ChainState copies; 0 keeps none
  int checkpoint_every = 0; // 0 disables the periodic callback
};

struct FitResult {
  ChainState state;                   // current (final) state
  std::vector<ChainState> snapshots;
  Diagnostics diagnostics;
  std::vector<Eigen::MatrixXi> votes; // per sequence, T x K post-burn-in state counts
  std::int64_t kept = 0;              // number of samples counted in votes
};

/// Majority vote over the post-burn-in samples, ties to the lower label.
std::vector<std::vector<int>> majority_vote(const FitResult& result);

using CheckpointFn = std::function<void(const FitResult&)>;

/// Runs sweeps until state.iteration reaches options.iterations, appending to
/// `result`. The callback fires every checkpoint_every sweeps and, with the
/// partial chain, before an exception propagates.
void continue_fit(FitResult& result, const std::vector<Matrix>& data, const ModelConfig& config,
                  const Priors& priors, const FitOptions& options,
                  const CheckpointFn& checkpoint = {});

FitResult fit(const std::vector<Matrix>& data, const ModelConfig& config, const Priors& priors,
              const FitOptions& options, const InitOptions& init, Rng rng,
              const CheckpointFn& checkpoint = {});

}  // namespace redslds
