#pragma once

#include <vector>

#include "redslds/linalg.hpp"
#include "redslds/rng.hpp"

namespace redslds {

/// Principal-component projection fitted on pooled, centered observations.
struct PcaResult {
  Vector mean;                   // N
  Matrix components;             // N x M, columns ordered by decreasing variance
  Vector variances;              // M
  std::vector<Matrix> projected; // per sequence, T_i x M
  Matrix projected_cov;          // M x M empirical covariance of the projection
};

PcaResult pca_project(const std::vector<Matrix>& sequences, int latent_dim);

struct ArhmmOptions {
  int max_iter = 200;
  double tol = 1e-6;       // relative log-likelihood change
  double cov_floor = 1e-8; // minimum eigenvalue of emission covariances
  std::vector<std::vector<int>> initial_states;  // replaces the k-means start when set
};

/// K-mode HMM with AR(1) Gaussian emissions x_t | x_{t-1}, s_t ~
/// N(W_k (x_{t-1}, 1), Sigma_k); the first step of each sequence is
/// conditioned on.
struct ArhmmFit {
  std::vector<std::vector<int>> states;  // Viterbi path per sequence
  double log_likelihood = 0.0;
  std::vector<double> trace;             // log-likelihood per EM iteration
  std::vector<Matrix> coef;              // M x (M + 1)
  std::vector<Matrix> cov;
  Vector initial;
  Matrix trans;
};

/// One EM run; without initial_states the start is a k-means++ partition
/// of the lagged pairs (x_{t-1}, x_t).
ArhmmFit fit_arhmm_once(const std::vector<Matrix>& series, int num_modes, Rng& rng,
                        const ArhmmOptions& options = {});
/// Best of `restarts` runs by final log-likelihood.
ArhmmFit fit_arhmm(const std::vector<Matrix>& series, int num_modes, int restarts, Rng& rng,
                   const ArhmmOptions& options = {});

/// Durations counting down to the end of each run of equal states; runs
/// longer than max_duration are cut into consecutive segments.
std::vector<int> durations_from_runs(const std::vector<int>& s, int max_duration);

}  // namespace redslds
