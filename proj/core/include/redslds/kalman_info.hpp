#pragma once

#include <vector>

#include "redslds/model.hpp"
#include "redslds/stick_break.hpp"

namespace redslds {

/// Polya-gamma auxiliaries of one sequence. `state[t]` (t >= 1) belongs to
/// the state draw at t (outcome s_t, weights of s_{t-1}, regressor x_{t-1});
/// `duration[t]` (t >= 1) to the duration draw at t (outcome d_t, weights of
/// s_t, regressor x_{t-1}); `duration[0]` to the initial duration, whose
/// regressor is mu_init. Entries are empty where no draw happened
/// (d_{t-1} > 1) or the variant has no such regression.
struct PGSequence {
  std::vector<PGAuxiliaries> state;
  std::vector<PGAuxiliaries> duration;

  static PGSequence empty(std::size_t length);
};

/// Backward information-filter messages: theta_b[t], lambda_b[t] summarize
/// every potential on x_t coming from y_t and from times after t.
struct BackwardMessages {
  std::vector<Vector> theta_b;
  std::vector<Matrix> lambda_b;
  // Prediction one step before the first observation; not consumed because
  // x_1 carries an explicit initial density.
  Vector theta_prior;
  Matrix lambda_prior;
};

BackwardMessages backward_info_filter(const ModelParams& params, const ModelConfig& config,
                                      const Matrix& y, const std::vector<int>& s,
                                      const std::vector<int>& d, const PGSequence& pg);

/// Forward pass drawing x_{1:T} from p(x | y, s, d, omega, theta).
Matrix sample_pseudo_obs(const BackwardMessages& messages, const ModelParams& params,
                         const std::vector<int>& s, Rng& rng);

struct GaussianMarginals {
  std::vector<Vector> mean;
  std::vector<Matrix> cov;
};

/// Per-time posterior marginals implied by the messages and the forward
/// conditionals used by sample_pseudo_obs.
GaussianMarginals smoothed_marginals(const BackwardMessages& messages, const ModelParams& params,
                                     const std::vector<int>& s);

/// Dense joint Gaussian over the stacked x_{1:T} (length T*M), built by
/// summing every quadratic potential directly. Test oracle; T*M <= 64.
struct DenseGaussian {
  Matrix precision;
  Vector info;
  Vector mean;
  Matrix cov;
};

DenseGaussian dense_gaussian_oracle(const ModelParams& params, const ModelConfig& config,
                                    const Matrix& y, const std::vector<int>& s,
                                    const std::vector<int>& d, const PGSequence& pg);

}  // namespace redslds
