#pragma once

#include <utility>
#include <vector>

#include "redslds/model.hpp"

namespace redslds {

/// Forward messages over z_t = (s_t, d_t) conditioned on (y, x). Slices are
/// stored normalized; adding back the running sum of `log_normalizers`
/// recovers log alpha_t(z_t) = log p(z_t, y_{1:t}, x_{1:t}).
struct ForwardLattice {
  std::vector<Matrix> log_alpha;   // T slices of K x D
  Vector log_normalizers;          // T
  // Kernel cache shared with the backward pass: slice t (t >= 1) is the
  // transition into time t evaluated at x_{t-1}.
  std::vector<Matrix> log_state;   // K x K
  std::vector<Matrix> log_dur;     // K x D
  Matrix log_init;                 // K x D, log pi0(k) + log Dur_1(k, d)

  double log_evidence() const { return log_normalizers.sum(); }
};

/// Per-mode log p(x_t | x_{t-1}, s_t = k) + log p(y_t | x_t, s_t = k); at
/// t = 0 the initial density replaces the dynamics term. Constant in d.
Vector local_evidence(const ModelParams& params, const std::vector<ModeNoise>& noise,
                      const Matrix& y, const Matrix& x, Eigen::Index t);
/// Convenience form returning the full K x D slice.
Matrix local_evidence(const ModelParams& params, const ModelConfig& config, const Matrix& y,
                      const Matrix& x, Eigen::Index t);

ForwardLattice forward_filter(const ModelParams& params, const ModelConfig& config,
                              const Matrix& y, const Matrix& x);

struct DiscretePath {
  std::vector<int> s;
  std::vector<int> d;
};

/// Exact joint posterior draw of z_{1:T} given the lattice.
DiscretePath backward_sample(const ForwardLattice& lattice, const ModelConfig& config, Rng& rng);

}  // namespace redslds
