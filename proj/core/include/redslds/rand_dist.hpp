#pragma once

#include <cstddef>
#include <span>
#include <utility>

#include "redslds/linalg.hpp"
#include "redslds/rng.hpp"

namespace redslds {

/// Parameters of a Polya-gamma law PG(b, c). b = 0 is the point mass at 0.
struct PGParams {
  int b = 1;
  double c = 0.0;
};

/// Exact PG(b, c) draw for integer b: sum of b independent PG(1, c) draws,
/// each by the alternating-series accept/reject sampler.
double sample_pg(const PGParams& params, Rng& rng);

/// E[PG(b, c)] = b / (2c) * tanh(c / 2), with the c -> 0 limit b / 4.
double pg_mean(int b, double c);

/// Gaussian in information form: precision `lambda`, information mean
/// `theta` = lambda * mean.
struct InfoGaussian {
  Vector theta;
  Matrix lambda;
};

struct MomentGaussian {
  Vector mean;
  Matrix cov;
};

MomentGaussian info_to_moment(const InfoGaussian& msg);
Vector sample_info_gaussian(const InfoGaussian& msg, Rng& rng);
Vector sample_mvn(const Vector& mean, const Matrix& cov, Rng& rng);
Vector sample_standard_normal(Eigen::Index n, Rng& rng);

/// Matrix-normal-inverse-Wishart hyperparameters for a coefficient matrix of
/// shape rows x cols: coef | cov ~ MN(m0, cov, v0), cov ~ IW(s0, n0).
struct MNIWParams {
  Matrix m0;
  Matrix v0;  // cols x cols column covariance
  Matrix s0;  // rows x rows inverse-Wishart scale
  double n0 = 0.0;

  void validate() const;
};

struct MNIWDraw {
  Matrix coef;
  Matrix cov;
};

MNIWDraw sample_mniw(const MNIWParams& params, Rng& rng);
Matrix sample_inverse_wishart(const Matrix& scale, double dof, Rng& rng);

/// Sufficient statistics of a multivariate linear regression y = coef * x + e.
struct RegressionStats {
  Matrix xx;  // sum x x'
  Matrix yx;  // sum y x'
  Matrix yy;  // sum y y'
  double count = 0.0;

  RegressionStats() = default;
  RegressionStats(Eigen::Index y_dim, Eigen::Index x_dim);
  void add(const Vector& x, const Vector& y);
  RegressionStats& operator+=(const RegressionStats& other);
};

/// Conjugate MNIW posterior given regression sufficient statistics.
MNIWParams mniw_posterior(const MNIWParams& prior, const RegressionStats& stats);

struct DirichletParams {
  Vector alpha;
};

Vector sample_dirichlet(const DirichletParams& params, Rng& rng);

std::size_t sample_categorical(std::span<const double> probs, Rng& rng);
std::size_t sample_categorical(const Vector& probs, Rng& rng);
// Samples from unnormalized log weights.
std::size_t sample_log_categorical(const Vector& log_weights, Rng& rng);

}  // namespace redslds
