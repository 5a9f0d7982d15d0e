#pragma once

#include <span>

#include "redslds/linalg.hpp"
#include "redslds/rand_dist.hpp"
#include "redslds/rng.hpp"

namespace redslds {

/// Stick-breaking logistic regression over L categories from an M-dimensional
/// regressor: logits v = weights * x + bias, one row per stick (L - 1 rows).
/// Categories are 0-based. L = 1 (no sticks) is the trivial one-category law.
struct StickRegression {
  Matrix weights;  // (L-1) x M
  Vector bias;     // L-1

  StickRegression() = default;
  StickRegression(Eigen::Index categories, Eigen::Index regressor_dim);

  Eigen::Index categories() const { return weights.rows() + 1; }
  Vector logits(const Vector& x) const { return weights * x + bias; }
};

double log_sigmoid(double z);

/// pi_SB(v): component k = sigmoid(v_k) * prod_{j<k} sigmoid(-v_j); the last
/// component is prod_k sigmoid(-v_k).
Vector pi_sb(const Vector& v);
Vector log_pi_sb(const Vector& v);
double log_pmf_sb(Eigen::Index outcome, const Vector& v);

/// kappa_k = I[outcome == k] - 0.5 * I[outcome >= k], k = 0..L-2.
Vector kappa_vec(Eigen::Index outcome, Eigen::Index categories);

/// Polya-gamma auxiliaries for one categorical outcome. omega_k is exactly 0
/// on sticks the outcome never reached (k > outcome).
struct PGAuxiliaries {
  Vector omega;
  Vector kappa;

  bool empty() const { return omega.size() == 0; }
};

PGAuxiliaries sample_pg_aux(Eigen::Index outcome, const Vector& v, Rng& rng);

/// One augmented observation of a single stick row.
struct RegressionDatum {
  Vector x;  // regressor without the bias entry
  double kappa = 0.0;
  double omega = 0.0;
};

/// Conjugate accumulation of augmented data for one weight row (R row and
/// bias jointly, regressor (x, 1)).
class RowPosterior {
 public:
  RowPosterior(const Vector& prior_mean, const Matrix& prior_cov);
  void add(const Vector& x, double kappa, double omega);
  InfoGaussian posterior() const;

 private:
  Vector theta_;
  Matrix lambda_;
};

InfoGaussian regression_row_posterior(const Vector& prior_mean, const Matrix& prior_cov,
                                      std::span<const RegressionDatum> data);

}  // namespace redslds
