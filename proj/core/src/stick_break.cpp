#include "redslds/stick_break.hpp"

#include <cmath>
#include <stdexcept>

#include "redslds/errors.hpp"

namespace redslds {

StickRegression::StickRegression(Eigen::Index categories, Eigen::Index regressor_dim)
    : weights(Matrix::Zero(std::max<Eigen::Index>(categories - 1, 0), regressor_dim)),
      bias(Vector::Zero(std::max<Eigen::Index>(categories - 1, 0))) {}

double log_sigmoid(double z) { return -std::log1p(std::exp(-std::abs(z))) - std::max(-z, 0.0); }

Vector log_pi_sb(const Vector& v) {
  const Eigen::Index sticks = v.size();
  Vector out(sticks + 1);
  double remaining = 0.0;  // log prod_{j<k} sigmoid(-v_j)
  for (Eigen::Index k = 0; k < sticks; ++k) {
    out(k) = remaining + log_sigmoid(v(k));
    remaining += log_sigmoid(-v(k));
  }
  out(sticks) = remaining;
  return out;
}

Vector pi_sb(const Vector& v) {
  const Eigen::Index sticks = v.size();
  Vector out(sticks + 1);
  double remaining = 1.0;
  for (Eigen::Index k = 0; k < sticks; ++k) {
    const double take = 1.0 / (1.0 + std::exp(-v(k)));
    out(k) = remaining * take;
    remaining *= 1.0 / (1.0 + std::exp(v(k)));
  }
  out(sticks) = remaining;
  return out;
}

double log_pmf_sb(Eigen::Index outcome, const Vector& v) {
  if (outcome < 0 || outcome > v.size())
    throw std::out_of_range("log_pmf_sb: outcome out of range");
  double out = 0.0;
  for (Eigen::Index k = 0; k < v.size() && k <= outcome; ++k)
    out += (k == outcome) ? log_sigmoid(v(k)) : log_sigmoid(-v(k));
  return out;
}

Vector kappa_vec(Eigen::Index outcome, Eigen::Index categories) {
  if (outcome < 0 || outcome >= categories)
    throw std::out_of_range("kappa_vec: outcome out of range");
  Vector kappa = Vector::Zero(categories - 1);
  for (Eigen::Index k = 0; k < categories - 1; ++k) {
    if (outcome >= k) kappa(k) = (outcome == k ? 1.0 : 0.0) - 0.5;
  }
  return kappa;
}

PGAuxiliaries sample_pg_aux(Eigen::Index outcome, const Vector& v, Rng& rng) {
  const Eigen::Index categories = v.size() + 1;
  PGAuxiliaries aux;
  aux.kappa = kappa_vec(outcome, categories);
  aux.omega = Vector::Zero(v.size());
  for (Eigen::Index k = 0; k < v.size() && k <= outcome; ++k) aux.omega(k) = sample_pg({1, v(k)}, rng);
  return aux;
}

RowPosterior::RowPosterior(const Vector& prior_mean, const Matrix& prior_cov) {
  if (prior_mean.size() != prior_cov.rows())
    throw ConfigError("regression row prior: mean/covariance size mismatch");
  lambda_ = spd_inverse(prior_cov, "regression row prior covariance");
  theta_ = lambda_ * prior_mean;
}

void RowPosterior::add(const Vector& x, double kappa, double omega) {
  const Eigen::Index m = x.size();
  // Regressor (x, 1); target kappa / omega with precision omega.
  lambda_.topLeftCorner(m, m).noalias() += omega * x * x.transpose();
  lambda_.topRightCorner(m, 1) += omega * x;
  lambda_.bottomLeftCorner(1, m) += omega * x.transpose();
  lambda_(m, m) += omega;
  theta_.head(m) += kappa * x;
  theta_(m) += kappa;
}

InfoGaussian RowPosterior::posterior() const { return {theta_, lambda_}; }

InfoGaussian regression_row_posterior(const Vector& prior_mean, const Matrix& prior_cov,
                                      std::span<const RegressionDatum> data) {
  RowPosterior post(prior_mean, prior_cov);
  for (const auto& datum : data) {
    if (!(datum.omega > 0.0))
      throw std::invalid_argument("regression_row_posterior: omega must be positive");
    post.add(datum.x, datum.kappa, datum.omega);
  }
  return post.posterior();
}

}  // namespace redslds
