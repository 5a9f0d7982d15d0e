#include "redslds/rand_dist.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "redslds/errors.hpp"

namespace redslds {
namespace {

constexpr double kPi = std::numbers::pi;
// Switch point between the left (inverse-Gaussian) and right (exponential)
// proposals of the J*(1, z) sampler.
constexpr double kTrunc = 0.64;

double log_normal_cdf(double x) { return std::log(0.5 * std::erfc(-x / std::numbers::sqrt2)); }

// n-th term of the alternating series for the J*(1, 0) density.
double series_coef(int n, double x) {
  const double k = (n + 0.5) * kPi;
  if (x > kTrunc) return k * std::exp(-0.5 * k * k * x);
  if (x <= 0.0) return 0.0;
  const double expnt = -1.5 * (std::log(0.5 * kPi) + std::log(x)) + std::log(k) -
                       2.0 * (n + 0.5) * (n + 0.5) / x;
  return std::exp(expnt);
}

// Probability of proposing from the right (exponential) piece.
double mass_right(double z) {
  const double fz = 0.125 * kPi * kPi + 0.5 * z * z;
  const double b = std::sqrt(1.0 / kTrunc) * (kTrunc * z - 1.0);
  const double a = -std::sqrt(1.0 / kTrunc) * (kTrunc * z + 1.0);
  const double x0 = std::log(fz) + fz * kTrunc;
  const double xb = x0 - z + log_normal_cdf(b);
  const double xa = x0 + z + log_normal_cdf(a);
  const double q_over_p = 4.0 / kPi * (std::exp(xb) + std::exp(xa));
  return 1.0 / (1.0 + q_over_p);
}

// Inverse-Gaussian(1/z, 1) truncated to (0, kTrunc).
double truncated_inverse_gaussian(double z, Rng& rng) {
  z = std::abs(z);
  double x = kTrunc + 1.0;
  if (1.0 / kTrunc > z) {
    double alpha = 0.0;
    while (rng.uniform() > alpha) {
      double e1 = rng.exponential();
      double e2 = rng.exponential();
      while (e1 * e1 > 2.0 * e2 / kTrunc) {
        e1 = rng.exponential();
        e2 = rng.exponential();
      }
      x = 1.0 + e1 * kTrunc;
      x = kTrunc / (x * x);
      alpha = std::exp(-0.5 * z * z * x);
    }
  } else {
    const double mu = 1.0 / z;
    while (x > kTrunc) {
      double y = rng.normal();
      y *= y;
      const double half_mu = 0.5 * mu;
      const double mu_y = mu * y;
      x = mu + half_mu * mu_y - half_mu * std::sqrt(4.0 * mu_y + mu_y * mu_y);
      if (rng.uniform() > mu / (mu + x)) x = mu * mu / x;
    }
  }
  return x;
}

// PG(1, c) = J*(1, |c|/2) / 4.
double sample_pg1(double c, Rng& rng) {
  const double z = 0.5 * std::abs(c);
  const double fz = 0.125 * kPi * kPi + 0.5 * z * z;
  while (true) {
    double x;
    if (rng.uniform() < mass_right(z)) {
      x = kTrunc + rng.exponential() / fz;
    } else {
      x = truncated_inverse_gaussian(z, rng);
    }
    double s = series_coef(0, x);
    const double y = rng.uniform() * s;
    for (int n = 1;; ++n) {
      if (n % 2 == 1) {
        s -= series_coef(n, x);
        if (y <= s) return 0.25 * x;
      } else {
        s += series_coef(n, x);
        if (y > s) break;
      }
    }
  }
}

void require_spd(const Matrix& m, const char* name) {
  if (m.rows() != m.cols()) throw ConfigError(std::string(name) + " must be square");
  if (!m.allFinite()) throw ConfigError(std::string(name) + " has non-finite entries");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw ConfigError(std::string(name) + " must be symmetric");
  Llt llt(m);
  if (llt.info() != Eigen::Success) throw ConfigError(std::string(name) + " must be positive definite");
}

}  // namespace

double sample_pg(const PGParams& params, Rng& rng) {
  if (params.b < 0) throw std::invalid_argument("sample_pg: negative shape b");
  if (!std::isfinite(params.c)) throw std::invalid_argument("sample_pg: non-finite tilt c");
  double total = 0.0;
  for (int i = 0; i < params.b; ++i) total += sample_pg1(params.c, rng);
  return total;
}

double pg_mean(int b, double c) {
  if (std::abs(c) < 1e-8) return b / 4.0;
  return b / (2.0 * c) * std::tanh(0.5 * c);
}

MomentGaussian info_to_moment(const InfoGaussian& msg) {
  const Llt llt = robust_cholesky(msg.lambda, "info_to_moment");
  MomentGaussian out;
  out.mean = llt.solve(msg.theta);
  out.cov = llt.solve(Matrix::Identity(msg.lambda.rows(), msg.lambda.cols()));
  symmetrize(out.cov);
  return out;
}

Vector sample_standard_normal(Eigen::Index n, Rng& rng) {
  Vector z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = rng.normal();
  return z;
}

Vector sample_info_gaussian(const InfoGaussian& msg, Rng& rng) {
  const Llt llt = robust_cholesky(msg.lambda, "sample_info_gaussian");
  const Vector mean = llt.solve(msg.theta);
  const Vector z = sample_standard_normal(msg.theta.size(), rng);
  // lambda = L L', so L'^{-1} z has covariance lambda^{-1}.
  return mean + llt.matrixU().solve(z);
}

Vector sample_mvn(const Vector& mean, const Matrix& cov, Rng& rng) {
  const Llt llt = robust_cholesky(cov, "sample_mvn");
  return mean + llt.matrixL() * sample_standard_normal(mean.size(), rng);
}

void MNIWParams::validate() const {
  require_spd(v0, "MNIW v0");
  require_spd(s0, "MNIW s0");
  if (m0.rows() != s0.rows() || m0.cols() != v0.rows())
    throw ConfigError("MNIW m0 shape does not match s0/v0");
  if (!(n0 > static_cast<double>(s0.rows()) - 1.0))
    throw ConfigError("MNIW n0 must exceed rows(s0) - 1");
}

Matrix sample_inverse_wishart(const Matrix& scale, double dof, Rng& rng) {
  const Eigen::Index p = scale.rows();
  if (!(dof > static_cast<double>(p) - 1.0))
    throw ConfigError("inverse-Wishart dof must exceed the dimension minus one");
  // Bartlett factor of a Wishart(I, dof) draw W0 = A A'.
  Matrix a = Matrix::Zero(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    a(i, i) = std::sqrt(rng.chi_square(dof - static_cast<double>(i)));
    for (Eigen::Index j = 0; j < i; ++j) a(i, j) = rng.normal();
  }
  // scale = U U'  =>  U W0^{-1} U' ~ IW(scale, dof).
  const Matrix u = robust_cholesky(scale, "inverse-Wishart scale").matrixL();
  const Matrix a_inv_t =
      a.transpose().triangularView<Eigen::Upper>().solve(Matrix::Identity(p, p));
  const Matrix g = u * a_inv_t;
  Matrix out = g * g.transpose();
  symmetrize(out);
  return out;
}

MNIWDraw sample_mniw(const MNIWParams& params, Rng& rng) {
  params.validate();
  MNIWDraw draw;
  draw.cov = sample_inverse_wishart(params.s0, params.n0, rng);
  const Matrix row_chol = robust_cholesky(draw.cov, "MNIW covariance").matrixL();
  const Matrix col_chol = robust_cholesky(params.v0, "MNIW v0").matrixL();
  Matrix z(params.m0.rows(), params.m0.cols());
  for (Eigen::Index j = 0; j < z.cols(); ++j)
    for (Eigen::Index i = 0; i < z.rows(); ++i) z(i, j) = rng.normal();
  draw.coef = params.m0 + row_chol * z * col_chol.transpose();
  return draw;
}

RegressionStats::RegressionStats(Eigen::Index y_dim, Eigen::Index x_dim)
    : xx(Matrix::Zero(x_dim, x_dim)),
      yx(Matrix::Zero(y_dim, x_dim)),
      yy(Matrix::Zero(y_dim, y_dim)) {}

void RegressionStats::add(const Vector& x, const Vector& y) {
  xx.noalias() += x * x.transpose();
  yx.noalias() += y * x.transpose();
  yy.noalias() += y * y.transpose();
  count += 1.0;
}

RegressionStats& RegressionStats::operator+=(const RegressionStats& other) {
  xx += other.xx;
  yx += other.yx;
  yy += other.yy;
  count += other.count;
  return *this;
}

MNIWParams mniw_posterior(const MNIWParams& prior, const RegressionStats& stats) {
  const Matrix v0_inv = spd_inverse(prior.v0, "MNIW v0");
  Matrix vn_inv = v0_inv + stats.xx;
  symmetrize(vn_inv);
  MNIWParams post;
  post.v0 = spd_inverse(vn_inv, "MNIW posterior column precision");
  post.m0 = (prior.m0 * v0_inv + stats.yx) * post.v0;
  post.s0 = prior.s0 + stats.yy + prior.m0 * v0_inv * prior.m0.transpose() -
            post.m0 * vn_inv * post.m0.transpose();
  symmetrize(post.s0);
  post.n0 = prior.n0 + stats.count;
  return post;
}

Vector sample_dirichlet(const DirichletParams& params, Rng& rng) {
  Vector g(params.alpha.size());
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    if (!(params.alpha(i) > 0.0)) throw std::invalid_argument("Dirichlet alpha must be positive");
    g(i) = rng.gamma(params.alpha(i));
  }
  const double total = g.sum();
  if (!(total > 0.0)) {
    // Every gamma draw underflowed; fall back to the largest concentration.
    g.setZero();
    Eigen::Index best = 0;
    params.alpha.maxCoeff(&best);
    g(best) = 1.0;
    return g;
  }
  return g / total;
}

std::size_t sample_categorical(std::span<const double> probs, Rng& rng) {
  double total = 0.0;
  for (double p : probs) total += p;
  const double u = rng.uniform() * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] > 0.0) last_positive = i;
    acc += probs[i];
    if (u < acc) return i;
  }
  return last_positive;
}

std::size_t sample_categorical(const Vector& probs, Rng& rng) {
  return sample_categorical(std::span<const double>(probs.data(), static_cast<std::size_t>(probs.size())), rng);
}

std::size_t sample_log_categorical(const Vector& log_weights, Rng& rng) {
  const double m = log_weights.maxCoeff();
  if (!(m > -std::numeric_limits<double>::infinity()))
    throw NumericalError("sample_log_categorical: all weights are zero");
  const Vector w = (log_weights.array() - m).exp().matrix();
  return sample_categorical(w, rng);
}

}  // namespace redslds
