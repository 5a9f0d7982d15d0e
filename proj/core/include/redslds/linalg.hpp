#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cstddef>
#include <cmath>
#include <limits>
#include <string_view>

namespace redslds {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Llt = Eigen::LLT<Matrix>;

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

void symmetrize(Matrix& a);

// Cholesky factorization with a bounded jitter fallback: on failure adds
// 1e-9 * trace/dim * I and retries with the jitter growing one decade at a
// time, at most three retries. Throws NumericalError afterwards.
Llt robust_cholesky(const Matrix& a, std::string_view context = {});

Matrix spd_inverse(const Matrix& a, std::string_view context = {});
double log_det(const Llt& llt);

// Number of jitter retries taken on the calling thread since the last reset.
std::size_t jitter_events();
void reset_jitter_events();

// Covariance with cached factorization for repeated density evaluations.
class GaussianNoise {
 public:
  GaussianNoise() = default;
  explicit GaussianNoise(const Matrix& cov, std::string_view context = {});

  double log_pdf(const Vector& residual) const;
  const Matrix& precision() const { return precision_; }
  const Matrix& cov() const { return cov_; }
  const Llt& llt() const { return llt_; }

 private:
  Matrix cov_;
  Matrix precision_;
  Llt llt_;
  double log_norm_ = 0.0;
};

double log_normal_pdf(const Vector& x, const Vector& mean, const Matrix& cov);

template <typename Derived>
double log_sum_exp(const Eigen::DenseBase<Derived>& v) {
  const double m = v.maxCoeff();
  if (!(m > -std::numeric_limits<double>::infinity())) return m;
  return m + std::log((v.derived().array() - m).exp().sum());
}

}  // namespace redslds
