#include "redslds/linalg.hpp"

#include <cmath>
#include <string>

#include "redslds/errors.hpp"

namespace redslds {
namespace {

thread_local std::size_t g_jitter_events = 0;

constexpr int kJitterRetries = 3;
constexpr double kJitterBase = 1e-9;

}  // namespace

void symmetrize(Matrix& a) { a = 0.5 * (a + a.transpose()).eval(); }

Llt robust_cholesky(const Matrix& a, std::string_view context) {
  Llt llt(a);
  if (llt.info() == Eigen::Success && a.allFinite()) return llt;
  if (!a.allFinite()) {
    throw NumericalError("non-finite matrix in Cholesky" +
                         (context.empty() ? std::string() : " (" + std::string(context) + ")"));
  }
  const double dim = static_cast<double>(a.rows());
  double scale = std::abs(a.trace()) / dim;
  if (!(scale > 0.0)) scale = 1.0;
  double jitter = kJitterBase * scale;
  for (int attempt = 0; attempt < kJitterRetries; ++attempt, jitter *= 10.0) {
    ++g_jitter_events;
    Matrix b = a;
    b.diagonal().array() += jitter;
    llt.compute(b);
    if (llt.info() == Eigen::Success) return llt;
  }
  throw NumericalError("matrix not positive definite after jitter" +
                       (context.empty() ? std::string() : " (" + std::string(context) + ")"));
}

Matrix spd_inverse(const Matrix& a, std::string_view context) {
  Matrix inv = robust_cholesky(a, context).solve(Matrix::Identity(a.rows(), a.cols()));
  symmetrize(inv);
  return inv;
}

double log_det(const Llt& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

std::size_t jitter_events() { return g_jitter_events; }
void reset_jitter_events() { g_jitter_events = 0; }

GaussianNoise::GaussianNoise(const Matrix& cov, std::string_view context)
    : cov_(cov), llt_(robust_cholesky(cov, context)) {
  precision_ = llt_.solve(Matrix::Identity(cov.rows(), cov.cols()));
  symmetrize(precision_);
  log_norm_ = -0.5 * (static_cast<double>(cov.rows()) * kLog2Pi + log_det(llt_));
}

double GaussianNoise::log_pdf(const Vector& residual) const {
  const Vector z = llt_.matrixL().solve(residual);
  return log_norm_ - 0.5 * z.squaredNorm();
}

double log_normal_pdf(const Vector& x, const Vector& mean, const Matrix& cov) {
  return GaussianNoise(cov).log_pdf(x - mean);
}

}  // namespace redslds
