#include <Eigen/LU>
#include <string>

#include "redslds/errors.hpp"
#include "redslds/kalman_info.hpp"

namespace redslds {

DenseGaussian dense_gaussian_oracle(const ModelParams& params, const ModelConfig& config,
                                    const Matrix& y, const std::vector<int>& s,
                                    const std::vector<int>& d, const PGSequence& pg) {
  const Eigen::Index length = y.rows();
  const Eigen::Index m = config.latent_dim;
  const Eigen::Index dim = length * m;
  if (dim > 64) throw std::invalid_argument("dense_gaussian_oracle: T*M must be at most 64");
  if (static_cast<Eigen::Index>(s.size()) != length || static_cast<Eigen::Index>(d.size()) != length)
    throw std::invalid_argument("dense_gaussian_oracle: length mismatch");

  DenseGaussian out;
  out.precision = Matrix::Zero(dim, dim);
  out.info = Vector::Zero(dim);
  auto block = [&](Eigen::Index i, Eigen::Index j) { return out.precision.block(i * m, j * m, m, m); };
  auto seg = [&](Eigen::Index i) { return out.info.segment(i * m, m); };

  // Initial density on x_1.
  {
    const Matrix p = params.init.sigma_init[s[0]].inverse();
    block(0, 0) += p;
    seg(0) += p * params.init.mu_init[s[0]];
  }
  for (Eigen::Index t = 0; t < length; ++t) {
    const ModeParams& mode = params.modes[s[t]];
    // Emission: -1/2 (y - Cx - c)' S^{-1} (y - Cx - c)
    const Matrix s_inv = mode.s_cov.inverse();
    block(t, t) += mode.c_mat.transpose() * s_inv * mode.c_mat;
    seg(t) += mode.c_mat.transpose() * s_inv * (y.row(t).transpose() - mode.c_bias);
    if (t == 0) continue;
    // Dynamics: -1/2 (x_t - A x_{t-1} - a)' Q^{-1} (x_t - A x_{t-1} - a)
    const Matrix q_inv = mode.q_cov.inverse();
    const Matrix& a = mode.a_mat;
    block(t, t) += q_inv;
    block(t - 1, t - 1) += a.transpose() * q_inv * a;
    block(t, t - 1) -= q_inv * a;
    block(t - 1, t) -= a.transpose() * q_inv;
    seg(t) += q_inv * mode.a_bias;
    seg(t - 1) -= a.transpose() * q_inv * mode.a_bias;
    // Augmented stick-breaking potentials on x_{t-1}, present only at change points.
    if (d[t - 1] != 1) continue;
    const auto add_sticks = [&](const StickRegression& reg, const PGAuxiliaries& aux) {
      for (Eigen::Index k = 0; k < reg.weights.rows(); ++k) {
        const Vector r = reg.weights.row(k).transpose();
        block(t - 1, t - 1) += aux.omega(k) * r * r.transpose();
        seg(t - 1) += (aux.kappa(k) - aux.omega(k) * reg.bias(k)) * r;
      }
    };
    if (config.recurrent_state && config.num_modes > 1)
      add_sticks(params.state_reg[s[t - 1]], pg.state[t]);
    if (config.recurrent_duration && config.duration_support() > 1)
      add_sticks(params.dur_reg[s[t]], pg.duration[t]);
  }

  Eigen::LDLT<Matrix> ldlt(out.precision);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    throw NumericalError("dense_gaussian_oracle: singular joint precision");
  out.cov = ldlt.solve(Matrix::Identity(dim, dim));
  out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
  out.mean = out.cov * out.info;
  return out;
}

}  // namespace redslds
