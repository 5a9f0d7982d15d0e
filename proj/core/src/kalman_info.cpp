#include "redslds/kalman_info.hpp"

#include <string>

#include "redslds/errors.hpp"
#include "redslds/rand_dist.hpp"

namespace redslds {
namespace {

// Augmented-logistic potential exp(-omega/2 v^2 + kappa v) with
// v = weights * x + bias, accumulated on x.
void add_pg_potential(const StickRegression& reg, const PGAuxiliaries& aux, Matrix& lambda,
                      Vector& theta) {
  const Matrix& r = reg.weights;
  const Vector w = aux.omega;
  lambda.noalias() += r.transpose() * w.asDiagonal() * r;
  theta.noalias() += r.transpose() * (aux.kappa - w.cwiseProduct(reg.bias));
}

void check_aux(const PGAuxiliaries& aux, Eigen::Index rows, const char* what, std::size_t t) {
  if (aux.omega.size() != rows || aux.kappa.size() != rows)
    throw std::invalid_argument(std::string("backward_info_filter: missing ") + what +
                                " auxiliaries at t=" + std::to_string(t));
}

}  // namespace

PGSequence PGSequence::empty(std::size_t length) {
  PGSequence pg;
  pg.state.resize(length);
  pg.duration.resize(length);
  return pg;
}

BackwardMessages backward_info_filter(const ModelParams& params, const ModelConfig& config,
                                      const Matrix& y, const std::vector<int>& s,
                                      const std::vector<int>& d, const PGSequence& pg) {
  const auto length = static_cast<std::size_t>(y.rows());
  if (s.size() != length || d.size() != length)
    throw std::invalid_argument("backward_info_filter: length mismatch");
  if (!satisfies_countdown(s, d, config.num_modes, config.duration_support()))
    throw std::invalid_argument("backward_info_filter: trajectory violates the countdown law");
  const bool gated_state = config.recurrent_state && config.num_modes > 1;
  const bool gated_dur = config.recurrent_duration && config.duration_support() > 1;
  if ((gated_state || gated_dur) && (pg.state.size() != length || pg.duration.size() != length))
    throw std::invalid_argument("backward_info_filter: auxiliary sequence length mismatch");

  const int m = config.latent_dim;
  const Matrix eye = Matrix::Identity(m, m);

  std::vector<Matrix> emit_lambda(params.modes.size());
  std::vector<Matrix> emit_gain(params.modes.size());  // C' S^{-1}
  std::vector<Matrix> q_inv(params.modes.size());
  for (std::size_t k = 0; k < params.modes.size(); ++k) {
    const ModeParams& mode = params.modes[k];
    const Matrix s_inv = spd_inverse(mode.s_cov, "emission covariance");
    emit_gain[k] = mode.c_mat.transpose() * s_inv;
    emit_lambda[k] = emit_gain[k] * mode.c_mat;
    symmetrize(emit_lambda[k]);
    q_inv[k] = spd_inverse(mode.q_cov, "dynamics covariance");
  }
  const auto emit_theta = [&](std::size_t t) -> Vector {
    const ModeParams& mode = params.modes[s[t]];
    return emit_gain[s[t]] * (y.row(static_cast<Eigen::Index>(t)).transpose() - mode.c_bias);
  };

  // Message through the dynamics of mode `k` from x_{t+1} onto x_t.
  const auto predict = [&](int k, const Matrix& lam_b, const Vector& th_b, Matrix& lam_out,
                           Vector& th_out, std::size_t t) {
    const ModeParams& mode = params.modes[k];
    Matrix sum = lam_b + q_inv[k];
    symmetrize(sum);
    const Llt llt = robust_cholesky(sum, "backward filter predict, t=" + std::to_string(t));
    const Matrix j = llt.solve(lam_b).transpose();  // lam_b (lam_b + Q^{-1})^{-1}
    const Matrix l = eye - j;
    Matrix inner = l * lam_b * l.transpose() + j * q_inv[k] * j.transpose();
    lam_out = mode.a_mat.transpose() * inner * mode.a_mat;
    symmetrize(lam_out);
    th_out = mode.a_mat.transpose() * l * (th_b - lam_b * mode.a_bias);
  };

  BackwardMessages msg;
  msg.theta_b.resize(length);
  msg.lambda_b.resize(length);
  const std::size_t last = length - 1;
  msg.lambda_b[last] = emit_lambda[s[last]];
  msg.theta_b[last] = emit_theta(last);

  for (std::size_t t = last; t-- > 0;) {
    const std::size_t next = t + 1;
    Matrix lam;
    Vector th;
    predict(s[next], msg.lambda_b[next], msg.theta_b[next], lam, th, t);
    if (d[t] == 1) {
      if (gated_state) {
        check_aux(pg.state[next], config.num_modes - 1, "state", next);
        add_pg_potential(params.state_reg[s[t]], pg.state[next], lam, th);
      }
      if (gated_dur) {
        check_aux(pg.duration[next], config.duration_support() - 1, "duration", next);
        add_pg_potential(params.dur_reg[s[next]], pg.duration[next], lam, th);
      }
      symmetrize(lam);
    }
    msg.lambda_b[t] = lam + emit_lambda[s[t]];
    msg.theta_b[t] = th + emit_theta(t);
  }
  predict(s[0], msg.lambda_b[0], msg.theta_b[0], msg.lambda_prior, msg.theta_prior, 0);
  return msg;
}

Matrix sample_pseudo_obs(const BackwardMessages& messages, const ModelParams& params,
                         const std::vector<int>& s, Rng& rng) {
  const std::size_t length = messages.theta_b.size();
  const Eigen::Index m = messages.theta_b.front().size();
  Matrix x(static_cast<Eigen::Index>(length), m);
  {
    const Matrix p_inv = spd_inverse(params.init.sigma_init[s[0]], "initial covariance");
    InfoGaussian g{p_inv * params.init.mu_init[s[0]] + messages.theta_b[0],
                   p_inv + messages.lambda_b[0]};
    x.row(0) = sample_info_gaussian(g, rng).transpose();
  }
  for (std::size_t t = 1; t < length; ++t) {
    const ModeParams& mode = params.modes[s[t]];
    const Matrix q_inv = spd_inverse(mode.q_cov, "dynamics covariance");
    const Vector pred = mode.a_mat * x.row(static_cast<Eigen::Index>(t - 1)).transpose() + mode.a_bias;
    InfoGaussian g{q_inv * pred + messages.theta_b[t], q_inv + messages.lambda_b[t]};
    x.row(static_cast<Eigen::Index>(t)) = sample_info_gaussian(g, rng).transpose();
  }
  return x;
}

GaussianMarginals smoothed_marginals(const BackwardMessages& messages, const ModelParams& params,
                                     const std::vector<int>& s) {
  const std::size_t length = messages.theta_b.size();
  GaussianMarginals out;
  out.mean.resize(length);
  out.cov.resize(length);
  {
    const Matrix p_inv = spd_inverse(params.init.sigma_init[s[0]], "initial covariance");
    const MomentGaussian g = info_to_moment(
        {p_inv * params.init.mu_init[s[0]] + messages.theta_b[0], p_inv + messages.lambda_b[0]});
    out.mean[0] = g.mean;
    out.cov[0] = g.cov;
  }
  for (std::size_t t = 1; t < length; ++t) {
    const ModeParams& mode = params.modes[s[t]];
    const Matrix q_inv = spd_inverse(mode.q_cov, "dynamics covariance");
    const MomentGaussian cond =
        info_to_moment({q_inv * mode.a_bias + messages.theta_b[t], q_inv + messages.lambda_b[t]});
    // x_t | x_{t-1} ~ N(gain x_{t-1} + cond.mean, cond.cov)
    const Matrix gain = cond.cov * q_inv * mode.a_mat;
    out.mean[t] = gain * out.mean[t - 1] + cond.mean;
    out.cov[t] = gain * out.cov[t - 1] * gain.transpose() + cond.cov;
    symmetrize(out.cov[t]);
  }
  return out;
}

}  // namespace redslds
