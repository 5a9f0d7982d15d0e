#include "redslds/arhmm.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "redslds/errors.hpp"
#include "redslds/rand_dist.hpp"

namespace redslds {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Vector regressor(const Matrix& x, Eigen::Index t) {
  Vector z(x.cols() + 1);
  z.head(x.cols()) = x.row(t - 1).transpose();
  z(x.cols()) = 1.0;
  return z;
}

Matrix floor_cov(const Matrix& cov, double floor) {
  Matrix c = 0.5 * (cov + cov.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(c);
  if (eig.eigenvalues().minCoeff() >= floor) return c;
  const Vector vals = eig.eigenvalues().cwiseMax(floor);
  return eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().transpose();
}

struct Model {
  std::vector<Matrix> coef;
  std::vector<Matrix> cov;
  Vector initial;
  Matrix trans;
};

// Per-sequence emission log-likelihood (T x K); row 0 is zero.
Matrix emission_loglik(const Model& model, const Matrix& x) {
  const auto k = static_cast<Eigen::Index>(model.coef.size());
  Matrix out = Matrix::Zero(x.rows(), k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const GaussianNoise noise(model.cov[j], "arhmm covariance");
    for (Eigen::Index t = 1; t < x.rows(); ++t)
      out(t, j) = noise.log_pdf(x.row(t).transpose() - model.coef[j] * regressor(x, t));
  }
  return out;
}

struct Posterior {
  std::vector<Matrix> gamma;  // T x K
  Matrix xi_sum;              // K x K expected transitions
  Vector first;               // expected initial states
  double log_likelihood = 0.0;
};

Posterior e_step(const Model& model, const std::vector<Matrix>& series) {
  const auto k = model.initial.size();
  Posterior post;
  post.xi_sum = Matrix::Zero(k, k);
  post.first = Vector::Zero(k);
  for (const Matrix& x : series) {
    const Eigen::Index len = x.rows();
    const Matrix ll = emission_loglik(model, x);
    Matrix alpha(len, k), beta(len, k), lik(len, k);
    Vector scale(len);
    for (Eigen::Index t = 0; t < len; ++t) {
      const double m = ll.row(t).maxCoeff();
      lik.row(t) = (ll.row(t).array() - m).exp().matrix();
      const Vector pred = t == 0 ? Vector(model.initial)
                                 : Vector(model.trans.transpose() * alpha.row(t - 1).transpose());
      Vector a = pred.cwiseProduct(lik.row(t).transpose());
      const double c = a.sum();
      if (!(c > 0.0)) throw NumericalError("arhmm: forward pass underflow");
      alpha.row(t) = (a / c).transpose();
      scale(t) = std::log(c) + m;
    }
    beta.row(len - 1).setOnes();
    for (Eigen::Index t = len - 1; t > 0; --t) {
      const Vector b = lik.row(t).transpose().cwiseProduct(beta.row(t).transpose());
      beta.row(t - 1) = (model.trans * b).transpose() / std::exp(scale(t) - ll.row(t).maxCoeff());
    }
    Matrix gamma = alpha.cwiseProduct(beta);
    for (Eigen::Index t = 0; t < len; ++t) gamma.row(t) /= gamma.row(t).sum();
    for (Eigen::Index t = 1; t < len; ++t) {
      const Vector b = lik.row(t).transpose().cwiseProduct(beta.row(t).transpose());
      Matrix xi = alpha.row(t - 1).transpose() * b.transpose();
      xi = xi.cwiseProduct(model.trans);
      post.xi_sum += xi / xi.sum();
    }
    post.first += gamma.row(0).transpose();
    post.gamma.push_back(std::move(gamma));
    post.log_likelihood += scale.sum();
  }
  return post;
}

// Weighted least-squares M-step; modes without enough weight keep their
// previous emission parameters.
void m_step(Model& model, const std::vector<Matrix>& series, const std::vector<Matrix>& weights,
            const ArhmmOptions& options, bool update_markov, const Posterior* post) {
  const auto k = static_cast<Eigen::Index>(model.coef.size());
  const Eigen::Index m = series.front().cols();
  for (Eigen::Index j = 0; j < k; ++j) {
    Matrix zz = Matrix::Zero(m + 1, m + 1), yz = Matrix::Zero(m, m + 1), yy = Matrix::Zero(m, m);
    double n = 0.0;
    for (std::size_t i = 0; i < series.size(); ++i) {
      const Matrix& x = series[i];
      for (Eigen::Index t = 1; t < x.rows(); ++t) {
        const double w = weights[i](t, j);
        if (w == 0.0) continue;
        const Vector z = regressor(x, t);
        const Vector y = x.row(t).transpose();
        zz.noalias() += w * z * z.transpose();
        yz.noalias() += w * y * z.transpose();
        yy.noalias() += w * y * y.transpose();
        n += w;
      }
    }
    if (n < static_cast<double>(m + 2)) continue;
    Eigen::LDLT<Matrix> ldlt(zz);
    if (ldlt.info() != Eigen::Success || ldlt.rcond() < 1e-12) continue;
    const Matrix coef = ldlt.solve(yz.transpose()).transpose();
    const Matrix resid = (yy - coef * yz.transpose()) / n;
    model.coef[j] = coef;
    model.cov[j] = floor_cov(resid, options.cov_floor);
  }
  if (update_markov && post != nullptr) {
    model.initial = post->first / post->first.sum();
    for (Eigen::Index j = 0; j < k; ++j) {
      const double row = post->xi_sum.row(j).sum();
      if (row > 0.0) model.trans.row(j) = post->xi_sum.row(j) / row;
    }
  }
}

std::vector<int> viterbi(const Model& model, const Matrix& x) {
  const Eigen::Index len = x.rows();
  const auto k = model.initial.size();
  const Matrix ll = emission_loglik(model, x);
  const Matrix log_trans = model.trans.array().log().matrix();
  Matrix delta(len, k);
  Eigen::MatrixXi back(len, k);
  delta.row(0) = model.initial.array().log().matrix().transpose() + ll.row(0);
  for (Eigen::Index t = 1; t < len; ++t) {
    for (Eigen::Index j = 0; j < k; ++j) {
      double best = kNegInf;
      int arg = 0;
      for (Eigen::Index i = 0; i < k; ++i) {
        const double v = delta(t - 1, i) + log_trans(i, j);
        if (v > best) {
          best = v;
          arg = static_cast<int>(i);
        }
      }
      delta(t, j) = best + ll(t, j);
      back(t, j) = arg;
    }
  }
  std::vector<int> path(len);
  Eigen::Index last;
  delta.row(len - 1).maxCoeff(&last);
  path[len - 1] = static_cast<int>(last);
  for (Eigen::Index t = len - 1; t > 0; --t) path[t - 1] = back(t, path[t]);
  return path;
}


// k-means++ seeding and Lloyd iterations on the pooled pairs (x_{t-1}, x_t).
std::vector<int> kmeans_lagged(const std::vector<Matrix>& series, int k, Rng& rng) {
  const Eigen::Index m = series.front().cols();
  Eigen::Index total = 0;
  for (const Matrix& x : series) total += x.rows();
  Matrix pts(total, 2 * m);
  Eigen::Index n = 0;
  for (const Matrix& x : series)
    for (Eigen::Index t = 0; t < x.rows(); ++t, ++n) {
      pts.row(n).head(m) = x.row(t > 0 ? t - 1 : 0);
      pts.row(n).tail(m) = x.row(t);
    }
  Matrix centers(k, 2 * m);
  Vector dist = Vector::Constant(total, std::numeric_limits<double>::infinity());
  centers.row(0) = pts.row(std::min<Eigen::Index>(total - 1, static_cast<Eigen::Index>(rng.uniform() * total)));
  for (int c = 1; c < k; ++c) {
    for (Eigen::Index i = 0; i < total; ++i)
      dist(i) = std::min(dist(i), (pts.row(i) - centers.row(c - 1)).squaredNorm());
    centers.row(c) = pts.row(static_cast<Eigen::Index>(sample_categorical(dist / dist.sum(), rng)));
  }
  std::vector<int> labels(total, 0);
  for (int iter = 0; iter < 50; ++iter) {
    bool changed = false;
    for (Eigen::Index i = 0; i < total; ++i) {
      Eigen::Index best;
      (centers.rowwise() - pts.row(i)).rowwise().squaredNorm().minCoeff(&best);
      if (labels[i] != best) {
        labels[i] = static_cast<int>(best);
        changed = true;
      }
    }
    if (!changed && iter > 0) break;
    Matrix sums = Matrix::Zero(k, 2 * m);
    Vector counts = Vector::Zero(k);
    for (Eigen::Index i = 0; i < total; ++i) {
      sums.row(labels[i]) += pts.row(i);
      counts(labels[i]) += 1.0;
    }
    for (int c = 0; c < k; ++c)
      if (counts(c) > 0.0) centers.row(c) = sums.row(c) / counts(c);
  }
  return labels;
}

}  // namespace

PcaResult pca_project(const std::vector<Matrix>& sequences, int latent_dim) {
  if (sequences.empty()) throw DataError("pca: no sequences");
  const Eigen::Index n = sequences.front().cols();
  if (latent_dim < 1 || latent_dim > n)
    throw ConfigError("pca: latent dimension " + std::to_string(latent_dim) +
                      " exceeds observation dimension " + std::to_string(n));
  Eigen::Index total = 0;
  Vector mean = Vector::Zero(n);
  for (const Matrix& y : sequences) {
    mean += y.colwise().sum().transpose();
    total += y.rows();
  }
  mean /= static_cast<double>(total);
  Matrix cov = Matrix::Zero(n, n);
  for (const Matrix& y : sequences) {
    const Matrix c = y.rowwise() - mean.transpose();
    cov.noalias() += c.transpose() * c;
  }
  cov /= static_cast<double>(total);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  if (!(eig.eigenvalues().maxCoeff() > 1e-12))
    throw DataError("pca: observations are constant; nothing to project");

  PcaResult out;
  out.mean = mean;
  out.components.resize(n, latent_dim);
  out.variances.resize(latent_dim);
  for (int j = 0; j < latent_dim; ++j) {
    Vector v = eig.eigenvectors().col(n - 1 - j);
    Eigen::Index arg;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;  // deterministic sign
    out.components.col(j) = v;
    out.variances(j) = eig.eigenvalues()(n - 1 - j);
  }
  out.projected_cov = Matrix::Zero(latent_dim, latent_dim);
  for (const Matrix& y : sequences) {
    Matrix x = (y.rowwise() - mean.transpose()) * out.components;
    out.projected_cov.noalias() += x.transpose() * x;
    out.projected.push_back(std::move(x));
  }
  out.projected_cov /= static_cast<double>(total);
  return out;
}

ArhmmFit fit_arhmm_once(const std::vector<Matrix>& series, int num_modes, Rng& rng,
                        const ArhmmOptions& options) {
  if (series.empty()) throw DataError("arhmm: no sequences");
  if (options.max_iter < 1) throw ConfigError("arhmm: max_iter must be positive");
  Eigen::Index total = 0;
  for (const Matrix& x : series) total += x.rows();
  if (total < num_modes + 2)
    throw DataError("arhmm: series length must be at least K + 2");
  const Eigen::Index m = series.front().cols();
  const int k = num_modes;

  Model model;
  model.coef.assign(k, Matrix::Zero(m, m + 1));
  model.cov.assign(k, Matrix::Identity(m, m));
  model.initial = Vector::Constant(k, 1.0 / k);
  model.trans = Matrix::Constant(k, k, k > 1 ? 0.1 / (k - 1) : 1.0);
  model.trans.diagonal().setConstant(k > 1 ? 0.9 : 1.0);

  // Hard initial assignment: given states, or k-means on lagged pairs.
  std::vector<Matrix> weights;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const Matrix& x = series[i];
    Matrix w = Matrix::Zero(x.rows(), k);
    if (!options.initial_states.empty()) {
      const auto& s = options.initial_states.at(i);
      if (static_cast<Eigen::Index>(s.size()) != x.rows()) throw DataError("arhmm: initial states length mismatch");
      for (Eigen::Index t = 0; t < x.rows(); ++t) w(t, s[t]) = 1.0;
      weights.push_back(std::move(w));
      continue;
    }
    weights.push_back(std::move(w));
  }
  if (options.initial_states.empty()) {
    const std::vector<int> labels = kmeans_lagged(series, k, rng);
    std::size_t n = 0;
    for (auto& w : weights)
      for (Eigen::Index t = 0; t < w.rows(); ++t) w(t, labels[n++]) = 1.0;
  }
  // Modes left without data start from the pooled fit.
  {
    std::vector<Matrix> pooled;
    for (const Matrix& x : series) pooled.push_back(Matrix::Ones(x.rows(), 1));
    Model one = model;
    one.coef.resize(1);
    one.cov.resize(1);
    m_step(one, series, pooled, options, false, nullptr);
    model.coef.assign(k, one.coef[0]);
    model.cov.assign(k, one.cov[0]);
  }
  m_step(model, series, weights, options, false, nullptr);

  ArhmmFit fit;
  double prev = kNegInf;
  for (int iter = 0; iter < options.max_iter; ++iter) {
    const Posterior post = e_step(model, series);
    fit.trace.push_back(post.log_likelihood);
    if (iter > 0 && std::abs(post.log_likelihood - prev) <= options.tol * std::abs(prev)) break;
    prev = post.log_likelihood;
    m_step(model, series, post.gamma, options, true, &post);
  }
  fit.log_likelihood = fit.trace.back();
  for (const Matrix& x : series) fit.states.push_back(viterbi(model, x));
  fit.coef = model.coef;
  fit.cov = model.cov;
  fit.initial = model.initial;
  fit.trans = model.trans;
  return fit;
}

ArhmmFit fit_arhmm(const std::vector<Matrix>& series, int num_modes, int restarts, Rng& rng,
                   const ArhmmOptions& options) {
  if (restarts < 1) throw ConfigError("arhmm: restarts must be positive");
  ArhmmFit best;
  best.log_likelihood = kNegInf;
  for (int r = 0; r < restarts; ++r) {
    ArhmmFit fit = fit_arhmm_once(series, num_modes, rng, options);
    if (r == 0 || fit.log_likelihood > best.log_likelihood) best = std::move(fit);
  }
  return best;
}

std::vector<int> durations_from_runs(const std::vector<int>& s, int max_duration) {
  if (max_duration < 1) throw ConfigError("durations_from_runs: max_duration must be positive");
  std::vector<int> d(s.size());
  std::size_t start = 0;
  while (start < s.size()) {
    std::size_t end = start;
    while (end < s.size() && s[end] == s[start]) ++end;
    for (std::size_t seg = start; seg < end; seg += static_cast<std::size_t>(max_duration)) {
      const std::size_t seg_end = std::min(end, seg + static_cast<std::size_t>(max_duration));
      for (std::size_t t = seg; t < seg_end; ++t) d[t] = static_cast<int>(seg_end - t);
    }
    start = end;
  }
  return d;
}

}  // namespace redslds
