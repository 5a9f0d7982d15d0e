#include "redslds/discrete_fb.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "redslds/errors.hpp"
#include "redslds/rand_dist.hpp"

namespace redslds {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

}  // namespace

Vector local_evidence(const ModelParams& params, const std::vector<ModeNoise>& noise,
                      const Matrix& y, const Matrix& x, Eigen::Index t) {
  const auto k = static_cast<Eigen::Index>(params.modes.size());
  Vector out(k);
  const Vector xt = x.row(t).transpose();
  const Vector yt = y.row(t).transpose();
  for (Eigen::Index i = 0; i < k; ++i) {
    const ModeParams& mode = params.modes[i];
    double v = noise[i].emission.log_pdf(yt - mode.c_mat * xt - mode.c_bias);
    if (t == 0) {
      v += noise[i].init.log_pdf(xt - params.init.mu_init[i]);
    } else {
      const Vector x_prev = x.row(t - 1).transpose();
      v += noise[i].dynamics.log_pdf(xt - mode.a_mat * x_prev - mode.a_bias);
    }
    out(i) = v;
  }
  return out;
}

Matrix local_evidence(const ModelParams& params, const ModelConfig& config, const Matrix& y,
                      const Matrix& x, Eigen::Index t) {
  const auto noise = build_noise_cache(params);
  const Vector e = local_evidence(params, noise, y, x, t);
  return e.replicate(1, config.duration_support());
}

ForwardLattice forward_filter(const ModelParams& params, const ModelConfig& config,
                              const Matrix& y, const Matrix& x) {
  const Eigen::Index length = y.rows();
  if (x.rows() != length) throw std::invalid_argument("forward_filter: y and x lengths differ");
  if (length == 0) throw std::invalid_argument("forward_filter: empty sequence");
  const int k = config.num_modes, dur = config.duration_support();
  const auto noise = build_noise_cache(params);

  ForwardLattice lat;
  lat.log_alpha.resize(length);
  lat.log_normalizers.resize(length);
  lat.log_state.resize(length);
  lat.log_dur.resize(length);

  lat.log_init = log_initial_duration(params, config);
  for (int i = 0; i < k; ++i) lat.log_init.row(i).array() += std::log(params.init.pi0(i));

  const auto normalize = [&](Matrix& slice, Eigen::Index t) {
    const double z = log_sum_exp(slice.reshaped());
    if (!std::isfinite(z))
      throw NumericalError("forward_filter: evidence vanished at t=" + std::to_string(t));
    slice.array() -= z;
    lat.log_normalizers(t) = z;
  };

  {
    Matrix slice = lat.log_init;
    const Vector e = local_evidence(params, noise, y, x, 0);
    slice.colwise() += e;
    normalize(slice, 0);
    lat.log_alpha[0] = std::move(slice);
  }

  for (Eigen::Index t = 1; t < length; ++t) {
    const Vector x_prev = x.row(t - 1).transpose();
    lat.log_state[t] = log_state_kernel(params, config, x_prev);
    lat.log_dur[t] = log_duration_kernel(params, config, x_prev);
    const Matrix& prev = lat.log_alpha[t - 1];

    // Mass arriving at each new state from a segment that just ended.
    Vector enter(k);
    for (int j = 0; j < k; ++j) {
      double acc = kNegInf;
      for (int i = 0; i < k; ++i) acc = log_add(acc, prev(i, 0) + lat.log_state[t](i, j));
      enter(j) = acc;
    }

    Matrix slice(k, dur);
    for (int j = 0; j < k; ++j) {
      for (int dd = 0; dd < dur; ++dd) {
        double v = enter(j) + lat.log_dur[t](j, dd);
        if (dd + 1 < dur) v = log_add(v, prev(j, dd + 1));  // countdown from d + 1
        slice(j, dd) = v;
      }
    }
    slice.colwise() += local_evidence(params, noise, y, x, t);
    normalize(slice, t);
    lat.log_alpha[t] = std::move(slice);
  }
  return lat;
}

DiscretePath backward_sample(const ForwardLattice& lattice, const ModelConfig& config, Rng& rng) {
  const auto length = static_cast<Eigen::Index>(lattice.log_alpha.size());
  const int k = config.num_modes, dur = config.duration_support();
  DiscretePath path;
  path.s.resize(length);
  path.d.resize(length);

  {
    const Matrix& last = lattice.log_alpha[length - 1];
    const Vector flat = last.reshaped();
    const auto idx = static_cast<Eigen::Index>(sample_log_categorical(flat, rng));
    path.s[length - 1] = static_cast<int>(idx % k);
    path.d[length - 1] = static_cast<int>(idx / k) + 1;
  }

  // Candidates for z_{t-1} given z_t = (j, dd): (j, dd + 1) by countdown, or
  // (i, 1) for any i followed by a fresh draw of (j, dd).
  Vector weights(k + 1);
  for (Eigen::Index t = length - 1; t >= 1; --t) {
    const int j = path.s[t];
    const int dd = path.d[t];
    const Matrix& prev = lattice.log_alpha[t - 1];
    for (int i = 0; i < k; ++i)
      weights(i) = prev(i, 0) + lattice.log_state[t](i, j) + lattice.log_dur[t](j, dd - 1);
    weights(k) = (dd + 1 <= dur) ? prev(j, dd) : kNegInf;
    const auto pick = static_cast<int>(sample_log_categorical(weights, rng));
    if (pick == k) {
      path.s[t - 1] = j;
      path.d[t - 1] = dd + 1;
    } else {
      path.s[t - 1] = pick;
      path.d[t - 1] = 1;
    }
  }
  return path;
}

}  // namespace redslds
