#include "redslds/model.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "redslds/errors.hpp"
#include "redslds/rand_dist.hpp"

namespace redslds {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols, const std::string& what) {
  if (m.rows() != rows || m.cols() != cols)
    throw ConfigError(what + ": expected " + std::to_string(rows) + "x" + std::to_string(cols) +
                      ", got " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
}

void require_size(const Vector& v, Eigen::Index n, const std::string& what) {
  if (v.size() != n)
    throw ConfigError(what + ": expected length " + std::to_string(n) + ", got " +
                      std::to_string(v.size()));
}

void require_stochastic(const Vector& p, const std::string& what) {
  if ((p.array() < 0.0).any() || std::abs(p.sum() - 1.0) > 1e-9)
    throw ConfigError(what + " is not a probability vector");
}

}  // namespace

Variant parse_variant(std::string_view name) {
  if (name == "slds") return Variant::kSlds;
  if (name == "rslds") return Variant::kRslds;
  if (name == "edslds") return Variant::kEdslds;
  if (name == "redslds") return Variant::kRedslds;
  throw ConfigError("unknown model variant '" + std::string(name) +
                    "' (expected slds, rslds, edslds or redslds)");
}

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::kSlds: return "slds";
    case Variant::kRslds: return "rslds";
    case Variant::kEdslds: return "edslds";
    case Variant::kRedslds: return "redslds";
  }
  return "unknown";
}

ModelConfig ModelConfig::from_variant(Variant v, int num_modes, int latent_dim, int obs_dim,
                                      int max_duration) {
  ModelConfig c;
  c.num_modes = num_modes;
  c.latent_dim = latent_dim;
  c.obs_dim = obs_dim;
  c.max_duration = max_duration;
  c.recurrent_state = (v == Variant::kRslds || v == Variant::kRedslds);
  c.explicit_duration = (v == Variant::kEdslds || v == Variant::kRedslds);
  c.recurrent_duration = (v == Variant::kRedslds);
  return c;
}

std::optional<Variant> ModelConfig::variant() const {
  if (!recurrent_state && !explicit_duration && !recurrent_duration) return Variant::kSlds;
  if (recurrent_state && !explicit_duration && !recurrent_duration) return Variant::kRslds;
  if (!recurrent_state && explicit_duration && !recurrent_duration) return Variant::kEdslds;
  if (recurrent_state && explicit_duration && recurrent_duration) return Variant::kRedslds;
  return std::nullopt;
}

void ModelConfig::validate() const {
  if (num_modes < 1) throw ConfigError("num_modes must be positive");
  if (latent_dim < 1) throw ConfigError("latent_dim must be positive");
  if (obs_dim < 1) throw ConfigError("obs_dim must be positive");
  if (max_duration < 1) throw ConfigError("max_duration must be positive");
  if (recurrent_duration && !explicit_duration)
    throw ConfigError("recurrent_duration requires explicit_duration");
}

ModelParams ModelParams::allocate(const ModelConfig& config) {
  config.validate();
  const int k = config.num_modes, m = config.latent_dim, n = config.obs_dim;
  const int dur = config.duration_support();
  ModelParams p;
  p.modes.resize(k);
  for (auto& mode : p.modes) {
    mode.a_mat = Matrix::Identity(m, m);
    mode.a_bias = Vector::Zero(m);
    mode.q_cov = Matrix::Identity(m, m);
    mode.c_mat = Matrix::Zero(n, m);
    mode.c_bias = Vector::Zero(n);
    mode.s_cov = Matrix::Identity(n, n);
  }
  p.init.pi0 = Vector::Constant(k, 1.0 / k);
  p.init.mu_init.assign(k, Vector::Zero(m));
  p.init.sigma_init.assign(k, Matrix::Identity(m, m));
  p.trans = Matrix::Constant(k, k, 1.0 / k);
  if (config.recurrent_state) p.state_reg.assign(k, StickRegression(k, m));
  if (config.recurrent_duration) p.dur_reg.assign(k, StickRegression(dur, m));
  p.dur_table = Matrix::Constant(k, dur, 1.0 / dur);
  return p;
}

void ModelParams::validate(const ModelConfig& config) const {
  const int k = config.num_modes, m = config.latent_dim, n = config.obs_dim;
  const int dur = config.duration_support();
  if (static_cast<int>(modes.size()) != k) throw ConfigError("params: wrong number of modes");
  for (int i = 0; i < k; ++i) {
    const std::string tag = "mode " + std::to_string(i);
    require_shape(modes[i].a_mat, m, m, tag + " A");
    require_size(modes[i].a_bias, m, tag + " a");
    require_shape(modes[i].q_cov, m, m, tag + " Q");
    require_shape(modes[i].c_mat, n, m, tag + " C");
    require_size(modes[i].c_bias, n, tag + " c");
    require_shape(modes[i].s_cov, n, n, tag + " S");
  }
  require_size(init.pi0, k, "pi0");
  require_stochastic(init.pi0, "pi0");
  if (static_cast<int>(init.mu_init.size()) != k || static_cast<int>(init.sigma_init.size()) != k)
    throw ConfigError("params: initial-state block has wrong number of modes");
  if (!config.recurrent_state) {
    require_shape(trans, k, k, "transition matrix");
    for (int i = 0; i < k; ++i) require_stochastic(trans.row(i).transpose(), "transition row");
  } else {
    if (static_cast<int>(state_reg.size()) != k) throw ConfigError("params: state regressions missing");
    for (const auto& r : state_reg) require_shape(r.weights, k - 1, m, "state regression weights");
  }
  if (config.recurrent_duration) {
    if (static_cast<int>(dur_reg.size()) != k) throw ConfigError("params: duration regressions missing");
    for (const auto& r : dur_reg) require_shape(r.weights, dur - 1, m, "duration regression weights");
  } else if (config.explicit_duration) {
    require_shape(dur_table, k, dur, "duration table");
    for (int i = 0; i < k; ++i) require_stochastic(dur_table.row(i).transpose(), "duration table row");
  }
}

bool satisfies_countdown(const std::vector<int>& s, const std::vector<int>& d, int num_modes,
                         int duration_support) {
  if (s.size() != d.size()) return false;
  for (std::size_t t = 0; t < s.size(); ++t) {
    if (s[t] < 0 || s[t] >= num_modes) return false;
    if (d[t] < 1 || d[t] > duration_support) return false;
    if (t > 0 && d[t - 1] > 1 && (s[t] != s[t - 1] || d[t] != d[t - 1] - 1)) return false;
  }
  return true;
}

bool satisfies_countdown(const LatentTrajectory& traj, const ModelConfig& config) {
  return satisfies_countdown(traj.s, traj.d, config.num_modes, config.duration_support());
}

std::vector<ModeNoise> build_noise_cache(const ModelParams& params) {
  std::vector<ModeNoise> cache;
  cache.reserve(params.modes.size());
  for (std::size_t k = 0; k < params.modes.size(); ++k) {
    const std::string tag = "mode " + std::to_string(k);
    cache.push_back({GaussianNoise(params.modes[k].q_cov, tag + " Q"),
                     GaussianNoise(params.modes[k].s_cov, tag + " S"),
                     GaussianNoise(params.init.sigma_init[k], tag + " initial covariance")});
  }
  return cache;
}

Matrix log_state_kernel(const ModelParams& params, const ModelConfig& config, const Vector& x_prev) {
  const int k = config.num_modes;
  if (!config.recurrent_state) return params.trans.array().log().matrix();
  Matrix out(k, k);
  for (int i = 0; i < k; ++i)
    out.row(i) = log_pi_sb(params.state_reg[i].logits(x_prev)).transpose();
  return out;
}

Matrix log_duration_kernel(const ModelParams& params, const ModelConfig& config,
                           const Vector& x_prev) {
  const int k = config.num_modes, dur = config.duration_support();
  if (!config.explicit_duration) return Matrix::Zero(k, 1);
  if (!config.recurrent_duration) return params.dur_table.array().log().matrix();
  Matrix out(k, dur);
  for (int i = 0; i < k; ++i)
    out.row(i) = log_pi_sb(params.dur_reg[i].logits(x_prev)).transpose();
  return out;
}

Matrix log_initial_duration(const ModelParams& params, const ModelConfig& config) {
  const int k = config.num_modes, dur = config.duration_support();
  if (!config.explicit_duration) return Matrix::Zero(k, 1);
  if (!config.recurrent_duration) return params.dur_table.array().log().matrix();
  Matrix out(k, dur);
  for (int i = 0; i < k; ++i)
    out.row(i) = log_pi_sb(params.dur_reg[i].logits(params.init.mu_init[i])).transpose();
  return out;
}

Matrix transition_kernel(int s_prev, int d_prev, const Vector& x_prev, const ModelParams& params,
                         const ModelConfig& config) {
  const int k = config.num_modes, dur = config.duration_support();
  if (s_prev < 0 || s_prev >= k || d_prev < 1 || d_prev > dur)
    throw std::out_of_range("transition_kernel: previous (state, duration) out of range");
  Matrix out = Matrix::Zero(k, dur);
  if (d_prev > 1) {
    out(s_prev, d_prev - 2) = 1.0;
    return out;
  }
  const Vector log_state = log_state_kernel(params, config, x_prev).row(s_prev).transpose();
  const Matrix log_dur = log_duration_kernel(params, config, x_prev);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < dur; ++j) out(i, j) = std::exp(log_state(i) + log_dur(i, j));
  return out;
}

Simulation simulate(const ModelParams& params, const ModelConfig& config, int length, Rng& rng) {
  if (length < 1) throw std::invalid_argument("simulate: length must be positive");
  params.validate(config);
  const int m = config.latent_dim, n = config.obs_dim;
  Simulation out;
  out.y.resize(length, n);
  out.traj.s.resize(length);
  out.traj.d.resize(length);
  out.traj.x.resize(length, m);

  const auto emit = [&](int t) {
    const ModeParams& mode = params.modes[out.traj.s[t]];
    const Vector mean = mode.c_mat * out.traj.x.row(t).transpose() + mode.c_bias;
    out.y.row(t) = sample_mvn(mean, mode.s_cov, rng).transpose();
  };

  const int s0 = static_cast<int>(sample_categorical(params.init.pi0, rng));
  const Vector init_dur = log_initial_duration(params, config).row(s0).transpose();
  out.traj.s[0] = s0;
  out.traj.d[0] = static_cast<int>(sample_log_categorical(init_dur, rng)) + 1;
  out.traj.x.row(0) = sample_mvn(params.init.mu_init[s0], params.init.sigma_init[s0], rng).transpose();
  emit(0);

  for (int t = 1; t < length; ++t) {
    const Vector x_prev = out.traj.x.row(t - 1).transpose();
    if (out.traj.d[t - 1] > 1) {
      out.traj.s[t] = out.traj.s[t - 1];
      out.traj.d[t] = out.traj.d[t - 1] - 1;
    } else {
      const Vector log_state = log_state_kernel(params, config, x_prev).row(out.traj.s[t - 1]).transpose();
      const int s = static_cast<int>(sample_log_categorical(log_state, rng));
      const Vector log_dur = log_duration_kernel(params, config, x_prev).row(s).transpose();
      out.traj.s[t] = s;
      out.traj.d[t] = static_cast<int>(sample_log_categorical(log_dur, rng)) + 1;
    }
    const ModeParams& mode = params.modes[out.traj.s[t]];
    const Vector mean = mode.a_mat * x_prev + mode.a_bias;
    out.traj.x.row(t) = sample_mvn(mean, mode.q_cov, rng).transpose();
    emit(t);
  }
  return out;
}

double joint_log_density(const ModelParams& params, const ModelConfig& config, const Matrix& y,
                         const LatentTrajectory& traj) {
  const auto length = static_cast<Eigen::Index>(traj.size());
  if (y.rows() != length || traj.x.rows() != length || static_cast<Eigen::Index>(traj.d.size()) != length)
    throw std::invalid_argument("joint_log_density: length mismatch");
  if (length == 0) return 0.0;
  if (!satisfies_countdown(traj, config)) return kNegInf;

  const auto noise = build_noise_cache(params);
  const auto emission = [&](Eigen::Index t) {
    const int s = traj.s[t];
    const ModeParams& mode = params.modes[s];
    const Vector resid = y.row(t).transpose() - mode.c_mat * traj.x.row(t).transpose() - mode.c_bias;
    return noise[s].emission.log_pdf(resid);
  };

  const int s0 = traj.s[0];
  double total = std::log(params.init.pi0(s0));
  total += log_initial_duration(params, config)(s0, traj.d[0] - 1);
  total += noise[s0].init.log_pdf(traj.x.row(0).transpose() - params.init.mu_init[s0]);
  total += emission(0);

  for (Eigen::Index t = 1; t < length; ++t) {
    const int s = traj.s[t];
    const Vector x_prev = traj.x.row(t - 1).transpose();
    if (traj.d[t - 1] == 1) {
      total += log_state_kernel(params, config, x_prev)(traj.s[t - 1], s);
      total += log_duration_kernel(params, config, x_prev)(s, traj.d[t] - 1);
    }
    const ModeParams& mode = params.modes[s];
    total += noise[s].dynamics.log_pdf(traj.x.row(t).transpose() - mode.a_mat * x_prev - mode.a_bias);
    total += emission(t);
  }
  return total;
}

}  // namespace redslds
