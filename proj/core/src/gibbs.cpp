#include "redslds/gibbs.hpp"

#include <cmath>
#include <string>

#include "redslds/arhmm.hpp"
#include "redslds/discrete_fb.hpp"
#include "redslds/errors.hpp"

namespace redslds {
namespace {

bool same(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
}

bool same_params(const ModelParams& a, const ModelParams& b) {
  if (a.modes.size() != b.modes.size()) return false;
  for (std::size_t k = 0; k < a.modes.size(); ++k) {
    const ModeParams &x = a.modes[k], &y = b.modes[k];
    if (!same(x.a_mat, y.a_mat) || !same(x.a_bias, y.a_bias) || !same(x.q_cov, y.q_cov) ||
        !same(x.c_mat, y.c_mat) || !same(x.c_bias, y.c_bias) || !same(x.s_cov, y.s_cov))
      return false;
  }
  if (!same(a.init.pi0, b.init.pi0) || a.init.mu_init.size() != b.init.mu_init.size()) return false;
  for (std::size_t k = 0; k < a.init.mu_init.size(); ++k)
    if (!same(a.init.mu_init[k], b.init.mu_init[k]) || !same(a.init.sigma_init[k], b.init.sigma_init[k]))
      return false;
  const auto same_regs = [](const std::vector<StickRegression>& p, const std::vector<StickRegression>& q) {
    if (p.size() != q.size()) return false;
    for (std::size_t k = 0; k < p.size(); ++k)
      if (!same(p[k].weights, q[k].weights) || !same(p[k].bias, q[k].bias)) return false;
    return true;
  };
  return same(a.trans, b.trans) && same(a.dur_table, b.dur_table) &&
         same_regs(a.state_reg, b.state_reg) && same_regs(a.dur_reg, b.dur_reg);
}

bool same_aux(const std::vector<PGAuxiliaries>& a, const std::vector<PGAuxiliaries>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t t = 0; t < a.size(); ++t)
    if (!same(a[t].omega, b[t].omega) || !same(a[t].kappa, b[t].kappa)) return false;
  return true;
}

Vector augment(const Vector& x) {
  Vector z(x.size() + 1);
  z.head(x.size()) = x;
  z(x.size()) = 1.0;
  return z;
}

void set_dynamics(ModeParams& mode, const MNIWDraw& draw) {
  const Eigen::Index m = draw.coef.rows();
  mode.a_mat = draw.coef.leftCols(m);
  mode.a_bias = draw.coef.col(m);
  mode.q_cov = draw.cov;
}

void set_emission(ModeParams& mode, const MNIWDraw& draw) {
  const Eigen::Index m = draw.coef.cols() - 1;
  mode.c_mat = draw.coef.leftCols(m);
  mode.c_bias = draw.coef.col(m);
  mode.s_cov = draw.cov;
}

void set_row(StickRegression& reg, Eigen::Index row, const Vector& sample) {
  const Eigen::Index m = reg.weights.cols();
  reg.weights.row(row) = sample.head(m).transpose();
  reg.bias(row) = sample(m);
}

bool has_state_sticks(const ModelConfig& c) { return c.recurrent_state && c.num_modes > 1; }
bool has_dur_sticks(const ModelConfig& c) { return c.recurrent_duration && c.duration_support() > 1; }

Vector dirichlet_draw(double alpha, const Vector& counts, Rng& rng) {
  return sample_dirichlet({Vector::Constant(counts.size(), alpha) + counts}, rng);
}

void check_data(const std::vector<Matrix>& data, const ModelConfig& config) {
  if (data.empty()) throw DataError("no sequences supplied");
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data[i].rows() < 1) throw DataError("sequence " + std::to_string(i) + " is empty");
    if (data[i].cols() != config.obs_dim)
      throw DataError("sequence " + std::to_string(i) + " has " + std::to_string(data[i].cols()) +
                      " features, expected " + std::to_string(config.obs_dim));
    if (!data[i].allFinite()) throw DataError("sequence " + std::to_string(i) + " contains non-finite values");
  }
}

}  // namespace

void PriorSettings::validate() const {
  const double values[] = {dynamics_v0,   emission_v0, dynamics_s0_scale, emission_s0_scale,
                           state_reg_var, dur_reg_var, pi0_alpha,         trans_alpha,
                           dur_alpha,     init_mean_scale, init_cov_scale};
  for (double v : values)
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("prior multipliers must be positive and finite");
  if (!(dynamics_n0_offset > 0.0) || !(emission_n0_offset > 0.0))
    throw ConfigError("prior n0 offsets must be positive");
}

void Priors::validate(const ModelConfig& config) const {
  const Eigen::Index m = config.latent_dim, n = config.obs_dim;
  dynamics.validate();
  emission.validate();
  if (dynamics.m0.rows() != m || dynamics.m0.cols() != m + 1)
    throw ConfigError("dynamics prior has the wrong shape");
  if (emission.m0.rows() != n || emission.m0.cols() != m + 1)
    throw ConfigError("emission prior has the wrong shape");
  if (init_mean.size() != m || init_mean_cov.rows() != m || init_cov_scale.rows() != m)
    throw ConfigError("initial-state prior has the wrong shape");
  if (!(init_cov_dof > static_cast<double>(m - 1))) throw ConfigError("initial covariance dof too small");
  if (!(pi0_alpha > 0.0) || !(trans_alpha > 0.0) || !(dur_alpha > 0.0))
    throw ConfigError("Dirichlet concentrations must be positive");
  if (state_reg_cov.rows() != m + 1 || dur_reg_cov.rows() != m + 1)
    throw ConfigError("regression prior covariance has the wrong shape");
}

Priors make_priors(const PriorSettings& s, const ModelConfig& config, const Matrix& obs_cov,
                   const Matrix& latent_cov) {
  s.validate();
  config.validate();
  const int m = config.latent_dim, n = config.obs_dim;
  if (obs_cov.rows() != n || latent_cov.rows() != m)
    throw ConfigError("make_priors: covariance shapes do not match the model");
  Priors p;
  p.dynamics = {Matrix::Zero(m, m + 1), s.dynamics_v0 * Matrix::Identity(m + 1, m + 1),
                s.dynamics_s0_scale * latent_cov, m + s.dynamics_n0_offset};
  p.emission = {Matrix::Zero(n, m + 1), s.emission_v0 * Matrix::Identity(m + 1, m + 1),
                s.emission_s0_scale * obs_cov, n + s.emission_n0_offset};
  p.init_mean = Vector::Zero(m);
  p.init_mean_cov = s.init_mean_scale * latent_cov;
  p.init_cov_scale = s.init_cov_scale * latent_cov;
  p.init_cov_dof = m + 2.0;
  p.pi0_alpha = s.pi0_alpha;
  p.trans_alpha = s.trans_alpha;
  p.dur_alpha = s.dur_alpha;
  p.state_reg_cov = s.state_reg_var * Matrix::Identity(m + 1, m + 1);
  p.dur_reg_cov = s.dur_reg_var * Matrix::Identity(m + 1, m + 1);
  p.validate(config);
  return p;
}

ModelParams sample_params_from_prior(const Priors& priors, const ModelConfig& config, Rng& rng) {
  priors.validate(config);
  const int k = config.num_modes, dur = config.duration_support();
  ModelParams p = ModelParams::allocate(config);
  for (auto& mode : p.modes) set_dynamics(mode, sample_mniw(priors.dynamics, rng));
  if (config.shared_emission) {
    const MNIWDraw e = sample_mniw(priors.emission, rng);
    for (auto& mode : p.modes) set_emission(mode, e);
  } else {
    for (auto& mode : p.modes) set_emission(mode, sample_mniw(priors.emission, rng));
  }
  p.init.pi0 = dirichlet_draw(priors.pi0_alpha, Vector::Zero(k), rng);
  for (int j = 0; j < k; ++j) {
    p.init.sigma_init[j] = sample_inverse_wishart(priors.init_cov_scale, priors.init_cov_dof, rng);
    p.init.mu_init[j] = sample_mvn(priors.init_mean, priors.init_mean_cov, rng);
  }
  const Vector zero_row = Vector::Zero(config.latent_dim + 1);
  if (has_state_sticks(config)) {
    for (auto& reg : p.state_reg)
      for (Eigen::Index r = 0; r < reg.weights.rows(); ++r)
        set_row(reg, r, sample_mvn(zero_row, priors.state_reg_cov, rng));
  } else if (!config.recurrent_state) {
    for (int j = 0; j < k; ++j) p.trans.row(j) = dirichlet_draw(priors.trans_alpha, Vector::Zero(k), rng).transpose();
  }
  if (has_dur_sticks(config)) {
    for (auto& reg : p.dur_reg)
      for (Eigen::Index r = 0; r < reg.weights.rows(); ++r)
        set_row(reg, r, sample_mvn(zero_row, priors.dur_reg_cov, rng));
  } else if (config.explicit_duration && !config.recurrent_duration) {
    for (int j = 0; j < k; ++j)
      p.dur_table.row(j) = dirichlet_draw(priors.dur_alpha, Vector::Zero(dur), rng).transpose();
  }
  return p;
}

bool ChainState::operator==(const ChainState& other) const {
  if (iteration != other.iteration || !(rng == other.rng) || !same_params(params, other.params))
    return false;
  if (trajectories.size() != other.trajectories.size() || pg.size() != other.pg.size()) return false;
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    const auto &a = trajectories[i], &b = other.trajectories[i];
    if (a.s != b.s || a.d != b.d || !same(a.x, b.x)) return false;
  }
  for (std::size_t i = 0; i < pg.size(); ++i)
    if (!same_aux(pg[i].state, other.pg[i].state) || !same_aux(pg[i].duration, other.pg[i].duration))
      return false;
  return true;
}

PGSequence sample_pg_sequence(const ModelParams& params, const ModelConfig& config,
                              const LatentTrajectory& traj, Rng& rng) {
  const std::size_t length = traj.size();
  PGSequence pg = PGSequence::empty(length);
  const bool st = has_state_sticks(config), du = has_dur_sticks(config);
  if (!st && !du) return pg;
  if (du) {
    const int s0 = traj.s[0];
    pg.duration[0] = sample_pg_aux(traj.d[0] - 1, params.dur_reg[s0].logits(params.init.mu_init[s0]), rng);
  }
  for (std::size_t t = 1; t < length; ++t) {
    if (traj.d[t - 1] != 1) continue;
    const Vector x_prev = traj.x.row(static_cast<Eigen::Index>(t - 1)).transpose();
    if (st) pg.state[t] = sample_pg_aux(traj.s[t], params.state_reg[traj.s[t - 1]].logits(x_prev), rng);
    if (du) pg.duration[t] = sample_pg_aux(traj.d[t] - 1, params.dur_reg[traj.s[t]].logits(x_prev), rng);
  }
  return pg;
}

void update_dynamics(ModelParams& params, const std::vector<LatentTrajectory>& trajs,
                     const Priors& priors, Rng& rng) {
  const Eigen::Index m = priors.dynamics.m0.rows();
  std::vector<RegressionStats> stats(params.modes.size(), RegressionStats(m, m + 1));
  for (const auto& traj : trajs)
    for (Eigen::Index t = 1; t < traj.x.rows(); ++t)
      stats[traj.s[t]].add(augment(traj.x.row(t - 1).transpose()), traj.x.row(t).transpose());
  for (std::size_t k = 0; k < params.modes.size(); ++k)
    set_dynamics(params.modes[k], sample_mniw(mniw_posterior(priors.dynamics, stats[k]), rng));
}

void update_emissions(ModelParams& params, const ModelConfig& config,
                      const std::vector<LatentTrajectory>& trajs, const std::vector<Matrix>& data,
                      const Priors& priors, Rng& rng) {
  const Eigen::Index m = config.latent_dim, n = config.obs_dim;
  const std::size_t groups = config.shared_emission ? 1 : params.modes.size();
  std::vector<RegressionStats> stats(groups, RegressionStats(n, m + 1));
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    const auto& traj = trajs[i];
    for (Eigen::Index t = 0; t < traj.x.rows(); ++t) {
      const std::size_t g = config.shared_emission ? 0 : static_cast<std::size_t>(traj.s[t]);
      stats[g].add(augment(traj.x.row(t).transpose()), data[i].row(t).transpose());
    }
  }
  if (config.shared_emission) {
    const MNIWDraw draw = sample_mniw(mniw_posterior(priors.emission, stats[0]), rng);
    for (auto& mode : params.modes) set_emission(mode, draw);
    return;
  }
  for (std::size_t k = 0; k < params.modes.size(); ++k)
    set_emission(params.modes[k], sample_mniw(mniw_posterior(priors.emission, stats[k]), rng));
}

void update_initial(ModelParams& params, const ModelConfig& config,
                    const std::vector<LatentTrajectory>& trajs, const std::vector<PGSequence>& pg,
                    const Priors& priors, Rng& rng) {
  const int k = config.num_modes;
  Vector counts = Vector::Zero(k);
  for (const auto& traj : trajs) counts(traj.s[0]) += 1.0;
  params.init.pi0 = dirichlet_draw(priors.pi0_alpha, counts, rng);

  const Matrix mean_prec = spd_inverse(priors.init_mean_cov, "initial mean prior");
  const bool du = has_dur_sticks(config);
  for (int j = 0; j < k; ++j) {
    Matrix scatter = priors.init_cov_scale;
    Vector sum = Vector::Zero(config.latent_dim);
    for (const auto& traj : trajs) {
      if (traj.s[0] != j) continue;
      const Vector x0 = traj.x.row(0).transpose();
      const Vector r = x0 - params.init.mu_init[j];
      scatter.noalias() += r * r.transpose();
      sum += x0;
    }
    params.init.sigma_init[j] = sample_inverse_wishart(scatter, priors.init_cov_dof + counts(j), rng);

    const Matrix sigma_inv = spd_inverse(params.init.sigma_init[j], "initial covariance");
    InfoGaussian post{mean_prec * priors.init_mean + sigma_inv * sum, mean_prec + counts(j) * sigma_inv};
    if (du) {
      // The initial duration is regressed on mu_init.
      const StickRegression& reg = params.dur_reg[j];
      for (std::size_t i = 0; i < trajs.size(); ++i) {
        if (trajs[i].s[0] != j) continue;
        const PGAuxiliaries& aux = pg[i].duration[0];
        post.lambda.noalias() += reg.weights.transpose() * aux.omega.asDiagonal() * reg.weights;
        post.theta.noalias() += reg.weights.transpose() * (aux.kappa - aux.omega.cwiseProduct(reg.bias));
      }
    }
    symmetrize(post.lambda);
    params.init.mu_init[j] = sample_info_gaussian(post, rng);
  }
}

void update_transition_matrix(ModelParams& params, const ModelConfig& config,
                              const std::vector<LatentTrajectory>& trajs, const Priors& priors,
                              Rng& rng) {
  if (config.recurrent_state) return;
  const int k = config.num_modes;
  Matrix counts = Matrix::Zero(k, k);
  for (const auto& traj : trajs)
    for (std::size_t t = 1; t < traj.size(); ++t)
      if (traj.d[t - 1] == 1) counts(traj.s[t - 1], traj.s[t]) += 1.0;
  for (int j = 0; j < k; ++j)
    params.trans.row(j) = dirichlet_draw(priors.trans_alpha, counts.row(j).transpose(), rng).transpose();
}

void update_state_regression(ModelParams& params, const ModelConfig& config,
                             const std::vector<LatentTrajectory>& trajs,
                             const std::vector<PGSequence>& pg, const Priors& priors, Rng& rng) {
  if (!has_state_sticks(config)) return;
  const int k = config.num_modes;
  const Vector zero = Vector::Zero(config.latent_dim + 1);
  std::vector<std::vector<RowPosterior>> rows(k);
  for (auto& r : rows) r.assign(k - 1, RowPosterior(zero, priors.state_reg_cov));
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    const auto& traj = trajs[i];
    for (std::size_t t = 1; t < traj.size(); ++t) {
      if (traj.d[t - 1] != 1) continue;
      const PGAuxiliaries& aux = pg[i].state[t];
      const Vector x_prev = traj.x.row(static_cast<Eigen::Index>(t - 1)).transpose();
      for (Eigen::Index r = 0; r < aux.omega.size(); ++r)
        if (aux.omega(r) > 0.0) rows[traj.s[t - 1]][r].add(x_prev, aux.kappa(r), aux.omega(r));
    }
  }
  for (int j = 0; j < k; ++j)
    for (int r = 0; r < k - 1; ++r)
      set_row(params.state_reg[j], r, sample_info_gaussian(rows[j][r].posterior(), rng));
}

void update_duration_model(ModelParams& params, const ModelConfig& config,
                           const std::vector<LatentTrajectory>& trajs,
                           const std::vector<PGSequence>& pg, const Priors& priors, Rng& rng) {
  const int k = config.num_modes, dur = config.duration_support();
  if (!config.explicit_duration) return;
  if (!config.recurrent_duration) {
    Matrix counts = Matrix::Zero(k, dur);
    for (const auto& traj : trajs) {
      counts(traj.s[0], traj.d[0] - 1) += 1.0;
      for (std::size_t t = 1; t < traj.size(); ++t)
        if (traj.d[t - 1] == 1) counts(traj.s[t], traj.d[t] - 1) += 1.0;
    }
    for (int j = 0; j < k; ++j)
      params.dur_table.row(j) = dirichlet_draw(priors.dur_alpha, counts.row(j).transpose(), rng).transpose();
    return;
  }
  if (!has_dur_sticks(config)) return;
  const Vector zero = Vector::Zero(config.latent_dim + 1);
  std::vector<std::vector<RowPosterior>> rows(k);
  for (auto& r : rows) r.assign(dur - 1, RowPosterior(zero, priors.dur_reg_cov));
  const auto add = [&](int mode, const Vector& x, const PGAuxiliaries& aux) {
    for (Eigen::Index r = 0; r < aux.omega.size(); ++r)
      if (aux.omega(r) > 0.0) rows[mode][r].add(x, aux.kappa(r), aux.omega(r));
  };
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    const auto& traj = trajs[i];
    add(traj.s[0], params.init.mu_init[traj.s[0]], pg[i].duration[0]);
    for (std::size_t t = 1; t < traj.size(); ++t)
      if (traj.d[t - 1] == 1)
        add(traj.s[t], traj.x.row(static_cast<Eigen::Index>(t - 1)).transpose(), pg[i].duration[t]);
  }
  for (int j = 0; j < k; ++j)
    for (int r = 0; r < dur - 1; ++r)
      set_row(params.dur_reg[j], r, sample_info_gaussian(rows[j][r].posterior(), rng));
}

void update_params(ChainState& state, const std::vector<Matrix>& data, const ModelConfig& config,
                   const Priors& priors) {
  ModelParams& p = state.params;
  Rng& rng = state.rng;
  update_dynamics(p, state.trajectories, priors, rng);
  update_emissions(p, config, state.trajectories, data, priors, rng);
  update_initial(p, config, state.trajectories, state.pg, priors, rng);
  update_transition_matrix(p, config, state.trajectories, priors, rng);
  update_state_regression(p, config, state.trajectories, state.pg, priors, rng);
  update_duration_model(p, config, state.trajectories, state.pg, priors, rng);
}

SweepInfo sweep(ChainState& state, const std::vector<Matrix>& data, const ModelConfig& config,
                const Priors& priors, const SweepMask& mask) {
  if (data.size() != state.trajectories.size())
    throw std::invalid_argument("sweep: data and chain state disagree on the number of sequences");
  SweepInfo info;
  for (std::size_t i = 0; i < data.size(); ++i) {
    LatentTrajectory& traj = state.trajectories[i];
    try {
      if (mask.discrete) {
        const ForwardLattice lattice = forward_filter(state.params, config, data[i], traj.x);
        info.evidence_proxy += lattice.log_evidence();
        DiscretePath path = backward_sample(lattice, config, state.rng);
        traj.s = std::move(path.s);
        traj.d = std::move(path.d);
      }
      if (mask.continuous) {
        // omega must match the freshly drawn z before conditioning x on it.
        const PGSequence fresh = sample_pg_sequence(state.params, config, traj, state.rng);
        const BackwardMessages msg =
            backward_info_filter(state.params, config, data[i], traj.s, traj.d, fresh);
        traj.x = sample_pseudo_obs(msg, state.params, traj.s, state.rng);
      }
      state.pg[i] = sample_pg_sequence(state.params, config, traj, state.rng);
    } catch (const NumericalError& e) {
      throw NumericalError("sequence " + std::to_string(i) + ": " + e.what());
    }
  }
  if (mask.params) update_params(state, data, config, priors);
  ++state.iteration;
  return info;
}

double total_joint_log_density(const ChainState& state, const std::vector<Matrix>& data,
                               const ModelConfig& config) {
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i)
    total += joint_log_density(state.params, config, data[i], state.trajectories[i]);
  return total;
}

std::vector<std::int64_t> occupancy(const ChainState& state, const ModelConfig& config) {
  std::vector<std::int64_t> counts(config.num_modes, 0);
  for (const auto& traj : state.trajectories)
    for (int s : traj.s) ++counts[s];
  return counts;
}

ChainState initialize(const std::vector<Matrix>& data, const ModelConfig& config,
                      const Priors& priors, const InitOptions& options, Rng rng) {
  config.validate();
  check_data(data, config);
  priors.validate(config);
  ChainState state;
  state.rng = std::move(rng);
  const PcaResult pca = pca_project(data, config.latent_dim);

  std::vector<std::vector<int>> states;
  if (config.num_modes > 1) {
    states = fit_arhmm(pca.projected, config.num_modes, options.arhmm_restarts, state.rng).states;
  } else {
    for (const Matrix& y : data) states.emplace_back(static_cast<std::size_t>(y.rows()), 0);
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    LatentTrajectory traj;
    traj.s = std::move(states[i]);
    traj.d = durations_from_runs(traj.s, config.duration_support());
    traj.x = pca.projected[i];
    state.trajectories.push_back(std::move(traj));
  }
  state.params = ModelParams::allocate(config);
  state.pg.resize(data.size());
  for (std::size_t i = 0; i < data.size(); ++i)
    state.pg[i] = sample_pg_sequence(state.params, config, state.trajectories[i], state.rng);
  update_params(state, data, config, priors);

  if (options.scheme == InitScheme::kInitI) {
    const SweepMask frozen{false, false, true};
    for (int r = 0; r < options.frozen_sweeps; ++r) sweep(state, data, config, priors, frozen);
  }
  state.iteration = 0;
  return state;
}

std::vector<std::vector<int>> majority_vote(const FitResult& result) {
  std::vector<std::vector<int>> out;
  for (std::size_t i = 0; i < result.state.trajectories.size(); ++i) {
    if (result.kept == 0 || i >= result.votes.size()) {
      out.push_back(result.state.trajectories[i].s);
      continue;
    }
    const Eigen::MatrixXi& v = result.votes[i];
    std::vector<int> s(static_cast<std::size_t>(v.rows()));
    for (Eigen::Index t = 0; t < v.rows(); ++t) {
      int best = 0;
      for (Eigen::Index k = 1; k < v.cols(); ++k)
        if (v(t, k) > v(t, best)) best = static_cast<int>(k);
      s[t] = best;
    }
    out.push_back(std::move(s));
  }
  return out;
}

void continue_fit(FitResult& result, const std::vector<Matrix>& data, const ModelConfig& config,
                  const Priors& priors, const FitOptions& options, const CheckpointFn& checkpoint) {
  if (options.iterations < 0) throw ConfigError("iterations must be non-negative");
  if (!(options.burn_in >= 0.0 && options.burn_in < 1.0)) throw ConfigError("burn-in must lie in [0, 1)");
  const auto burn = static_cast<std::int64_t>(std::floor(options.burn_in * options.iterations));
  if (result.votes.size() != data.size()) {
    result.votes.clear();
    for (const Matrix& y : data) result.votes.push_back(Eigen::MatrixXi::Zero(y.rows(), config.num_modes));
  }
  while (result.state.iteration < options.iterations) {
    ChainState next = result.state;
    SweepInfo info;
    try {
      reset_jitter_events();
      info = sweep(next, data, config, priors);
    } catch (...) {
      if (checkpoint) checkpoint(result);
      throw;
    }
    result.state = std::move(next);
    Diagnostics& diag = result.diagnostics;
    diag.joint_log_density.push_back(total_joint_log_density(result.state, data, config));
    diag.evidence_proxy.push_back(info.evidence_proxy);
    diag.occupancy.push_back(occupancy(result.state, config));
    diag.jitter_events.push_back(static_cast<std::int64_t>(jitter_events()));

    const std::int64_t it = result.state.iteration;
    if (it > burn) {
      for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& s = result.state.trajectories[i].s;
        for (std::size_t t = 0; t < s.size(); ++t) ++result.votes[i](static_cast<Eigen::Index>(t), s[t]);
      }
      ++result.kept;
      if (options.snapshot_every > 0 && (it - burn) % options.snapshot_every == 0)
        result.snapshots.push_back(result.state);
    }
    if (checkpoint && options.checkpoint_every > 0 && it % options.checkpoint_every == 0)
      checkpoint(result);
  }
}

FitResult fit(const std::vector<Matrix>& data, const ModelConfig& config, const Priors& priors,
              const FitOptions& options, const InitOptions& init, Rng rng,
              const CheckpointFn& checkpoint) {
  FitResult result;
  result.state = initialize(data, config, priors, init, std::move(rng));
  continue_fit(result, data, config, priors, options, checkpoint);
  return result;
}

}  // namespace redslds
