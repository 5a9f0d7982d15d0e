#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/LU>

#include "doctest.h"
#include "oracles.hpp"
#include "redslds/errors.hpp"
#include "redslds/model.hpp"

using namespace redslds;

namespace {

const Variant kVariants[] = {Variant::kSlds, Variant::kRslds, Variant::kEdslds, Variant::kRedslds};

double rel_diff(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST_SUITE("model") {

TEST_CASE("variant flags") {
  for (Variant v : kVariants) {
    const auto c = ModelConfig::from_variant(v, 3, 2, 4, 7);
    CHECK(c.variant() == v);
    CHECK(parse_variant(variant_name(v)) == v);
    CHECK(c.duration_support() == (c.explicit_duration ? 7 : 1));
  }
  ModelConfig bad = ModelConfig::from_variant(Variant::kSlds, 2, 1, 1);
  bad.recurrent_duration = true;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK_THROWS_AS(parse_variant("hsmm"), ConfigError);
}

TEST_CASE("allocate populates exactly the variant's fields") {
  for (Variant v : kVariants) {
    const auto c = ModelConfig::from_variant(v, 3, 2, 4, 5);
    const auto p = ModelParams::allocate(c);
    CHECK_NOTHROW(p.validate(c));
    CHECK(p.state_reg.size() == (c.recurrent_state ? 3u : 0u));
    CHECK(p.dur_reg.size() == (c.recurrent_duration ? 3u : 0u));
  }
}

TEST_CASE("single mode without recurrences is a linear-Gaussian SSM") {
  Rng rng(201);
  const auto c = ModelConfig::from_variant(Variant::kSlds, 1, 2, 3);
  const auto p = oracle::random_params(c, rng);
  const auto sim = simulate(p, c, 30, rng);
  for (std::size_t t = 0; t < sim.traj.size(); ++t) {
    CHECK(sim.traj.s[t] == 0);
    CHECK(sim.traj.d[t] == 1);
  }
  // direct linear-Gaussian density
  const ModeParams& m = p.modes[0];
  const Matrix& x = sim.traj.x;
  double lgssm = oracle::gauss_logpdf(x.row(0).transpose(), p.init.mu_init[0], p.init.sigma_init[0]);
  for (Eigen::Index t = 0; t < x.rows(); ++t) {
    const Vector xt = x.row(t).transpose();
    if (t > 0) lgssm += oracle::gauss_logpdf(xt, m.a_mat * x.row(t - 1).transpose() + m.a_bias, m.q_cov);
    lgssm += oracle::gauss_logpdf(sim.y.row(t).transpose(), m.c_mat * xt + m.c_bias, m.s_cov);
  }
  CHECK(rel_diff(joint_log_density(p, c, sim.y, sim.traj), lgssm) < 1e-10);

  // with one mode the duration law only adds its own factors
  const auto ce = ModelConfig::from_variant(Variant::kEdslds, 1, 2, 3, 4);
  auto pe = ModelParams::allocate(ce);
  pe.modes = p.modes;
  pe.init.mu_init = p.init.mu_init;
  pe.init.sigma_init = p.init.sigma_init;
  pe.dur_table.row(0) << 0.1, 0.2, 0.3, 0.4;
  LatentTrajectory traj = sim.traj;
  double dur_terms = 0.0;
  for (std::size_t t = 0; t < traj.size(); ++t) {
    if (t == 0 || traj.d[t - 1] == 1) {
      traj.d[t] = std::min<int>(4, static_cast<int>(traj.size() - t));
      dur_terms += std::log(pe.dur_table(0, traj.d[t] - 1));
    } else {
      traj.d[t] = traj.d[t - 1] - 1;
    }
  }
  CHECK(rel_diff(joint_log_density(pe, ce, sim.y, traj) - dur_terms, lgssm) < 1e-10);
}

TEST_CASE("vanishing noise reproduces the deterministic recursion") {
  Rng rng(202);
  for (Variant v : kVariants) {
    const auto c = ModelConfig::from_variant(v, 2, 2, 3, 4);
    auto p = oracle::random_params(c, rng);
    for (auto& m : p.modes) {
      m.q_cov = 1e-12 * Matrix::Identity(2, 2);
      m.s_cov = 1e-12 * Matrix::Identity(3, 3);
    }
    for (auto& s : p.init.sigma_init) s = 1e-12 * Matrix::Identity(2, 2);
    const auto sim = simulate(p, c, 40, rng);
    Vector x = p.init.mu_init[sim.traj.s[0]];
    for (Eigen::Index t = 0; t < 40; ++t) {
      const ModeParams& m = p.modes[sim.traj.s[t]];
      if (t > 0) x = m.a_mat * x + m.a_bias;
      CHECK((sim.traj.x.row(t).transpose() - x).cwiseAbs().maxCoeff() < 1e-4);
      CHECK((sim.y.row(t).transpose() - m.c_mat * x - m.c_bias).cwiseAbs().maxCoeff() < 1e-4);
    }
  }
}

TEST_CASE("segments last exactly their first-step duration") {
  Rng rng(203);
  const auto c = ModelConfig::from_variant(Variant::kRedslds, 3, 2, 2, 5);
  const auto p = oracle::random_params(c, rng);
  const auto sim = simulate(p, c, 2000, rng);
  const auto& s = sim.traj.s;
  const auto& d = sim.traj.d;
  std::size_t t = 0;
  int checked = 0;
  while (t < s.size()) {
    const std::size_t len = static_cast<std::size_t>(d[t]);
    for (std::size_t u = t; u < std::min(s.size(), t + len); ++u) REQUIRE(s[u] == s[t]);
    if (t + len <= s.size()) {
      REQUIRE(d[t + len - 1] == 1);
      ++checked;
    }
    t += len;
  }
  CHECK(checked > 100);
}

TEST_CASE("countdown law in every simulated trajectory") {
  Rng rng(204);
  for (Variant v : kVariants) {
    const auto c = ModelConfig::from_variant(v, 3, 2, 2, 6);
    for (int rep = 0; rep < 20; ++rep) {
      const auto p = oracle::random_params(c, rng);
      const auto sim = simulate(p, c, 100, rng);
      REQUIRE(satisfies_countdown(sim.traj, c));
      REQUIRE(std::isfinite(joint_log_density(p, c, sim.y, sim.traj)));
    }
  }
}

TEST_CASE("joint_log_density") {
  Rng rng(205);
  SUBCASE("T = 1") {
    const auto c = ModelConfig::from_variant(Variant::kRedslds, 2, 2, 3, 3);
    const auto p = oracle::random_params(c, rng);
    const auto sim = simulate(p, c, 1, rng);
    const int s = sim.traj.s[0], d = sim.traj.d[0];
    const Vector x = sim.traj.x.row(0).transpose();
    const auto& reg = p.dur_reg[s];
    const double expected =
        std::log(p.init.pi0(s)) +
        std::log(oracle::stick_probs(reg.weights * p.init.mu_init[s] + reg.bias)[d - 1]) +
        oracle::gauss_logpdf(x, p.init.mu_init[s], p.init.sigma_init[s]) +
        oracle::gauss_logpdf(sim.y.row(0).transpose(), p.modes[s].c_mat * x + p.modes[s].c_bias, p.modes[s].s_cov);
    CHECK(rel_diff(joint_log_density(p, c, sim.y, sim.traj), expected) < 1e-12);
  }
  SUBCASE("agrees with the factor product on every (s, d) grid") {
    for (Variant v : kVariants) {
      const auto c = ModelConfig::from_variant(v, 2, 1, 1, 2);
      const int dur = c.duration_support();
      const auto p = oracle::random_params(c, rng);
      for (int rep = 0; rep < 5; ++rep) {
        const Matrix x = oracle::random_normal(3, 1, rng);
        const Matrix y = oracle::random_normal(3, 1, rng);
        const int grid = 2 * dur;
        for (int code = 0; code < grid * grid * grid; ++code) {
          LatentTrajectory traj;
          traj.x = x;
          int rest = code;
          for (int t = 0; t < 3; ++t) {
            traj.s.push_back((rest % grid) / dur);
            traj.d.push_back(rest % dur + 1);
            rest /= grid;
          }
          const double got = joint_log_density(p, c, y, traj);
          const double want = oracle::log_joint(p, c, y, x, traj.s, traj.d);
          if (std::isinf(want)) {
            CHECK(got == -std::numeric_limits<double>::infinity());
          } else {
            CHECK(rel_diff(got, want) < 1e-8);
          }
        }
      }
    }
  }
  SUBCASE("Dirac violation gives -inf") {
    const auto c = ModelConfig::from_variant(Variant::kRedslds, 2, 1, 1, 4);
    const auto p = oracle::random_params(c, rng);
    LatentTrajectory traj{{0, 1, 1}, {3, 2, 1}, Matrix::Zero(3, 1)};
    CHECK(joint_log_density(p, c, Matrix::Zero(3, 1), traj) == -std::numeric_limits<double>::infinity());
    traj.s = {0, 0, 0};
    traj.d = {3, 1, 1};
    CHECK(joint_log_density(p, c, Matrix::Zero(3, 1), traj) == -std::numeric_limits<double>::infinity());
    traj.d = {3, 2, 1};
    CHECK(std::isfinite(joint_log_density(p, c, Matrix::Zero(3, 1), traj)));
  }
}

TEST_CASE("transition_kernel") {
  Rng rng(206);
  SUBCASE("countdown branch is a point mass") {
    const auto c = ModelConfig::from_variant(Variant::kRedslds, 3, 2, 2, 4);
    const auto p = oracle::random_params(c, rng);
    const Matrix k = transition_kernel(1, 3, Vector::Ones(2), p, c);
    CHECK(k(1, 1) == 1.0);
    CHECK(k.sum() == 1.0);
  }
  SUBCASE("zero weights give uniform sticks") {
    const auto c = ModelConfig::from_variant(Variant::kRedslds, 2, 2, 2, 2);
    const auto p = ModelParams::allocate(c);
    const Matrix k = transition_kernel(0, 1, Vector::Constant(2, 3.0), p, c);
    CHECK((k.array() - 0.25).abs().maxCoeff() < 1e-15);
  }
  SUBCASE("normalization") {
    for (Variant v : kVariants) {
      const auto c = ModelConfig::from_variant(v, 3, 2, 2, 5);
      const auto p = oracle::random_params(c, rng);
      for (int i = 0; i < 100; ++i) {
        const Vector x = oracle::random_normal(2, 1, rng, 3.0);
        const int s = static_cast<int>(rng.uniform() * 3);
        REQUIRE(std::abs(transition_kernel(s, 1, x, p, c).sum() - 1.0) < 1e-12);
      }
    }
  }
  SUBCASE("matches the direct product of stick laws") {
    const auto c = ModelConfig::from_variant(Variant::kRedslds, 3, 2, 2, 4);
    const auto p = oracle::random_params(c, rng);
    const Vector x = oracle::random_normal(2, 1, rng);
    const Matrix k = transition_kernel(2, 1, x, p, c);
    const auto ps = oracle::stick_probs(p.state_reg[2].weights * x + p.state_reg[2].bias);
    for (int i = 0; i < 3; ++i) {
      const auto pd = oracle::stick_probs(p.dur_reg[i].weights * x + p.dur_reg[i].bias);
      for (int j = 0; j < 4; ++j) CHECK(std::abs(k(i, j) - ps[i] * pd[j]) < 1e-14);
    }
  }
}

TEST_CASE("without explicit durations the kernel equals the D_max = 1 model") {
  Rng rng(207);
  const std::pair<Variant, Variant> pairs[] = {{Variant::kSlds, Variant::kEdslds},
                                               {Variant::kRslds, Variant::kRedslds}};
  for (const auto& [plain, timed] : pairs) {
    const auto c0 = ModelConfig::from_variant(plain, 3, 2, 2, 1);
    const auto c1 = ModelConfig::from_variant(timed, 3, 2, 2, 1);
    const auto p0 = oracle::random_params(c0, rng);
    auto p1 = ModelParams::allocate(c1);
    p1.modes = p0.modes;
    p1.init = p0.init;
    p1.trans = p0.trans;
    p1.state_reg = p0.state_reg;
    for (int i = 0; i < 20; ++i) {
      const Vector x = oracle::random_normal(2, 1, rng, 2.0);
      for (int s = 0; s < 3; ++s) {
        const Matrix a = transition_kernel(s, 1, x, p0, c0);
        const Matrix b = transition_kernel(s, 1, x, p1, c1);
        REQUIRE(a.cols() == 1);
        REQUIRE(b.cols() == 1);
        CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
      }
    }
  }
}

TEST_CASE("self-generated data never has -inf density") {
  Rng rng(208);
  const auto c = ModelConfig::from_variant(Variant::kRedslds, 2, 2, 2, 4);
  const auto p = oracle::random_params(c, rng);
  std::vector<double> vals;
  for (int i = 0; i < 1000; ++i) {
    const auto sim = simulate(p, c, 20, rng);
    vals.push_back(joint_log_density(p, c, sim.y, sim.traj));
    REQUIRE(std::isfinite(vals.back()));
  }
  const auto ms = oracle::mean_se(vals);
  CHECK(std::isfinite(ms.mean));
  CHECK(std::isfinite(ms.se));
  CHECK(ms.se > 0.0);
}

TEST_CASE("shape mismatches are rejected") {
  Rng rng(209);
  const auto c = ModelConfig::from_variant(Variant::kSlds, 2, 2, 3);
  auto p = oracle::random_params(c, rng);
  p.modes[1].c_mat = Matrix::Zero(2, 2);
  CHECK_THROWS_AS(simulate(p, c, 5, rng), ConfigError);
}

}  // TEST_SUITE
