#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/LU>

#include "doctest.h"
#include "oracles.hpp"
#include "redslds/stick_break.hpp"

using namespace redslds;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

Vector random_logits(Eigen::Index n, Rng& rng, double half_width) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = half_width * (2.0 * rng.uniform() - 1.0);
  return v;
}

}  // namespace

TEST_SUITE("stick_break") {

TEST_CASE("pi_sb worked examples") {
  const Vector p0 = pi_sb(vec({0, 0, 0}));
  CHECK(p0.size() == 4);
  CHECK(p0(0) == doctest::Approx(0.5));
  CHECK(p0(1) == doctest::Approx(0.25));
  CHECK(p0(2) == doctest::Approx(0.125));
  CHECK(p0(3) == doctest::Approx(0.125));

  const Vector v = vec({1, -1});
  const auto ref = oracle::stick_probs(v);
  const Vector p1 = pi_sb(v);
  for (int k = 0; k < 3; ++k) CHECK(std::abs(p1(k) - ref[k]) < 1e-15);
  CHECK(std::abs(p1(0) - 0.731059) < 1e-5);
  CHECK(std::abs(p1(1) - 0.072330) < 1e-5);
  CHECK(std::abs(p1(2) - 0.196612) < 1e-5);

  const Vector p2 = pi_sb(vec({40, 0}));
  CHECK(std::abs(p2(0) - 1.0) < 1e-15);
  CHECK(std::abs(p2(1)) < 1e-15);
  CHECK(std::abs(p2(2)) < 1e-15);
}

TEST_CASE("pi_sb normalization") {
  Rng rng(101);
  for (int i = 0; i < 10000; ++i) {
    const Vector v = random_logits(1 + static_cast<Eigen::Index>(rng.uniform() * 8), rng, 10.0);
    REQUIRE(std::abs(pi_sb(v).sum() - 1.0) < 1e-12);
  }
}

TEST_CASE("log_pmf_sb") {
  CHECK(log_pmf_sb(0, vec({0, 0, 0})) == doctest::Approx(std::log(0.5)));
  CHECK(std::abs(log_pmf_sb(2, vec({1, -1})) - std::log(0.196612)) < 1e-5);

  Rng rng(102);
  for (int i = 0; i < 100; ++i) {
    const Vector v = random_logits(4, rng, 6.0);
    const auto k = static_cast<Eigen::Index>(rng.uniform() * 5);
    CHECK(std::abs(std::exp(log_pmf_sb(k, v)) - pi_sb(v)(k)) < 1e-12);
    CHECK(std::abs(log_pi_sb(v)(k) - log_pmf_sb(k, v)) < 1e-12);
  }
}

TEST_CASE("log_sigmoid is finite at large magnitudes") {
  CHECK(log_sigmoid(800.0) == doctest::Approx(0.0));
  CHECK(log_sigmoid(-800.0) == doctest::Approx(-800.0));
  CHECK(std::isfinite(log_pmf_sb(1, vec({500.0, -500.0}))));
}

TEST_CASE("kappa_vec") {
  // outcomes are 0-based here
  CHECK(kappa_vec(1, 4) == vec({-0.5, 0.5, 0.0}));
  CHECK(kappa_vec(0, 4) == vec({0.5, 0.0, 0.0}));
  CHECK(kappa_vec(3, 4) == vec({-0.5, -0.5, -0.5}));
  CHECK(kappa_vec(0, 1).size() == 0);
}

TEST_CASE("sample_pg_aux") {
  Rng rng(103);
  SUBCASE("first category fires only the first stick") {
    for (int i = 0; i < 50; ++i) {
      const auto aux = sample_pg_aux(0, random_logits(3, rng, 3.0), rng);
      CHECK(aux.omega(0) > 0.0);
      CHECK(aux.omega(1) == 0.0);
      CHECK(aux.omega(2) == 0.0);
    }
  }
  SUBCASE("last category fires every stick") {
    for (int i = 0; i < 50; ++i) {
      const auto aux = sample_pg_aux(3, random_logits(3, rng, 3.0), rng);
      CHECK((aux.omega.array() > 0.0).all());
    }
  }
  SUBCASE("first-stick omega has the PG(1, 2) mean") {
    std::vector<double> w(100000);
    for (auto& x : w) x = sample_pg_aux(1, vec({2.0, 0.0}), rng).omega(0);
    const auto ms = oracle::mean_se(w);
    CHECK(std::abs(ms.mean - std::tanh(1.0) / 4.0) < 4 * ms.se);
  }
}

TEST_CASE("regression_row_posterior") {
  SUBCASE("empty data returns the prior") {
    Vector mu(2);
    mu << 0.3, -1.0;
    Matrix cov(2, 2);
    cov << 2.0, 0.5, 0.5, 1.0;
    const auto post = regression_row_posterior(mu, cov, {});
    CHECK((post.lambda - cov.inverse()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((post.theta - cov.inverse() * mu).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("single datum") {
    const std::vector<RegressionDatum> data{{vec({1.0}), 0.5, 1.0}};
    const auto post = regression_row_posterior(Vector::Zero(2), Matrix::Identity(2, 2), data);
    // I + omega (x,1)(x,1)' and kappa (x,1)
    Matrix lam(2, 2);
    lam << 2.0, 1.0, 1.0, 2.0;
    CHECK((post.lambda - lam).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((post.theta - vec({0.5, 0.5})).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("large data approaches weighted least squares") {
    Rng rng(104);
    const int n = 10000;
    std::vector<RegressionDatum> data;
    Matrix design(n, 3);
    Vector target(n);
    for (int i = 0; i < n; ++i) {
      const Vector x = oracle::random_normal(2, 1, rng);
      const double omega = 0.1 + rng.uniform();
      const double kappa = omega * (0.7 * x(0) - 0.2 * x(1) + 0.4) + 0.3 * rng.normal();
      data.push_back({x, kappa, omega});
      const double sw = std::sqrt(omega);
      design.row(i) << sw * x(0), sw * x(1), sw;
      target(i) = kappa / sw;
    }
    const Vector wls = oracle::least_squares(design, target);
    const auto post = regression_row_posterior(Vector::Zero(3), Matrix::Identity(3, 3), data);
    const Vector mean = post.lambda.llt().solve(post.theta);
    CHECK((mean - wls).cwiseAbs().maxCoeff() < 1.0 / std::sqrt(double(n)));
  }
  SUBCASE("data order does not matter") {
    Rng rng(105);
    std::vector<RegressionDatum> data;
    for (int i = 0; i < 200; ++i)
      data.push_back({oracle::random_normal(3, 1, rng), rng.normal(), 0.05 + rng.uniform()});
    const auto a = regression_row_posterior(Vector::Zero(4), 2.0 * Matrix::Identity(4, 4), data);
    std::shuffle(data.begin(), data.end(), rng.engine());
    const auto b = regression_row_posterior(Vector::Zero(4), 2.0 * Matrix::Identity(4, 4), data);
    CHECK((a.lambda - b.lambda).cwiseAbs().maxCoeff() < 1e-12 * a.lambda.cwiseAbs().maxCoeff());
    CHECK((a.theta - b.theta).cwiseAbs().maxCoeff() < 1e-12 * a.theta.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("PG marginalization reproduces the stick likelihood") {
  // E_{omega ~ PG(1, 0)}[exp(kappa v - omega v^2 / 2)] is proportional to
  // pi_sb(v)[s]; compare the ratio at two regressor values.
  Rng rng(106);
  const double w = 0.8, b = -0.3;
  const double x1 = -1.2, x2 = 2.0;
  const double v1 = w * x1 + b, v2 = w * x2 + b;
  const int outcome = 0;
  const double kappa = kappa_vec(outcome, 2)(0);
  const int n = 1000000;
  std::vector<double> f1(n), f2(n);
  for (int i = 0; i < n; ++i) {
    const double omega = sample_pg({1, 0.0}, rng);
    f1[i] = std::exp(kappa * v1 - 0.5 * omega * v1 * v1);
    f2[i] = std::exp(kappa * v2 - 0.5 * omega * v2 * v2);
  }
  const auto m1 = oracle::mean_se(f1), m2 = oracle::mean_se(f2);
  const double ratio = m1.mean / m2.mean;
  const double expected = pi_sb(Vector::Constant(1, v1))(outcome) / pi_sb(Vector::Constant(1, v2))(outcome);
  // delta-method bound, ignoring the (positive) covariance between f1 and f2
  const double se = ratio * std::sqrt(std::pow(m1.se / m1.mean, 2) + std::pow(m2.se / m2.mean, 2));
  CHECK(std::abs(ratio - expected) < 4 * se);
}

}  // TEST_SUITE
