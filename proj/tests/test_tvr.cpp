#include <doctest.h>

#include <cmath>
#include <vector>

#include "camr/rng.hpp"
#include "camr/tvr.hpp"

using namespace camr;

TEST_CASE("constant series differentiates to zero") {
  TvrConfig cfg;
  cfg.dt = 0.1;
  const Eigen::VectorXd z = Eigen::VectorXd::Constant(50, 3.7);
  const Eigen::VectorXd u = tvr_derivative(z, cfg);
  CHECK(u.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("ramp recovers a unit derivative") {
  TvrConfig cfg;
  cfg.alpha = 1e-3;
  cfg.dt = 0.1;
  const int t_count = 200;
  Eigen::VectorXd z(t_count);
  for (int k = 0; k < t_count; ++k) z[k] = k * cfg.dt;
  const Eigen::VectorXd u = tvr_derivative(z, cfg);
  for (int k = 2; k < t_count - 2; ++k) CHECK(std::abs(u[k] - 1.0) < 1e-2);
}

TEST_CASE("noisy sine tracks the analytic derivative") {
  TvrConfig cfg;
  cfg.alpha = 0.05;
  cfg.iterations = 40;
  cfg.dt = 0.1;
  cfg.small_threshold = 1e-5;
  const int t_count = 200;
  const double omega = 2.0 * 3.14159265358979324 / 10.0;
  double rmse_sum = 0.0;
  for (int seed = 0; seed < 10; ++seed) {
    Rng rng(700 + seed);
    Eigen::VectorXd z(t_count);
    for (int k = 0; k < t_count; ++k)
      z[k] = std::sin(omega * k * cfg.dt) + rng.normal(0.0, 0.1);
    const Eigen::VectorXd u = tvr_derivative(z, cfg);
    double sq = 0.0;
    int n = 0;
    for (int k = 10; k < t_count - 10; ++k) {
      const double truth = omega * std::cos(omega * k * cfg.dt);
      sq += (u[k] - truth) * (u[k] - truth);
      ++n;
    }
    rmse_sum += std::sqrt(sq / n);
  }
  CHECK(rmse_sum / 10.0 < 0.1);
}

TEST_CASE("objective is non-increasing across iterations") {
  TvrConfig cfg;
  cfg.alpha = 1.0;
  cfg.iterations = 15;
  cfg.dt = 0.1;
  Rng rng(11);
  Eigen::VectorXd z(120);
  for (int k = 0; k < 120; ++k) z[k] = std::sin(0.3 * k) + rng.normal(0.0, 0.2);
  std::vector<double> trace;
  tvr_derivative(z, cfg, &trace);
  REQUIRE(trace.size() == 16);
  for (std::size_t i = 1; i < trace.size(); ++i)
    CHECK(trace[i] <= trace[i - 1] * (1.0 + 1e-12) + 1e-12);
}

TEST_CASE("thresholding leaves no small nonzeros") {
  TvrConfig cfg;
  cfg.alpha = 5.0;
  cfg.dt = 0.1;
  cfg.small_threshold = 1e-3;
  Rng rng(21);
  Eigen::VectorXd z(150);
  for (int k = 0; k < 150; ++k) z[k] = rng.normal(0.0, 0.05);
  const Eigen::VectorXd u = tvr_derivative(z, cfg);
  for (int k = 0; k < u.size(); ++k)
    CHECK((u[k] == 0.0 || std::abs(u[k]) >= cfg.small_threshold));
}

TEST_CASE("scale equivariance with alpha scaled by c") {
  TvrConfig cfg;
  cfg.alpha = 0.2;
  cfg.dt = 0.1;
  cfg.small_threshold = 0.0;
  Rng rng(31);
  Eigen::VectorXd z(100);
  for (int k = 0; k < 100; ++k) z[k] = std::sin(0.2 * k) + rng.normal(0.0, 0.1);
  const double c = 3.0;
  TvrConfig scaled = cfg;
  scaled.alpha = c * cfg.alpha;
  const Eigen::VectorXd u = tvr_derivative(z, cfg);
  const Eigen::VectorXd uc = tvr_derivative(c * z, scaled);
  CHECK((uc - c * u).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("input validation") {
  TvrConfig cfg;
  cfg.dt = 0.1;
  Eigen::VectorXd two(2);
  two << 1.0, 2.0;
  CHECK_THROWS_AS(tvr_derivative(two, cfg), std::invalid_argument);
  Eigen::VectorXd bad(5);
  bad << 1.0, 2.0, std::nan(""), 4.0, 5.0;
  CHECK_THROWS_AS(tvr_derivative(bad, cfg), std::invalid_argument);
  TvrConfig wrong = cfg;
  wrong.iterations = 0;
  Eigen::VectorXd ok = Eigen::VectorXd::Zero(10);
  CHECK_THROWS_AS(tvr_derivative(ok, wrong), std::invalid_argument);
}

TEST_CASE("antidifferentiate") {
  SUBCASE("zero derivative keeps the anchor") {
    const Eigen::VectorXd out = antidifferentiate(Eigen::VectorXd::Zero(7), 2.5, 0.1);
    for (int k = 0; k < 7; ++k) CHECK(out[k] == 2.5);
  }
  SUBCASE("composition with tvr_derivative reproduces a ramp") {
    TvrConfig cfg;
    cfg.alpha = 1e-3;
    cfg.dt = 0.1;
    Eigen::VectorXd z(200);
    for (int k = 0; k < 200; ++k) z[k] = 0.5 * k * cfg.dt;
    const Eigen::VectorXd back =
        antidifferentiate(tvr_derivative(z, cfg), z[0], cfg.dt);
    double sq = 0.0;
    for (int k = 0; k < 200; ++k) sq += (back[k] - z[k]) * (back[k] - z[k]);
    CHECK(std::sqrt(sq / 200) < 0.05);
  }
  SUBCASE("linear in the derivative") {
    Rng rng(41);
    Eigen::VectorXd a(20), b(20);
    for (int k = 0; k < 20; ++k) {
      a[k] = rng.normal();
      b[k] = rng.normal();
    }
    const Eigen::VectorXd sum = antidifferentiate(a + b, 0.0, 0.1);
    const Eigen::VectorXd parts =
        antidifferentiate(a, 0.0, 0.1) + antidifferentiate(b, 0.0, 0.1);
    CHECK((sum - parts).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("build_training_pairs") {
  TvrConfig cfg;
  cfg.alpha = 1e-3;
  cfg.dt = 0.1;
  const int t_count = 200;
  std::vector<double> times(t_count);
  for (int k = 0; k < t_count; ++k) times[k] = 10.0 + k * cfg.dt;

  SUBCASE("constant parameters give zero targets and constant inputs") {
    Eigen::MatrixXd theta = Eigen::MatrixXd::Constant(t_count, 5, 1.25);
    const auto pairs = build_training_pairs(times, theta, cfg);
    CHECK(pairs.inputs.rows() == t_count);
    CHECK(pairs.inputs.cols() == 5);
    CHECK(pairs.targets.cwiseAbs().maxCoeff() == 0.0);
    CHECK((pairs.inputs.array() - 1.25).abs().maxCoeff() < 1e-12);
  }

  SUBCASE("quadratic component has a near-linear derivative") {
    Eigen::MatrixXd theta(t_count, 2);
    for (int k = 0; k < t_count; ++k) {
      const double t = k * cfg.dt;
      theta(k, 0) = 0.1 * t * t;
      theta(k, 1) = 3.0;
    }
    const auto pairs = build_training_pairs(times, theta, cfg);
    for (int k = 20; k < t_count - 20; ++k) {
      const double truth = 0.2 * (k * cfg.dt);
      CHECK(std::abs(pairs.targets(k, 0) - truth) <= 0.05 * std::abs(truth));
    }
    CHECK(pairs.targets.col(1).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("shape and grid validation") {
    Eigen::MatrixXd theta(3, 2);
    theta.setZero();
    CHECK_THROWS_AS(build_training_pairs({0.0, 0.1}, theta, cfg), std::invalid_argument);
  }
}
