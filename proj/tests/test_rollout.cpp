#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "camr/io.hpp"
#include "camr/rollout.hpp"
#include "camr/rng.hpp"

using namespace camr;

namespace {

// Parameters-only model with neutral standardizations computing an exact
// linear map y = gain * theta via relu(x) - relu(-x).
SubnetModel linear_model(int d_hat, double gain) {
  SubnetModel m;
  m.spec.hidden = {2 * d_hat};
  m.spec.dropout_rate = 0.0;
  m.spec.weight_cutoff = 10.0;
  m.spec.mode = InputMode::ParametersOnly;
  m.spec.out_dim = d_hat;
  m.n_v = 2;
  m.q = 1;
  m.lf = zero_latent_fourier(1, default_frequencies(3, 40.0));
  m.input_std.mean = Eigen::VectorXd::Zero(d_hat);
  m.input_std.std = Eigen::VectorXd::Ones(d_hat);
  m.target_mean = Eigen::VectorXd::Zero(d_hat);
  m.target_std = Eigen::VectorXd::Ones(d_hat);
  Eigen::MatrixXd w1(2 * d_hat, d_hat);
  w1 << Eigen::MatrixXd::Identity(d_hat, d_hat),
      -Eigen::MatrixXd::Identity(d_hat, d_hat);
  Eigen::MatrixXd w2(d_hat, 2 * d_hat);
  w2 << gain * Eigen::MatrixXd::Identity(d_hat, d_hat),
      -gain * Eigen::MatrixXd::Identity(d_hat, d_hat);
  m.weights = {w1, w2};
  m.biases = {Eigen::VectorXd::Zero(2 * d_hat), Eigen::VectorXd::Zero(d_hat)};
  return m;
}

SubnetModel constant_model(const Eigen::VectorXd& output) {
  SubnetModel m = linear_model(static_cast<int>(output.size()), 0.0);
  m.target_mean = output;
  return m;
}

StandardParams theta_2v1q(double b0, double b1, double w0, double w1, double s2) {
  StandardParams sp;
  sp.b_hat = Eigen::Vector2d(b0, b1);
  sp.w_hat = Eigen::MatrixXd(2, 1);
  sp.w_hat << w0, w1;
  sp.sigma2 = s2;
  return sp;
}

}  // namespace

TEST_CASE("euler_rollout") {
  const StandardParams theta0 = theta_2v1q(1.0, -0.5, 0.3, 0.2, 0.4);

  SUBCASE("zero model holds the state constant") {
    const auto model = constant_model(Eigen::VectorXd::Zero(5));
    const auto series = euler_rollout(model, theta0, 10.0, 2.0, 0.1);
    REQUIRE(series.params.size() == 21);
    for (const auto& p : series.params)
      CHECK((p.pack() - theta0.pack()).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("linear decay matches the exponential within the Euler bound") {
    const auto model = linear_model(5, -1.0);
    const double dt = 0.01;
    const auto series = euler_rollout(model, theta0, 0.0, 2.0, dt);
    const double norm0 = theta0.pack().norm();
    for (std::size_t k = 0; k < series.params.size(); ++k) {
      const double t = series.times[k];
      const Eigen::VectorXd exact = std::exp(-t) * theta0.pack();
      const double bound = 0.5 * dt * t * std::exp(-t) * norm0;
      CHECK((series.params[k].pack() - exact).norm() <= 1.1 * bound + 1e-12);
    }
  }

  SUBCASE("halving dt halves the global error") {
    const auto model = linear_model(5, -1.0);
    auto error_at = [&](double dt) {
      const auto series = euler_rollout(model, theta0, 0.0, 2.0, dt);
      const Eigen::VectorXd exact = std::exp(-2.0) * theta0.pack();
      return (series.params.back().pack() - exact).norm();
    };
    const double ratio = error_at(0.02) / error_at(0.01);
    CHECK(ratio == doctest::Approx(2.0).epsilon(0.15));
  }

  SUBCASE("bad step size") {
    const auto model = constant_model(Eigen::VectorXd::Zero(5));
    CHECK_THROWS_AS(euler_rollout(model, theta0, 0.0, 1.0, 0.0), std::invalid_argument);
  }
}

TEST_CASE("mse") {
  ThetaSeries a, b;
  a.n_v = b.n_v = 2;
  a.q = b.q = 1;
  for (int k = 0; k < 2; ++k) {
    a.times.push_back(0.1 * k);
    b.times.push_back(0.1 * k);
    a.params.push_back(theta_2v1q(1, 2, 3, 4, 5));
    b.params.push_back(theta_2v1q(1, 2, 3, 4, 5));
  }
  CHECK(mse(a, b) == 0.0);

  // constant offset of delta in one component contributes delta^2
  b.params[0].b_hat[0] += 0.5;
  b.params[1].b_hat[0] += 0.5;
  CHECK(mse(a, b) == doctest::Approx(0.25));

  // hand two-point example: (1/2)(|d1|^2 + |d2|^2)
  b.params[0] = theta_2v1q(1, 2, 3, 4, 6);    // |d|^2 = 1
  b.params[1] = theta_2v1q(1, 1, 3, 4, 5.5);  // |d|^2 = 1.25
  CHECK(mse(a, b) == doctest::Approx(0.5 * (1.0 + 1.25)));

  b.times[1] = 0.3;
  CHECK_THROWS_AS(mse(a, b), std::invalid_argument);
}

TEST_CASE("range_of_oscillations") {
  SUBCASE("constant ensemble collapses to a point") {
    EnsembleDataset ds;
    ds.species = {"Ca_Cyt"};
    for (int t = 0; t < 10; ++t) ds.times.push_back(t * 0.1);
    ds.data = {Eigen::MatrixXd::Constant(10, 1, 42.0),
               Eigen::MatrixXd::Constant(10, 1, 42.0)};
    ds.seeds = {1, 2};
    const auto r = range_of_oscillations(ds, "Ca_Cyt", {0.0, 1.0}, 1.0, 100, 5);
    CHECK(r.c_minus_min == doctest::Approx(42.0));
    CHECK(r.c_plus_max == doctest::Approx(42.0));
  }

  SUBCASE("noise-free sine spans [-1, 1]") {
    EnsembleDataset ds;
    ds.species = {"Ca_Cyt"};
    const int t_count = 1000;
    Eigen::MatrixXd traj(t_count, 1);
    for (int t = 0; t < t_count; ++t) {
      ds.times.push_back(t * 0.01);
      traj(t, 0) = std::sin(2.0 * 3.14159265358979324 * t * 0.01);
    }
    ds.data = {traj};
    ds.seeds = {1};
    const auto r = range_of_oscillations(ds, "Ca_Cyt", {0.0, 10.0}, 1.0, 50, 5);
    CHECK(r.c_minus_min == doctest::Approx(-1.0).epsilon(1e-3));
    CHECK(r.c_plus_max == doctest::Approx(1.0).epsilon(1e-3));
  }

  SUBCASE("gaussian ensemble brackets mu +/- sigma") {
    Rng rng(33);
    const double mu = 2.0, sigma = 0.3;
    EnsembleDataset ds;
    ds.species = {"Ca_Cyt"};
    ds.times = {0.0, 0.1, 0.2};
    for (int i = 0; i < 400; ++i) {
      ds.data.push_back(Eigen::MatrixXd::Constant(3, 1, rng.normal(mu, sigma)));
      ds.seeds.push_back(i);
    }
    const auto r = range_of_oscillations(ds, "Ca_Cyt", {0.0, 0.2}, 1.0, 500, 7);
    CHECK(r.ci_minus_lo <= mu - sigma);
    CHECK(r.ci_minus_hi >= mu - sigma);
    CHECK(r.ci_plus_lo <= mu + sigma);
    CHECK(r.ci_plus_hi >= mu + sigma);
  }

  SUBCASE("empty window is a domain error") {
    EnsembleDataset ds;
    ds.species = {"Ca_Cyt"};
    ds.times = {0.0};
    ds.data = {Eigen::MatrixXd::Constant(1, 1, 1.0)};
    ds.seeds = {1};
    CHECK_THROWS_AS(range_of_oscillations(ds, "Ca_Cyt", {5.0, 6.0}, 1.0, 10, 1),
                    std::invalid_argument);
  }
}

TEST_CASE("reconstruct_observables") {
  SUBCASE("hand example with a diagonal transform") {
    StandardizingTransform tr;
    tr.species = {"A", "B"};
    tr.m = Eigen::Vector2d(10.0, 20.0);
    tr.v = Eigen::Vector2d(4.0, 9.0);
    const StandardParams sp = theta_2v1q(1.0, -1.0, 2.0, 0.0, 0.25);
    const auto obs = reconstruct_observables(sp, tr, {0, 1});
    CHECK(obs.mean[0] == doctest::Approx(12.0));
    CHECK(obs.mean[1] == doctest::Approx(17.0));
    CHECK(obs.cov(0, 0) == doctest::Approx(4.0 * 4.25));
    CHECK(obs.cov(1, 1) == doctest::Approx(9.0 * 0.25));
    CHECK(obs.cov(0, 1) == doctest::Approx(0.0));
  }

  SUBCASE("zero loading and noise give zero covariance") {
    StandardizingTransform tr;
    tr.species = {"A", "B"};
    tr.m = Eigen::Vector2d::Zero();
    tr.v = Eigen::Vector2d::Ones();
    const auto obs =
        reconstruct_observables(theta_2v1q(0.3, 0.4, 0.0, 0.0, 0.0), tr, {0, 1});
    CHECK(obs.cov.cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("ML estimate reconstructs the sample mean") {
    Rng rng(44);
    Eigen::MatrixXd raw(300, 2);
    for (int i = 0; i < 300; ++i) {
      raw(i, 0) = 1000.0 + 40.0 * rng.normal();
      raw(i, 1) = 3000.0 + 10.0 * rng.normal();
    }
    StandardizingTransform tr;
    tr.species = {"A", "B"};
    tr.m = raw.colwise().mean();
    Eigen::MatrixXd centered = raw.rowwise() - tr.m.transpose();
    tr.v = centered.array().square().colwise().mean();
    const Eigen::VectorXd div = tr.divisors();
    const Eigen::MatrixXd standardized =
        centered.array().rowwise() / div.transpose().array();
    const auto sp = ml_estimate(standardized, 1);
    const auto obs = reconstruct_observables(sp, tr, {0, 1});
    CHECK(obs.mean[0] == doctest::Approx(raw.col(0).mean()).epsilon(1e-10));
    CHECK(obs.mean[1] == doctest::Approx(raw.col(1).mean()).epsilon(1e-10));
  }
}

TEST_CASE("moment term decomposition") {
  const StandardParams theta0 = theta_2v1q(0.8, -0.2, 0.5, 0.1, 0.3);

  SUBCASE("zero dynamics produce zero terms") {
    const auto model = constant_model(Eigen::VectorXd::Zero(5));
    const auto rollout = euler_rollout(model, theta0, 0.0, 1.0, 0.1);
    const auto terms = moment_term_decomposition(model, rollout, 0);
    CHECK(terms.cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("single nonzero b-component flows through the b term") {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(5);
    f[0] = 0.7;
    const auto model = constant_model(f);
    const auto rollout = euler_rollout(model, theta0, 0.0, 1.0, 0.1);
    const auto terms = moment_term_decomposition(model, rollout, 0);
    for (Eigen::Index r = 0; r < terms.rows(); ++r) {
      CHECK(terms(r, 0) == doctest::Approx(0.7));
      CHECK(terms(r, 1) == 0.0);
      CHECK(terms(r, 3) == 0.0);
      CHECK(terms(r, 5) == doctest::Approx(0.7));
    }
  }

  SUBCASE("terms sum to the total derivative along a generic model") {
    auto model = linear_model(5, -0.4);
    // non-trivial latent trajectory
    model.lf.a_mu(0, 1) = 0.6;
    model.lf.b_sigma(0, 2) = -0.4;
    const auto rollout = euler_rollout(model, theta0, 0.0, 2.0, 0.05);
    const auto terms = moment_term_decomposition(model, rollout, 1);
    for (Eigen::Index r = 0; r < terms.rows(); ++r) {
      const double total = terms(r, 5);
      CHECK(std::abs(terms.row(r).head(5).sum() - total) < 1e-6);
    }
    // the total is the observable's finite-difference derivative along the
    // Euler rollout (exact for Euler up to rounding)
    for (std::size_t k = 0; k + 1 < rollout.params.size(); ++k) {
      const double fd =
          (rollout.params[k + 1].b_hat[1] - rollout.params[k].b_hat[1]) / 0.05;
      CHECK(terms(k, 5) == doctest::Approx(fd).epsilon(1e-9));
    }
  }
}

TEST_CASE("figure data emission") {
  const auto dir = std::filesystem::temp_directory_path() / "camr_fig_test";
  std::filesystem::remove_all(dir);

  SUBCASE("range diagram schema") {
    FigureData data;
    RangeDiagramRow row;
    row.source = "stochastic";
    row.condition = 0.5;
    row.range.c_minus_min = 0.1;
    row.range.c_plus_max = 0.9;
    data.range_rows = {row};
    const auto path = emit_figure_data(FigureKind::RangeDiagram, data, dir);
    const auto csv = io::read_csv(path);
    CHECK(csv.header == std::vector<std::string>{"source", "condition", "c_minus_min",
                                                 "c_plus_max", "ci_minus_lo",
                                                 "ci_minus_hi", "ci_plus_lo",
                                                 "ci_plus_hi"});
    CHECK(csv.rows.size() == 1);
    CHECK(csv.as_double(0, 2) == doctest::Approx(0.1));
  }

  SUBCASE("mse curve schema") {
    FigureData data;
    data.mse_rows = {{"reaction_candidates", 0.7, true, 0.012, 3}};
    const auto path = emit_figure_data(FigureKind::MseCurves, data, dir);
    const auto csv = io::read_csv(path);
    CHECK(csv.header ==
          std::vector<std::string>{"model", "condition", "training", "seed", "mse"});
    CHECK(csv.rows[0][0] == "reaction_candidates");
  }

  SUBCASE("parameter slices and term decomposition schemas") {
    FigureData data;
    data.theta_ml.n_v = data.theta_int.n_v = 2;
    data.theta_ml.q = data.theta_int.q = 1;
    data.theta_ml.times = {0.0};
    data.theta_int.times = {0.0};
    data.theta_ml.params = {theta_2v1q(1, 2, 3, 4, 5)};
    data.theta_int.params = {theta_2v1q(1, 2, 3, 4, 5)};
    const auto slices = emit_figure_data(FigureKind::ParameterSlices, data, dir);
    CHECK(io::read_csv(slices).header.size() == 11);  // t + 2 * D_hat

    FigureData term;
    term.term_times = {0.0, 0.1};
    term.terms = Eigen::MatrixXd::Zero(2, 6);
    const auto terms_path = emit_figure_data(FigureKind::TermDecomposition, term, dir);
    const auto csv = io::read_csv(terms_path);
    CHECK(csv.header == std::vector<std::string>{"t", "term_b", "term_W", "term_sigma2",
                                                 "term_mu_h", "term_sigma_h", "total"});
  }

  SUBCASE("unknown kind") {
    FigureData data;
    CHECK_THROWS_AS(emit_figure_data(static_cast<FigureKind>(99), data, dir),
                    std::invalid_argument);
  }

  std::filesystem::remove_all(dir);
}
