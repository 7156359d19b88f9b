#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "camr/candidates.hpp"
#include "camr/rollout.hpp"
#include "camr/io.hpp"
#include "camr/subnet.hpp"

using namespace camr;

namespace {

ModelContext small_context(InputMode mode) {
  ModelContext ctx;
  ctx.n_v = 2;
  ctx.q = 1;
  ctx.visible_names = {"Ca_Cyt", "IP3"};
  if (mode == InputMode::ReactionCandidates)
    ctx.motifs = {ReactionMotif::death(0), ReactionMotif::predator_prey(2, 1)};
  ctx.freqs = default_frequencies(3, 40.0);
  return ctx;
}

StandardParams sample_theta(Rng& rng) {
  StandardParams sp;
  sp.b_hat = Eigen::Vector2d(rng.normal(), rng.normal());
  sp.w_hat = Eigen::MatrixXd(2, 1);
  sp.w_hat << rng.normal(), rng.normal();
  sp.sigma2 = 0.3 + 0.2 * rng.uniform();
  return sp;
}

std::vector<TrainSample> random_samples(int count, InputMode mode, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<TrainSample> out;
  for (int i = 0; i < count; ++i) {
    TrainSample s;
    s.theta_packed = sample_theta(rng).pack();
    s.t = rng.uniform(10.0, 50.0);
    s.target = Eigen::VectorXd::Zero(5);
    for (int k = 0; k < 5; ++k) s.target[k] = rng.normal();
    out.push_back(std::move(s));
  }
  (void)mode;
  return out;
}

SubnetSpec small_spec(InputMode mode, int width = 8) {
  SubnetSpec spec;
  spec.hidden = {width};
  spec.dropout_rate = 0.0;
  spec.weight_cutoff = 5.0;
  spec.mode = mode;
  spec.out_dim = 5;
  return spec;
}

}  // namespace

TEST_CASE("forward basics") {
  const auto ctx = small_context(InputMode::ParametersOnly);
  const auto samples = random_samples(40, InputMode::ParametersOnly, 1);
  auto model = init_subnet(samples, small_spec(InputMode::ParametersOnly), ctx, 11);
  Rng rng(2);
  const StandardParams sp = sample_theta(rng);

  SUBCASE("zero weights output the target mean") {
    for (auto& w : model.weights) w.setZero();
    for (auto& b : model.biases) b.setZero();
    const Eigen::VectorXd y = forward(model, sp, 12.0);
    CHECK((y - model.target_mean).cwiseAbs().maxCoeff() < 1e-14);
  }

  SUBCASE("no dropout: training mode toggling changes nothing") {
    Rng drop(3);
    const Eigen::VectorXd a = forward(model, sp, 12.0, false, nullptr);
    const Eigen::VectorXd b = forward(model, sp, 12.0, true, &drop);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("hand-computed tiny network") {
    // one hidden unit; all standardizations neutral
    SubnetModel tiny;
    tiny.spec = small_spec(InputMode::ParametersOnly, 1);
    tiny.n_v = 2;
    tiny.q = 1;
    tiny.lf = zero_latent_fourier(1, default_frequencies(3, 40.0));
    tiny.input_std.mean = Eigen::VectorXd::Zero(5);
    tiny.input_std.std = Eigen::VectorXd::Ones(5);
    tiny.target_mean = Eigen::VectorXd::Zero(5);
    tiny.target_std = Eigen::VectorXd::Ones(5);
    tiny.weights = {Eigen::MatrixXd::Zero(1, 5), Eigen::MatrixXd::Zero(5, 1)};
    tiny.biases = {Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(5)};
    tiny.weights[0](0, 0) = 2.0;   // reads b_hat_1
    tiny.biases[0][0] = -1.0;
    tiny.weights[1](3, 0) = 0.5;   // writes W_hat_21 slot
    tiny.biases[1][2] = 0.25;

    StandardParams in;
    in.b_hat = Eigen::Vector2d(1.5, 0.0);
    in.w_hat = Eigen::MatrixXd::Zero(2, 1);
    in.sigma2 = 0.0;
    // hidden = relu(2*1.5 - 1) = 2; outputs: [0,0,0.25,1.0,0]
    const Eigen::VectorXd y = forward(tiny, in, 0.0);
    CHECK(y[0] == 0.0);
    CHECK(y[2] == doctest::Approx(0.25));
    CHECK(y[3] == doctest::Approx(1.0));
  }
}

TEST_CASE("loss definition") {
  const auto ctx = small_context(InputMode::ParametersOnly);
  auto samples = random_samples(30, InputMode::ParametersOnly, 5);
  auto model = init_subnet(samples, small_spec(InputMode::ParametersOnly), ctx, 17);

  SUBCASE("non-negative and zero when predictions are perfect") {
    // make every target equal the zero-network output (the target mean)
    for (auto& w : model.weights) w.setZero();
    for (auto& b : model.biases) b.setZero();
    auto perfect = samples;
    for (auto& s : perfect) s.target = model.target_mean;
    CHECK(loss(model, perfect) == doctest::Approx(0.0));
    CHECK(loss(model, samples) >= 0.0);
  }

  SUBCASE("constant prediction against unit-variance targets is about 1") {
    for (auto& w : model.weights) w.setZero();
    for (auto& b : model.biases) b.setZero();
    // standardized targets have mean 0, variance 1 per component by
    // construction, so the squared error of the mean predictor averages 1
    CHECK(loss(model, samples) == doctest::Approx(1.0).epsilon(1e-6));
  }

  SUBCASE("empty batch rejected") {
    CHECK_THROWS_AS(loss(model, {}), std::invalid_argument);
  }
}

TEST_CASE("training mechanics") {
  SUBCASE("rounds = 0 returns the initialized model") {
    const auto ctx = small_context(InputMode::ReactionCandidates);
    const auto samples = random_samples(50, InputMode::ReactionCandidates, 6);
    TrainHyper hyper;
    hyper.rounds = 0;
    hyper.seed = 21;
    const auto spec = small_spec(InputMode::ReactionCandidates);
    const auto trained = train_subnet(samples, spec, hyper, ctx);
    const auto fresh = init_subnet(samples, spec, ctx, 21);
    for (std::size_t l = 0; l < trained.weights.size(); ++l)
      CHECK((trained.weights[l] - fresh.weights[l]).cwiseAbs().maxCoeff() == 0.0);
    CHECK(latent_coeffs(trained.lf).cwiseAbs().maxCoeff() == 0.0);
    CHECK(trained.target_std.size() == 5);
  }

  SUBCASE("determinism: same data and seed give identical weights") {
    const auto ctx = small_context(InputMode::ReactionCandidates);
    const auto samples = random_samples(60, InputMode::ReactionCandidates, 7);
    SubnetSpec spec = small_spec(InputMode::ReactionCandidates);
    spec.dropout_rate = 0.2;
    TrainHyper hyper;
    hyper.rounds = 3;
    hyper.batch = 16;
    hyper.seed = 5;
    const auto a = train_subnet(samples, spec, hyper, ctx);
    const auto b = train_subnet(samples, spec, hyper, ctx);
    for (std::size_t l = 0; l < a.weights.size(); ++l)
      CHECK((a.weights[l] - b.weights[l]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((latent_coeffs(a.lf) - latent_coeffs(b.lf)).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("weight cutoff holds after every step") {
    const auto ctx = small_context(InputMode::ParametersOnly);
    const auto samples = random_samples(60, InputMode::ParametersOnly, 8);
    SubnetSpec spec = small_spec(InputMode::ParametersOnly);
    spec.weight_cutoff = 0.05;  // binding constraint
    TrainHyper hyper;
    hyper.rounds = 4;
    hyper.batch = 16;
    hyper.seed = 9;
    const auto model = train_subnet(samples, spec, hyper, ctx);
    for (const auto& w : model.weights)
      CHECK(w.cwiseAbs().maxCoeff() <= spec.weight_cutoff + 1e-15);
    for (const auto& b : model.biases)
      CHECK(b.cwiseAbs().maxCoeff() <= spec.weight_cutoff + 1e-15);
  }

  SUBCASE("parameters-only training never touches the candidates module") {
    const auto ctx = small_context(InputMode::ParametersOnly);
    const auto samples = random_samples(50, InputMode::ParametersOnly, 10);
    TrainHyper hyper;
    hyper.rounds = 2;
    hyper.batch = 25;
    hyper.seed = 3;
    const auto before = candidate_eval_count();
    const auto model = train_subnet(samples, small_spec(InputMode::ParametersOnly),
                                    hyper, ctx);
    Rng rng(1);
    forward(model, sample_theta(rng), 20.0);
    loss(model, samples);
    CHECK(candidate_eval_count() == before);
  }
}

TEST_CASE("loss gradients match finite differences") {
  const auto ctx = small_context(InputMode::ReactionCandidates);
  auto samples = random_samples(6, InputMode::ReactionCandidates, 12);
  SubnetSpec spec = small_spec(InputMode::ReactionCandidates, 4);
  auto model = init_subnet(samples, spec, ctx, 31);
  // non-trivial Fourier coefficients so their gradients are exercised
  Eigen::VectorXd coeffs = latent_coeffs(model.lf);
  Rng rng(13);
  for (Eigen::Index i = 0; i < coeffs.size(); ++i) coeffs[i] = 0.2 * rng.normal();
  set_latent_coeffs(model.lf, coeffs);

  const auto grad = loss_gradient(model, samples);
  const double h = 1e-5;
  // components that are analytically zero only show central-difference
  // roundoff; treat both-tiny as agreement
  auto rel_err = [](double a, double b) {
    if (std::max(std::abs(a), std::abs(b)) < 1e-7) return 0.0;
    return std::abs(a - b) / std::max(std::abs(a), std::abs(b));
  };

  SUBCASE("weights and biases") {
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
      for (Eigen::Index r = 0; r < model.weights[l].rows(); ++r)
        for (Eigen::Index c = 0; c < model.weights[l].cols(); ++c) {
          auto up = model, dn = model;
          up.weights[l](r, c) += h;
          dn.weights[l](r, c) -= h;
          const double fd = (loss(up, samples) - loss(dn, samples)) / (2 * h);
          CHECK(rel_err(fd, grad.d_weights[l](r, c)) < 1e-4);
        }
      for (Eigen::Index r = 0; r < model.biases[l].size(); ++r) {
        auto up = model, dn = model;
        up.biases[l][r] += h;
        dn.biases[l][r] -= h;
        const double fd = (loss(up, samples) - loss(dn, samples)) / (2 * h);
        CHECK(rel_err(fd, grad.d_biases[l][r]) < 1e-4);
      }
    }
  }

  SUBCASE("Fourier coefficients") {
    for (Eigen::Index k = 0; k < coeffs.size(); ++k) {
      auto up = model, dn = model;
      Eigen::VectorXd cu = coeffs, cd = coeffs;
      cu[k] += h;
      cd[k] -= h;
      set_latent_coeffs(up.lf, cu);
      set_latent_coeffs(dn.lf, cd);
      const double fd = (loss(up, samples) - loss(dn, samples)) / (2 * h);
      CHECK(rel_err(fd, grad.d_coeffs[k]) < 1e-4);
    }
  }
}

TEST_CASE("planted linear dynamics are learned from candidate inputs") {
  // d theta / dt = 0.5 * (death candidate block); training pairs generated
  // along an Euler path of the true dynamics.
  const int n_v = 2, q = 1;
  ModelContext ctx;
  ctx.n_v = n_v;
  ctx.q = q;
  ctx.visible_names = {"A", "B"};
  ctx.motifs = {ReactionMotif::death(0)};
  ctx.freqs = default_frequencies(3, 40.0);
  const auto lf_true = zero_latent_fourier(q, ctx.freqs);

  StandardParams theta;
  theta.b_hat = Eigen::Vector2d(1.5, 0.5);
  theta.w_hat = Eigen::MatrixXd(2, 1);
  theta.w_hat << 0.3, 0.2;
  theta.sigma2 = 0.8;

  std::vector<TrainSample> train_set, val_set;
  const double dt = 0.05;
  for (int k = 0; k < 240; ++k) {
    const double t = k * dt;
    const Eigen::VectorXd rhs =
        0.5 * candidate_vector(theta, t, lf_true, ctx.motifs);
    TrainSample s;
    s.theta_packed = theta.pack();
    s.t = t;
    s.target = rhs;
    (k % 5 == 4 ? val_set : train_set).push_back(s);
    theta = StandardParams::unpack(theta.pack() + dt * rhs, n_v, q);
  }

  SubnetSpec spec;
  spec.hidden = {25};
  spec.dropout_rate = 0.0;
  spec.weight_cutoff = 5.0;
  spec.mode = InputMode::ReactionCandidates;
  spec.out_dim = 5;
  TrainHyper hyper;
  hyper.lr = 3e-3;
  hyper.batch = 64;
  hyper.rounds = 200;
  hyper.seed = 2718;
  const auto model = train_subnet(train_set, spec, hyper, ctx);
  CHECK(loss(model, val_set) < 1e-3);
}

TEST_CASE("dropout") {
  const auto ctx = small_context(InputMode::ParametersOnly);
  const auto samples = random_samples(40, InputMode::ParametersOnly, 14);
  SubnetSpec spec = small_spec(InputMode::ParametersOnly, 16);
  spec.dropout_rate = 0.3;
  auto model = init_subnet(samples, spec, ctx, 15);
  Rng rng(16);
  const StandardParams sp = sample_theta(rng);

  SUBCASE("inference is deterministic") {
    CHECK((forward(model, sp, 5.0) - forward(model, sp, 5.0)).cwiseAbs().maxCoeff() ==
          0.0);
  }

  SUBCASE("training-mode average approaches the deterministic forward") {
    // one hidden layer with a linear readout: the inverted-dropout mean
    // equals the eval-mode output in expectation
    const Eigen::VectorXd eval_out = forward(model, sp, 5.0);
    const int n_masks = 10000;
    Rng mask_rng(17);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(5);
    Eigen::VectorXd sq = Eigen::VectorXd::Zero(5);
    for (int i = 0; i < n_masks; ++i) {
      const Eigen::VectorXd y = forward(model, sp, 5.0, true, &mask_rng);
      mean += y;
      sq += y.cwiseProduct(y);
    }
    mean /= n_masks;
    sq = sq / n_masks - mean.cwiseProduct(mean);
    for (int k = 0; k < 5; ++k) {
      const double se = std::sqrt(std::max(sq[k], 0.0) / n_masks);
      CHECK(std::abs(mean[k] - eval_out[k]) <= 3.0 * se + 1e-12);
    }
  }

  SUBCASE("training mode without an rng is an error") {
    CHECK_THROWS_AS(forward(model, sp, 5.0, true, nullptr), std::invalid_argument);
  }
}

TEST_CASE("checkpoint round trip") {
  const auto ctx = small_context(InputMode::ReactionCandidates);
  const auto samples = random_samples(50, InputMode::ReactionCandidates, 18);
  SubnetSpec spec = small_spec(InputMode::ReactionCandidates);
  TrainHyper hyper;
  hyper.rounds = 2;
  hyper.batch = 16;
  hyper.seed = 77;
  const auto model = train_subnet(samples, spec, hyper, ctx);

  const auto dir = std::filesystem::temp_directory_path() / "camr_subnet_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "model.json";
  save_checkpoint(model, path);
  const auto back = load_checkpoint(path);

  SUBCASE("forward outputs are bit-identical") {
    Rng rng(19);
    for (int i = 0; i < 10; ++i) {
      const StandardParams sp = sample_theta(rng);
      const double t = rng.uniform(0.0, 50.0);
      CHECK((forward(model, sp, t) - forward(back, sp, t)).cwiseAbs().maxCoeff() ==
            0.0);
    }
  }

  SUBCASE("checkpoint carries motifs and standardizations") {
    CHECK(back.motifs.size() == model.motifs.size());
    CHECK((back.input_std.mean - model.input_std.mean).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.target_std - model.target_std).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("corrupted and mismatched files error out") {
    const auto bad = dir / "bad.json";
    camr::io::write_text(bad, "{not json");
    CHECK_THROWS_AS(load_checkpoint(bad), std::runtime_error);
    const auto wrong = dir / "wrong.json";
    camr::io::write_text(wrong, "{\"version\": \"other\"}");
    CHECK_THROWS_AS(load_checkpoint(wrong), std::runtime_error);
  }

  std::filesystem::remove_all(dir);
}
