#include "camr/subnet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "camr/io.hpp"

namespace camr {

namespace {
constexpr const char* kCheckpointVersion = "camr-checkpoint-1";
constexpr double kStdFloor = 1e-12;
}  // namespace

std::string input_mode_name(InputMode mode) {
  return mode == InputMode::ReactionCandidates ? "reaction_candidates"
                                               : "parameters_only";
}

InputMode input_mode_from_name(const std::string& name) {
  if (name == "reaction_candidates") return InputMode::ReactionCandidates;
  if (name == "parameters_only") return InputMode::ParametersOnly;
  throw std::invalid_argument("unknown input mode: " + name);
}

void SubnetSpec::validate() const {
  if (hidden.empty()) throw std::invalid_argument("need at least one hidden layer");
  for (int w : hidden)
    if (w < 1) throw std::invalid_argument("hidden width must be positive");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
    throw std::invalid_argument("dropout rate must lie in [0,1)");
  if (!(weight_cutoff > 0.0)) throw std::invalid_argument("weight cutoff must be positive");
  if (out_dim < 1) throw std::invalid_argument("output dimension must be positive");
}

int SubnetModel::input_dim() const {
  if (spec.mode == InputMode::ParametersOnly) return d_hat();
  return static_cast<int>(motifs.size()) * d_hat();
}

namespace {

// Raw (unstandardized) network input for one sample.
Eigen::VectorXd raw_input(const SubnetModel& model, const StandardParams& theta_hat,
                          double t) {
  if (model.spec.mode == InputMode::ParametersOnly) return theta_hat.pack();
  return candidate_vector(theta_hat, t, model.lf, model.motifs);
}

struct ForwardCache {
  Eigen::VectorXd x_std;                    // standardized input
  std::vector<Eigen::VectorXd> z;           // pre-activations per layer
  std::vector<Eigen::VectorXd> a;           // activations fed to each layer
  std::vector<Eigen::VectorXd> mask_scale;  // dropout factor per hidden layer
  Eigen::VectorXd y_std;                    // standardized output
};

ForwardCache forward_cached(const SubnetModel& model, const Eigen::VectorXd& x_raw,
                            bool train_mode, Rng* rng) {
  const double p = model.spec.dropout_rate;
  const bool drop = train_mode && p > 0.0;
  if (drop && rng == nullptr)
    throw std::invalid_argument("training-mode forward needs an rng for dropout");

  ForwardCache cache;
  cache.x_std = (x_raw - model.input_std.mean).cwiseQuotient(model.input_std.std);
  const std::size_t n_layers = model.weights.size();
  cache.a.resize(n_layers);
  cache.z.resize(n_layers);
  cache.mask_scale.resize(n_layers > 0 ? n_layers - 1 : 0);

  Eigen::VectorXd act = cache.x_std;
  for (std::size_t l = 0; l + 1 < n_layers; ++l) {
    cache.a[l] = act;
    cache.z[l] = model.weights[l] * act + model.biases[l];
    act = cache.z[l].cwiseMax(0.0);
    if (drop) {
      cache.mask_scale[l].resize(act.size());
      for (Eigen::Index i = 0; i < act.size(); ++i)
        cache.mask_scale[l][i] = rng->uniform() < p ? 0.0 : 1.0 / (1.0 - p);
      act = act.cwiseProduct(cache.mask_scale[l]);
    }
  }
  cache.a[n_layers - 1] = act;
  cache.z[n_layers - 1] = model.weights[n_layers - 1] * act + model.biases[n_layers - 1];
  cache.y_std = cache.z[n_layers - 1];
  return cache;
}

LatentFourierT<Dual> seeded_dual_lf(const LatentFourier& lf, int seed_index) {
  LatentFourierT<Dual> out;
  out.freqs = lf.freqs;
  out.epsilon = lf.epsilon;
  const int q = lf.q(), l = lf.n_freqs();
  auto fill = [&](const Eigen::MatrixXd& src, Eigen::Matrix<Dual, Eigen::Dynamic,
                                                            Eigen::Dynamic>& dst,
                  int base) {
    dst.resize(q, l);
    for (int i = 0; i < q; ++i)
      for (int j = 0; j < l; ++j) {
        const int flat = base + i * l + j;
        dst(i, j) = Dual(src(i, j), flat == seed_index ? 1.0 : 0.0);
      }
  };
  fill(lf.a_mu, out.a_mu, 0);
  fill(lf.b_mu, out.b_mu, q * l);
  fill(lf.a_sigma, out.a_sigma, 2 * q * l);
  fill(lf.b_sigma, out.b_sigma, 3 * q * l);
  return out;
}

}  // namespace

Eigen::VectorXd forward(const SubnetModel& model, const StandardParams& theta_hat,
                        double t, bool train_mode, Rng* rng) {
  if (theta_hat.packed_size() != model.d_hat())
    throw std::invalid_argument("parameter dimension mismatch");
  const auto cache = forward_cached(model, raw_input(model, theta_hat, t), train_mode, rng);
  return model.target_mean + model.target_std.cwiseProduct(cache.y_std);
}

double loss(const SubnetModel& model, const std::vector<TrainSample>& batch) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  double total = 0.0;
  for (const auto& sample : batch) {
    const StandardParams sp =
        StandardParams::unpack(sample.theta_packed, model.n_v, model.q);
    const auto cache = forward_cached(model, raw_input(model, sp, sample.t), false, nullptr);
    const Eigen::VectorXd t_std =
        (sample.target - model.target_mean).cwiseQuotient(model.target_std);
    total += (cache.y_std - t_std).squaredNorm() / model.d_hat();
  }
  return total / batch.size();
}

LossGradient loss_gradient(const SubnetModel& model, const std::vector<TrainSample>& batch,
                           bool train_mode, Rng* rng) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  const std::size_t n_layers = model.weights.size();
  LossGradient grad;
  grad.d_weights.resize(n_layers);
  grad.d_biases.resize(n_layers);
  for (std::size_t l = 0; l < n_layers; ++l) {
    grad.d_weights[l] = Eigen::MatrixXd::Zero(model.weights[l].rows(), model.weights[l].cols());
    grad.d_biases[l] = Eigen::VectorXd::Zero(model.biases[l].size());
  }
  const int n_coeffs = model.lf.n_coeffs();
  grad.d_coeffs = Eigen::VectorXd::Zero(n_coeffs);
  const bool track_coeffs = model.spec.mode == InputMode::ReactionCandidates;

  for (const auto& sample : batch) {
    const StandardParams sp =
        StandardParams::unpack(sample.theta_packed, model.n_v, model.q);
    const Eigen::VectorXd x_raw = raw_input(model, sp, sample.t);
    const auto cache = forward_cached(model, x_raw, train_mode, rng);
    const Eigen::VectorXd t_std =
        (sample.target - model.target_mean).cwiseQuotient(model.target_std);
    const Eigen::VectorXd err = cache.y_std - t_std;
    grad.value += err.squaredNorm() / model.d_hat();

    // Backprop. d loss / d y_std, with the 1/(batch * D_hat) factors
    // folded in up front.
    Eigen::VectorXd delta = 2.0 * err / (model.d_hat() * static_cast<double>(batch.size()));
    for (std::size_t l = n_layers; l-- > 0;) {
      grad.d_weights[l] += delta * cache.a[l].transpose();
      grad.d_biases[l] += delta;
      if (l == 0) {
        delta = model.weights[0].transpose() * delta;
        break;
      }
      Eigen::VectorXd g = model.weights[l].transpose() * delta;
      if (train_mode && model.spec.dropout_rate > 0.0)
        g = g.cwiseProduct(cache.mask_scale[l - 1]);
      delta = g.cwiseProduct(
          (cache.z[l - 1].array() > 0.0).cast<double>().matrix());
    }
    if (track_coeffs && n_coeffs > 0) {
      // delta now holds d loss / d x_std; chain through the candidate
      // pipeline one Fourier coefficient at a time (forward-mode duals).
      const Eigen::VectorXd g_raw = delta.cwiseQuotient(model.input_std.std);
      for (int k = 0; k < n_coeffs; ++k) {
        const auto lf_dual = seeded_dual_lf(model.lf, k);
        const auto cand = detail::candidate_vector_t<Dual>(sp, sample.t, lf_dual,
                                                           model.motifs);
        double acc = 0.0;
        for (Eigen::Index i = 0; i < cand.size(); ++i) acc += g_raw[i] * cand[i].d;
        grad.d_coeffs[k] += acc;
      }
    }
  }
  grad.value /= static_cast<double>(batch.size());
  return grad;
}

SubnetModel init_subnet(const std::vector<TrainSample>& samples, const SubnetSpec& spec,
                        const ModelContext& ctx, std::uint64_t seed) {
  spec.validate();
  if (samples.empty()) throw std::invalid_argument("no training samples");
  const int d_hat = ctx.n_v + ctx.n_v * ctx.q + 1;
  if (spec.out_dim != d_hat)
    throw std::invalid_argument("spec out_dim disagrees with N_v/q");
  if (spec.mode == InputMode::ReactionCandidates && ctx.motifs.empty())
    throw std::invalid_argument("reaction-candidates mode needs motifs");

  SubnetModel model;
  model.spec = spec;
  model.n_v = ctx.n_v;
  model.q = ctx.q;
  model.visible_names = ctx.visible_names;
  model.motifs = ctx.motifs;
  model.lf = zero_latent_fourier(ctx.q, ctx.freqs, ctx.lf_epsilon);

  // Output standardization over the pooled targets.
  const int dim_out = d_hat;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim_out);
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(dim_out);
  for (const auto& s : samples) {
    sum += s.target;
    sq += s.target.cwiseProduct(s.target);
  }
  const double count = static_cast<double>(samples.size());
  model.target_mean = sum / count;
  model.target_std = (sq / count - model.target_mean.cwiseProduct(model.target_mean))
                         .cwiseMax(0.0)
                         .cwiseSqrt()
                         .cwiseMax(kStdFloor);

  // Input standardization: candidate vectors under the bootstrap latent
  // setting, or the parameters themselves.
  if (spec.mode == InputMode::ReactionCandidates) {
    const LatentFourier boot = bootstrap_latent_fourier(model.lf);
    const int dim_in = static_cast<int>(ctx.motifs.size()) * d_hat;
    Eigen::VectorXd isum = Eigen::VectorXd::Zero(dim_in);
    Eigen::VectorXd isq = Eigen::VectorXd::Zero(dim_in);
    for (const auto& s : samples) {
      const StandardParams sp = StandardParams::unpack(s.theta_packed, ctx.n_v, ctx.q);
      const Eigen::VectorXd c = candidate_vector(sp, s.t, boot, ctx.motifs);
      isum += c;
      isq += c.cwiseProduct(c);
    }
    model.input_std.mean = isum / count;
    model.input_std.std =
        (isq / count - model.input_std.mean.cwiseProduct(model.input_std.mean))
            .cwiseMax(0.0)
            .cwiseSqrt()
            .cwiseMax(kStdFloor);
  } else {
    Eigen::VectorXd isum = Eigen::VectorXd::Zero(d_hat);
    Eigen::VectorXd isq = Eigen::VectorXd::Zero(d_hat);
    for (const auto& s : samples) {
      isum += s.theta_packed;
      isq += s.theta_packed.cwiseProduct(s.theta_packed);
    }
    model.input_std.mean = isum / count;
    model.input_std.std =
        (isq / count - model.input_std.mean.cwiseProduct(model.input_std.mean))
            .cwiseMax(0.0)
            .cwiseSqrt()
            .cwiseMax(kStdFloor);
  }

  // He-uniform weights, zero biases.
  Rng rng(seed);
  std::vector<int> dims;
  dims.push_back(model.input_dim());
  for (int h : spec.hidden) dims.push_back(h);
  dims.push_back(d_hat);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const double limit = std::sqrt(6.0 / dims[l]);
    Eigen::MatrixXd w(dims[l + 1], dims[l]);
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform(-limit, limit);
    model.weights.push_back(std::move(w));
    model.biases.push_back(Eigen::VectorXd::Zero(dims[l + 1]));
  }
  return model;
}

SubnetModel train_subnet(const std::vector<TrainSample>& samples, const SubnetSpec& spec,
                         const TrainHyper& hyper, const ModelContext& ctx) {
  SubnetModel model = init_subnet(samples, spec, ctx, hyper.seed);
  if (hyper.rounds == 0) return model;
  if (hyper.batch < 1) throw std::invalid_argument("batch size must be positive");

  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kAdamEps = 1e-8;
  struct AdamState {
    std::vector<Eigen::MatrixXd> mw, vw;
    std::vector<Eigen::VectorXd> mb, vb;
    Eigen::VectorXd mc, vc;
  } adam;
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    adam.mw.push_back(Eigen::MatrixXd::Zero(model.weights[l].rows(), model.weights[l].cols()));
    adam.vw.push_back(Eigen::MatrixXd::Zero(model.weights[l].rows(), model.weights[l].cols()));
    adam.mb.push_back(Eigen::VectorXd::Zero(model.biases[l].size()));
    adam.vb.push_back(Eigen::VectorXd::Zero(model.biases[l].size()));
  }
  adam.mc = Eigen::VectorXd::Zero(model.lf.n_coeffs());
  adam.vc = Eigen::VectorXd::Zero(model.lf.n_coeffs());

  Rng rng(hyper.seed ^ 0x5eed5eedULL);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);

  long step = 0;
  for (int round = 0; round < hyper.rounds; ++round) {
    // Fisher-Yates with the session rng keeps runs reproducible.
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rng.below(i)]);
    for (std::size_t begin = 0; begin < order.size(); begin += hyper.batch) {
      const std::size_t end = std::min(order.size(), begin + hyper.batch);
      std::vector<TrainSample> batch;
      batch.reserve(end - begin);
      for (std::size_t i = begin; i < end; ++i) batch.push_back(samples[order[i]]);

      const LossGradient grad = loss_gradient(model, batch, true, &rng);
      if (!std::isfinite(grad.value))
        throw std::runtime_error("non-finite loss at step " + std::to_string(step));
      ++step;
      const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
      auto adam_update = [&](auto& value, auto& m, auto& v, const auto& g) {
        m = kBeta1 * m + (1.0 - kBeta1) * g;
        v = kBeta2 * v.array().matrix() + (1.0 - kBeta2) * g.cwiseProduct(g);
        value -= hyper.lr *
                 (m / bc1).cwiseQuotient(((v / bc2).cwiseSqrt().array() + kAdamEps).matrix());
      };
      for (std::size_t l = 0; l < model.weights.size(); ++l) {
        adam_update(model.weights[l], adam.mw[l], adam.vw[l], grad.d_weights[l]);
        adam_update(model.biases[l], adam.mb[l], adam.vb[l], grad.d_biases[l]);
        model.weights[l] = model.weights[l]
                               .cwiseMax(-spec.weight_cutoff)
                               .cwiseMin(spec.weight_cutoff);
        model.biases[l] = model.biases[l]
                              .cwiseMax(-spec.weight_cutoff)
                              .cwiseMin(spec.weight_cutoff);
      }
      if (model.spec.mode == InputMode::ReactionCandidates && model.lf.n_coeffs() > 0) {
        Eigen::VectorXd coeffs = latent_coeffs(model.lf);
        adam_update(coeffs, adam.mc, adam.vc, grad.d_coeffs);
        set_latent_coeffs(model.lf, coeffs);
      }
    }
  }
  return model;
}

namespace {

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.size();
  if (rows == 0) return {};
  const auto cols = j.at(0).size();
  Eigen::MatrixXd m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = j.at(r).at(c).get<double>();
  return m;
}

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  const auto vals = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(vals.data(), vals.size());
}

}  // namespace

void save_checkpoint(const SubnetModel& model, const std::filesystem::path& path) {
  nlohmann::json j;
  j["version"] = kCheckpointVersion;
  j["gradient_mode"] = "dual-forward";
  j["spec"] = {{"hidden", model.spec.hidden},
               {"dropout_rate", model.spec.dropout_rate},
               {"weight_cutoff", model.spec.weight_cutoff},
               {"mode", input_mode_name(model.spec.mode)},
               {"out_dim", model.spec.out_dim}};
  j["n_v"] = model.n_v;
  j["q"] = model.q;
  j["visible"] = model.visible_names;
  const auto names = motif_species_names(model.visible_names, model.q);
  nlohmann::json motifs = nlohmann::json::array();
  for (const auto& m : model.motifs) motifs.push_back(format_motif(m, names));
  j["motifs"] = motifs;
  j["lf"] = {{"freqs", vector_to_json(model.lf.freqs)},
             {"a_mu", matrix_to_json(model.lf.a_mu)},
             {"b_mu", matrix_to_json(model.lf.b_mu)},
             {"a_sigma", matrix_to_json(model.lf.a_sigma)},
             {"b_sigma", matrix_to_json(model.lf.b_sigma)},
             {"epsilon", model.lf.epsilon}};
  j["input_std"] = {{"mean", vector_to_json(model.input_std.mean)},
                    {"std", vector_to_json(model.input_std.std)}};
  j["target_mean"] = vector_to_json(model.target_mean);
  j["target_std"] = vector_to_json(model.target_std);
  nlohmann::json weights = nlohmann::json::array();
  nlohmann::json biases = nlohmann::json::array();
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    weights.push_back(matrix_to_json(model.weights[l]));
    biases.push_back(vector_to_json(model.biases[l]));
  }
  j["weights"] = weights;
  j["biases"] = biases;
  io::write_text(path, j.dump() + "\n");
}

SubnetModel load_checkpoint(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(io::read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("corrupt checkpoint " + path.string() + ": " + e.what());
  }
  if (!j.contains("version") || j.at("version").get<std::string>() != kCheckpointVersion)
    throw std::runtime_error("checkpoint version mismatch in " + path.string());

  SubnetModel model;
  model.spec.hidden = j.at("spec").at("hidden").get<std::vector<int>>();
  model.spec.dropout_rate = j.at("spec").at("dropout_rate").get<double>();
  model.spec.weight_cutoff = j.at("spec").at("weight_cutoff").get<double>();
  model.spec.mode = input_mode_from_name(j.at("spec").at("mode").get<std::string>());
  model.spec.out_dim = j.at("spec").at("out_dim").get<int>();
  model.n_v = j.at("n_v").get<int>();
  model.q = j.at("q").get<int>();
  model.visible_names = j.at("visible").get<std::vector<std::string>>();
  const auto names = motif_species_names(model.visible_names, model.q);
  for (const auto& jm : j.at("motifs"))
    model.motifs.push_back(parse_motif(jm.get<std::string>(), names));
  model.lf.freqs = vector_from_json(j.at("lf").at("freqs"));
  model.lf.a_mu = matrix_from_json(j.at("lf").at("a_mu"));
  model.lf.b_mu = matrix_from_json(j.at("lf").at("b_mu"));
  model.lf.a_sigma = matrix_from_json(j.at("lf").at("a_sigma"));
  model.lf.b_sigma = matrix_from_json(j.at("lf").at("b_sigma"));
  model.lf.epsilon = j.at("lf").at("epsilon").get<double>();
  model.input_std.mean = vector_from_json(j.at("input_std").at("mean"));
  model.input_std.std = vector_from_json(j.at("input_std").at("std"));
  model.target_mean = vector_from_json(j.at("target_mean"));
  model.target_std = vector_from_json(j.at("target_std"));
  for (const auto& jw : j.at("weights")) model.weights.push_back(matrix_from_json(jw));
  for (const auto& jb : j.at("biases")) model.biases.push_back(vector_from_json(jb));
  if (model.weights.size() != model.biases.size() || model.weights.empty())
    throw std::runtime_error("checkpoint layer structure invalid");
  return model;
}

}  // namespace camr
