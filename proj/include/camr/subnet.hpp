#ifndef CAMR_SUBNET_HPP
#define CAMR_SUBNET_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "camr/candidates.hpp"
#include "camr/pca.hpp"
#include "camr/rng.hpp"

namespace camr {

enum class InputMode { ReactionCandidates, ParametersOnly };

std::string input_mode_name(InputMode mode);
InputMode input_mode_from_name(const std::string& name);

struct SubnetSpec {
  std::vector<int> hidden;     // hidden layer widths, at least one
  double dropout_rate = 0.1;   // [0, 1), applied to all hidden layers
  double weight_cutoff = 1.0;  // elementwise clip after every update
  InputMode mode = InputMode::ReactionCandidates;
  int out_dim = 0;  // D_hat

  void validate() const;
};

struct TrainSample {
  Eigen::VectorXd theta_packed;  // D_hat
  double t = 0.0;
  Eigen::VectorXd target;  // D_hat, d theta_hat / dt
};

struct SubnetModel {
  SubnetSpec spec;
  int n_v = 0;
  int q = 0;
  std::vector<std::string> visible_names;
  std::vector<ReactionMotif> motifs;  // unused in ParametersOnly mode
  LatentFourier lf;                   // learned jointly with the weights
  CandidateStandardization input_std;
  Eigen::VectorXd target_mean, target_std;
  std::vector<Eigen::MatrixXd> weights;  // per layer, (out x in)
  std::vector<Eigen::VectorXd> biases;

  int input_dim() const;
  int d_hat() const { return spec.out_dim; }
};

// De-standardized prediction of d theta_hat / dt. Dropout only acts when
// train_mode is set (inverted dropout; inference needs no rescaling), in
// which case rng must be non-null.
Eigen::VectorXd forward(const SubnetModel& model, const StandardParams& theta_hat,
                        double t, bool train_mode = false, Rng* rng = nullptr);

// Mean over samples and output components of the squared standardized error.
double loss(const SubnetModel& model, const std::vector<TrainSample>& batch);

struct LossGradient {
  double value = 0.0;
  std::vector<Eigen::MatrixXd> d_weights;
  std::vector<Eigen::VectorXd> d_biases;
  Eigen::VectorXd d_coeffs;  // Fourier coefficients, layout of latent_coeffs()
};

// Analytic gradient (backprop; coefficient derivatives carried by Dual
// forward mode through the candidate pipeline). Dropout masks, when active,
// are drawn from `rng` and shared between the forward and backward pass.
LossGradient loss_gradient(const SubnetModel& model,
                           const std::vector<TrainSample>& batch,
                           bool train_mode = false, Rng* rng = nullptr);

struct TrainHyper {
  double lr = 1e-3;
  int batch = 64;
  int rounds = 0;
  std::uint64_t seed = 0;
};

struct ModelContext {
  int n_v = 0;
  int q = 0;
  std::vector<std::string> visible_names;
  std::vector<ReactionMotif> motifs;
  Eigen::VectorXd freqs;      // Fourier grid
  double lf_epsilon = 1e-8;
};

// He-uniform initialized model with standardizations fitted on `samples`;
// Fourier coefficients start at zero.
SubnetModel init_subnet(const std::vector<TrainSample>& samples, const SubnetSpec& spec,
                        const ModelContext& ctx, std::uint64_t seed);

// Adam (beta1 0.9, beta2 0.999, eps 1e-8) on the standardized L2 loss; one
// round is one full shuffled pass; weights and biases clipped after every
// step. Deterministic given the seed.
SubnetModel train_subnet(const std::vector<TrainSample>& samples, const SubnetSpec& spec,
                         const TrainHyper& hyper, const ModelContext& ctx);

void save_checkpoint(const SubnetModel& model, const std::filesystem::path& path);
SubnetModel load_checkpoint(const std::filesystem::path& path);

}  // namespace camr

#endif
