#ifndef CAMR_PCA_HPP
#define CAMR_PCA_HPP

#include <filesystem>
#include <map>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "camr/dataset.hpp"

namespace camr {

// Reduced-model parameters in the standard frame (mu_h = 0, Sigma_h = I).
struct StandardParams {
  Eigen::VectorXd b_hat;  // N_v
  Eigen::MatrixXd w_hat;  // N_v x q
  double sigma2 = 0.0;

  int n_v() const { return static_cast<int>(b_hat.size()); }
  int q() const { return static_cast<int>(w_hat.cols()); }
  int packed_size() const { return n_v() + n_v() * q() + 1; }

  // Flat layout used by every series/CSV/network surface:
  // [b_1..b_Nv, W_11..W_1q, W_21.., ..., sigma2] (W row-major).
  Eigen::VectorXd pack() const;
  static StandardParams unpack(const Eigen::VectorXd& packed, int n_v, int q);
};

// Parameters in an arbitrary latent frame; Sigma_h restricted diagonal.
struct FullParams {
  Eigen::VectorXd b;        // N_v
  Eigen::MatrixXd w;        // N_v x q
  double sigma2 = 0.0;
  Eigen::VectorXd mu_h;     // q
  Eigen::VectorXd sigma_h;  // q, diagonal entries, > 0
};

struct MomentState {
  Eigen::VectorXd mu;   // N_v + q
  Eigen::MatrixXd cov;  // (N_v+q)^2
};

// Closed-form PPCA maximum likelihood at one timepoint. `variance_floor`
// replaces the listed diagonal entries of the sample covariance before the
// eigendecomposition (species index -> value).
StandardParams ml_estimate(const Eigen::MatrixXd& x, int q,
                           const std::map<int, double>& variance_floor = {});

struct ThetaSeries {
  std::vector<double> times;
  std::vector<StandardParams> params;
  int n_v = 0;
  int q = 0;

  Eigen::MatrixXd packed() const;  // T x D_hat
  void save(const std::filesystem::path& path) const;
  static ThetaSeries load(const std::filesystem::path& path, int n_v, int q);
};

ThetaSeries estimate_series(const EnsembleDataset& ds, int q,
                            const std::map<int, double>& variance_floor = {},
                            const std::optional<TimeWindow>& window = {});

FullParams to_full(const StandardParams& sp, const Eigen::VectorXd& mu_h,
                   const Eigen::VectorXd& sigma_h);
StandardParams to_standard(const FullParams& fp);
MomentState moments_from(const FullParams& fp);

}  // namespace camr

#endif
