#include "camr/tvr.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>

namespace camr {

void TvrConfig::validate() const {
  if (!(alpha >= 0.0)) throw std::invalid_argument("alpha must be >= 0");
  if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (!(small_threshold >= 0.0))
    throw std::invalid_argument("small_threshold must be >= 0");
}

namespace {

// The TV term is smoothed as sqrt((Du)^2 + eps); eps is scaled by the size
// of the raw derivative so the solver is equivariant under data rescaling.
constexpr double kEpsRelative = 1e-8;

Eigen::VectorXd naive_derivative(const Eigen::VectorXd& z, double dt) {
  const Eigen::Index t = z.size();
  Eigen::VectorXd u(t);
  for (Eigen::Index k = 0; k + 1 < t; ++k) u[k] = (z[k + 1] - z[k]) / dt;
  u[t - 1] = u[t - 2];
  return u;
}

void apply_threshold(Eigen::VectorXd& u, double threshold) {
  for (Eigen::Index k = 0; k < u.size(); ++k)
    if (std::abs(u[k]) < threshold) u[k] = 0.0;
}

double smoothed_objective(const Eigen::VectorXd& u, const Eigen::VectorXd& z_shift,
                          double alpha, double dt, double eps) {
  double tv = 0.0;
  for (Eigen::Index k = 0; k + 1 < u.size(); ++k) {
    const double d = u[k + 1] - u[k];
    tv += std::sqrt(d * d + eps);
  }
  double fidelity = 0.0;
  double integral = 0.0;
  for (Eigen::Index k = 0; k < u.size(); ++k) {
    const double r = integral - z_shift[k];  // (A u)_k - (z_k - z_1)
    fidelity += r * r;
    integral += dt * u[k];
  }
  return alpha * tv + 0.5 * fidelity;
}

}  // namespace

Eigen::VectorXd tvr_derivative(const Eigen::VectorXd& z, const TvrConfig& cfg,
                               std::vector<double>* objective_trace) {
  cfg.validate();
  const Eigen::Index t = z.size();
  if (t < 3) throw std::invalid_argument("need at least three samples");
  if (!z.allFinite()) throw std::invalid_argument("non-finite input");

  Eigen::VectorXd u = naive_derivative(z, cfg.dt);
  const Eigen::VectorXd z_shift = z.array() - z[0];

  double diff_scale = 0.0;
  double u_scale = 0.0;
  for (Eigen::Index k = 0; k + 1 < t; ++k) {
    const double d = u[k + 1] - u[k];
    diff_scale += d * d;
    u_scale += u[k] * u[k];
  }
  diff_scale /= static_cast<double>(t - 1);
  u_scale /= static_cast<double>(t - 1);

  // Linear data (to machine precision): the naive derivative already solves
  // the problem exactly, with zero misfit and zero total variation. Also
  // covers alpha == 0, where exact interpolation is optimal. The comparison
  // is scale-free so rescaled inputs take the same branch.
  if (diff_scale <= 1e-24 * u_scale || cfg.alpha == 0.0) {
    if (objective_trace)
      objective_trace->push_back(
          smoothed_objective(u, z_shift, cfg.alpha, cfg.dt, 0.0));
    apply_threshold(u, cfg.small_threshold);
    return u;
  }
  const double eps = kEpsRelative * diff_scale;

  // A^T A and A^T z have closed forms for the strictly-lower-triangular
  // Euler matrix A_{ki} = dt [i < k].
  Eigen::MatrixXd normal(t, t);
  for (Eigen::Index i = 0; i < t; ++i)
    for (Eigen::Index j = 0; j < t; ++j)
      normal(i, j) = cfg.dt * cfg.dt * static_cast<double>(t - 1 - std::max(i, j));
  Eigen::VectorXd rhs(t);  // (A^T z)_i = dt * sum_{k > i} z_shift_k
  double suffix = 0.0;
  for (Eigen::Index i = t - 1; i >= 0; --i) {
    rhs[i] = cfg.dt * suffix;
    suffix += z_shift[i];
  }

  if (objective_trace) {
    objective_trace->clear();
    objective_trace->push_back(smoothed_objective(u, z_shift, cfg.alpha, cfg.dt, eps));
  }

  Eigen::MatrixXd system(t, t);
  for (int it = 0; it < cfg.iterations; ++it) {
    system = normal;
    for (Eigen::Index k = 0; k + 1 < t; ++k) {
      const double d = u[k + 1] - u[k];
      const double w = cfg.alpha / std::sqrt(d * d + eps);
      system(k, k) += w;
      system(k + 1, k + 1) += w;
      system(k, k + 1) -= w;
      system(k + 1, k) -= w;
    }
    u = Eigen::LDLT<Eigen::MatrixXd>(system).solve(rhs);
    if (objective_trace)
      objective_trace->push_back(smoothed_objective(u, z_shift, cfg.alpha, cfg.dt, eps));
  }
  apply_threshold(u, cfg.small_threshold);
  return u;
}

Eigen::VectorXd antidifferentiate(const Eigen::VectorXd& zdot, double z0, double dt) {
  Eigen::VectorXd out(zdot.size());
  double acc = z0;
  for (Eigen::Index k = 0; k < zdot.size(); ++k) {
    out[k] = acc;
    acc += dt * zdot[k];
  }
  return out;
}

TrainingPairs build_training_pairs(const std::vector<double>& times,
                                   const Eigen::MatrixXd& theta_series,
                                   const TvrConfig& cfg) {
  if (static_cast<Eigen::Index>(times.size()) != theta_series.rows())
    throw std::invalid_argument("times/series size mismatch");
  if (times.size() < 3) throw std::invalid_argument("need at least three timepoints");
  TrainingPairs pairs;
  pairs.times = times;
  pairs.inputs.resize(theta_series.rows(), theta_series.cols());
  pairs.targets.resize(theta_series.rows(), theta_series.cols());
  for (Eigen::Index d = 0; d < theta_series.cols(); ++d) {
    const Eigen::VectorXd u = tvr_derivative(theta_series.col(d), cfg);
    pairs.targets.col(d) = u;
    pairs.inputs.col(d) = antidifferentiate(u, theta_series(0, d), cfg.dt);
  }
  return pairs;
}

}  // namespace camr
