#ifndef CAMR_TVR_HPP
#define CAMR_TVR_HPP

#include <vector>

#include <Eigen/Core>

namespace camr {

struct TvrConfig {
  double alpha = 100.0;         // regularization weight
  int iterations = 10;          // lagged-diffusivity steps
  double dt = 0.1;              // grid spacing, s
  double small_threshold = 1e-5;  // derivatives below this are zeroed

  void validate() const;
};

// Total-variation-regularized derivative of a noisy series: minimizes
//   alpha * ||u'||_1 + 1/2 ||A u - (z - z_1)||^2
// with A the forward-Euler anti-differentiation matrix, by lagged
// diffusivity. When `objective_trace` is given it receives the smoothed
// objective after the initial guess and after every iteration.
Eigen::VectorXd tvr_derivative(const Eigen::VectorXd& z, const TvrConfig& cfg,
                               std::vector<double>* objective_trace = nullptr);

// Cumulative Euler sum: out_0 = z0, out_k = out_{k-1} + dt * zdot_{k-1}.
Eigen::VectorXd antidifferentiate(const Eigen::VectorXd& zdot, double z0, double dt);

struct TrainingPairs {
  std::vector<double> times;
  Eigen::MatrixXd inputs;   // T x D, anti-differentiated smooth parameters
  Eigen::MatrixXd targets;  // T x D, thresholded TVR derivatives
};

// Componentwise TVR differentiation of a packed parameter series; inputs
// are re-integrated from the derivatives, anchored at the first sample.
// The first and last rows are kept in the arrays but downstream training
// skips them (one-sided boundary differences).
TrainingPairs build_training_pairs(const std::vector<double>& times,
                                   const Eigen::MatrixXd& theta_series,
                                   const TvrConfig& cfg);

}  // namespace camr

#endif
