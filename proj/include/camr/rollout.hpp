#ifndef CAMR_ROLLOUT_HPP
#define CAMR_ROLLOUT_HPP

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "camr/dataset.hpp"
#include "camr/pca.hpp"
#include "camr/subnet.hpp"

namespace camr {

// Forward-Euler integration of the learned parameter dynamics.
ThetaSeries euler_rollout(const SubnetModel& model, const StandardParams& theta0,
                          double t0, double horizon, double dt);

// (1/T) sum_t |theta_a(t) - theta_b(t)|^2 over all packed components.
double mse(const ThetaSeries& a, const ThetaSeries& b);

struct RangeResult {
  double c_minus_min = 0.0;
  double c_plus_max = 0.0;
  double ci_minus_lo = 0.0, ci_minus_hi = 0.0;  // 95% bootstrap CI
  double ci_plus_lo = 0.0, ci_plus_hi = 0.0;
};

// Extrema over the window of the per-timepoint ensemble mean +/- standard
// deviation of one species, in units of counts/scale. Percentile bootstrap
// over trajectories.
RangeResult range_of_oscillations(const EnsembleDataset& ds, const std::string& species,
                                  const TimeWindow& window, double scale,
                                  int n_bootstrap = 1000, std::uint64_t seed = 9001);

struct Observables {
  Eigen::VectorXd mean;  // visible species, count units
  Eigen::MatrixXd cov;
};

// Visible-block moments of the reduced model mapped back to count units
// through the inverse standardizing transform.
Observables reconstruct_observables(const StandardParams& theta_hat,
                                    const StandardizingTransform& transform,
                                    const std::vector<int>& visible_cols);

// Columns: d<X>/dt contributions of {b, W, sigma2, mu_h, Sigma_h} plus the
// total, for X the mean of one visible species along a rollout.
Eigen::MatrixXd moment_term_decomposition(const SubnetModel& model,
                                          const ThetaSeries& rollout,
                                          int visible_index);

// Analytic time derivative of the Fourier latent parameters.
std::pair<Eigen::VectorXd, Eigen::VectorXd> fourier_latent_rate(double t,
                                                                const LatentFourier& lf);

enum class FigureKind { RangeDiagram, ParameterSlices, MseCurves, TermDecomposition };

struct RangeDiagramRow {
  std::string source;  // "stochastic" or "deterministic"
  double condition = 0.0;
  RangeResult range;
};

struct MseCurveRow {
  std::string model;
  double condition = 0.0;
  bool training = false;
  double mse = 0.0;
  std::uint64_t seed = 0;
};

struct FigureData {
  std::vector<RangeDiagramRow> range_rows;
  // parameter slices
  ThetaSeries theta_ml, theta_int;
  std::vector<MseCurveRow> mse_rows;
  // term decomposition
  std::vector<double> term_times;
  Eigen::MatrixXd terms;
};

// Writes the CSV for one figure kind into `dir`; returns the file path.
std::filesystem::path emit_figure_data(FigureKind kind, const FigureData& data,
                                       const std::filesystem::path& dir);

}  // namespace camr

#endif
