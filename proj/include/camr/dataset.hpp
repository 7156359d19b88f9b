#ifndef CAMR_DATASET_HPP
#define CAMR_DATASET_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "camr/ssa.hpp"

namespace camr {

// Per-species centering/scaling fitted on boundary ensembles; y = (x-m)/sqrt(v).
struct StandardizingTransform {
  std::vector<std::string> species;
  Eigen::VectorXd m;  // mean counts
  Eigen::VectorXd v;  // variance, counts^2

  // sqrt(v), with degenerate variances (< 1e-12) replaced by 1 so constant
  // species are centered but not scaled.
  Eigen::VectorXd divisors() const;

  void save(const std::filesystem::path& path) const;
  static StandardizingTransform load(const std::filesystem::path& path);
};

struct EnsembleDataset {
  std::vector<std::string> species;
  std::vector<double> times;
  std::vector<Eigen::MatrixXd> data;  // one T x N matrix per trajectory
  std::vector<std::uint64_t> seeds;
  std::optional<StandardizingTransform> transform;  // set once standardized
  std::string label;
  std::vector<int> visible;  // column indices of the visible species

  int n_trajectories() const { return static_cast<int>(data.size()); }
  int n_times() const { return static_cast<int>(times.size()); }
  int n_species() const { return static_cast<int>(species.size()); }

  int time_index(double t) const;  // throws when t is off the grid
  int species_column(const std::string& name) const;

  static EnsembleDataset from_trajectories(const std::vector<std::string>& species,
                                           const std::vector<Trajectory>& trajectories,
                                           std::string label);

  // Marks visible species by name. "IP3R" is synthesized as the total of
  // the S*** receptor-state columns when not already a column.
  void set_visible(const std::vector<std::string>& names);
};

using TimeWindow = std::pair<double, double>;

// Pooled mean/variance over trajectories, timepoints (within the window,
// when given) and all provided datasets.
StandardizingTransform fit_transform(const std::vector<const EnsembleDataset*>& datasets,
                                     const std::optional<TimeWindow>& window = {});

EnsembleDataset apply_transform(const EnsembleDataset& ds,
                                const StandardizingTransform& tr);

// M x N_v matrix of the visible species at a grid time.
Eigen::MatrixXd data_matrix_at(const EnsembleDataset& ds, double t);

// M trajectories with seeds base_seed .. base_seed+M-1, assembled into a
// dataset; deterministic given base_seed regardless of `jobs`.
EnsembleDataset simulate_ensemble(const DykParams& p, double ip3_mean_um, int m,
                                  std::uint64_t base_seed, int jobs = 1);

// Directory layout: manifest.json plus one t,<species...>,seed CSV per
// trajectory.
void save_ensemble(const EnsembleDataset& ds, const std::filesystem::path& dir,
                   const std::string& params_hash, double ip3_mean,
                   std::uint64_t base_seed);
EnsembleDataset load_ensemble(const std::filesystem::path& dir);

}  // namespace camr

#endif
