#ifndef CAMR_SSA_HPP
#define CAMR_SSA_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "camr/dyk.hpp"
#include "camr/reaction.hpp"
#include "camr/rng.hpp"

namespace camr {

struct Trajectory {
  std::vector<double> times;                       // uniform grid at dt_write
  std::vector<std::vector<std::int64_t>> counts;   // T rows x N species
  std::uint64_t seed = 0;
};

// Deterministic leak/pump currents J1 - J2 transferring calcium between the
// ER and cytosol pools, applied at ODE-step boundaries through a fractional
// particle accumulator.
struct CurrentParams {
  double c1, v2, v3, k3;
  double particles_per_um;  // count <-> uM conversion
  int idx_ca = kDykCa;
  int idx_ca_er = kDykCaEr;
};

struct HybridOptions {
  double t_max;
  double dt_write;
  double dt_ode;
};

// Gillespie simulation of `net` with exact binomial propensities; when
// `currents` is given, the J1-J2 transfer is applied at every dt_ode
// boundary (integer part of the accumulated flux).
Trajectory run_hybrid_ssa(const ReactionNetwork& net,
                          const std::vector<std::int64_t>& init_counts,
                          const HybridOptions& opt,
                          const std::optional<CurrentParams>& currents,
                          std::uint64_t seed);

// Relaxes the receptor states with ligand counts clamped: 10 s of the
// subunit subsystem, occupancies time-averaged over the last 4 s, then
// rounded by largest remainder so the total is exactly n_ip3r.
std::vector<std::int64_t> equilibrate_receptors(const ReactionNetwork& net,
                                                const std::vector<std::int64_t>& init_counts,
                                                std::uint64_t seed,
                                                double duration_s = 10.0,
                                                double average_window_s = 4.0);

// Full stochastic DYK run: Gaussian initial concentrations, ER pool from
// total-calcium conservation, receptor equilibration, then the hybrid SSA.
Trajectory simulate_trajectory(const DykParams& p, double ip3_mean_um,
                               std::uint64_t seed);

std::vector<Trajectory> simulate_trajectories(const DykParams& p, double ip3_mean_um,
                                              int m, std::uint64_t base_seed,
                                              int jobs = 1);

}  // namespace camr

#endif
