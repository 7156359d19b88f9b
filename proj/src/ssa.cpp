#include "camr/ssa.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace camr {

namespace {

struct CompiledReaction {
  std::vector<std::pair<int, int>> reactants;        // (species, order)
  std::vector<std::pair<int, std::int64_t>> stoich;  // (species, delta)
  double rate = 0.0;
};

double binomial_count(std::int64_t n, int m) {
  if (n < m) return 0.0;
  double c = 1.0;
  for (int i = 0; i < m; ++i) c *= static_cast<double>(n - i) / (i + 1);
  return c;
}

class SsaCore {
 public:
  SsaCore(const ReactionNetwork& net, const std::vector<bool>& clamped) {
    for (int r = 0; r < net.n_reactions(); ++r) {
      CompiledReaction cr;
      for (const auto& [idx, order] : net.reactions()[r].reactants)
        cr.reactants.emplace_back(idx, order);
      const auto nu = net.stoichiometry(r);
      for (int s = 0; s < net.n_species(); ++s)
        if (nu[s] != 0 && !clamped[s]) cr.stoich.emplace_back(s, nu[s]);
      cr.rate = net.reactions()[r].rate;
      // A reaction that cannot change any free species is inert here.
      if (!cr.stoich.empty()) reactions_.push_back(std::move(cr));
    }
    propensities_.resize(reactions_.size(), 0.0);
  }

  double propensity_sum(const std::vector<std::int64_t>& counts) {
    double total = 0.0;
    for (std::size_t r = 0; r < reactions_.size(); ++r) {
      double p = reactions_[r].rate;
      for (const auto& [idx, order] : reactions_[r].reactants)
        p *= binomial_count(counts[idx], order);
      if (!(p >= 0.0) || !std::isfinite(p))
        throw std::runtime_error("propensity fault in reaction " + std::to_string(r) +
                                 ": value " + std::to_string(p));
      propensities_[r] = p;
      total += p;
    }
    return total;
  }

  // Fires one reaction chosen by the stored propensities (from the latest
  // propensity_sum call) and returns the new propensity total.
  double fire_event(std::vector<std::int64_t>& counts, double a0, double t, Rng& rng) {
    const double target = rng.uniform() * a0;
    double acc = 0.0;
    std::size_t chosen = reactions_.size() - 1;
    for (std::size_t r = 0; r < reactions_.size(); ++r) {
      acc += propensities_[r];
      if (target < acc) {
        chosen = r;
        break;
      }
    }
    for (const auto& [idx, delta] : reactions_[chosen].stoich) {
      counts[idx] += delta;
      if (counts[idx] < 0)
        throw std::runtime_error("negative count of species " + std::to_string(idx) +
                                 " at t=" + std::to_string(t));
    }
    return propensity_sum(counts);
  }

  // Standard SSA from t_begin to t_end; propensities refreshed after every
  // firing. The deterministic currents only enter through count updates the
  // caller makes between windows.
  void advance_window(std::vector<std::int64_t>& counts, double t_begin, double t_end,
                      Rng& rng) {
    double t = t_begin;
    double a0 = propensity_sum(counts);
    while (a0 > 0.0) {
      const double tau = rng.exponential() / a0;
      if (t + tau >= t_end) return;
      t += tau;
      a0 = fire_event(counts, a0, t, rng);
    }
  }

 private:
  std::vector<CompiledReaction> reactions_;
  std::vector<double> propensities_;
};

Trajectory run_hybrid_impl(const ReactionNetwork& net,
                           const std::vector<std::int64_t>& init_counts,
                           const HybridOptions& opt,
                           const std::optional<CurrentParams>& currents, Rng& rng,
                           std::uint64_t seed_tag) {
  if (static_cast<int>(init_counts.size()) != net.n_species())
    throw std::invalid_argument("init_counts size mismatch");
  for (auto c : init_counts)
    if (c < 0) throw std::invalid_argument("negative initial count");
  if (!(opt.dt_ode > 0.0 && opt.dt_write > 0.0 && opt.t_max > 0.0))
    throw std::invalid_argument("time steps must be positive");

  SsaCore core(net, std::vector<bool>(net.n_species(), false));
  std::vector<std::int64_t> counts = init_counts;

  const auto n_windows = static_cast<long>(std::llround(opt.t_max / opt.dt_ode));
  const auto write_every = std::max<long>(1, std::llround(opt.dt_write / opt.dt_ode));

  Trajectory traj;
  traj.seed = seed_tag;
  traj.times.push_back(0.0);
  traj.counts.push_back(counts);

  double transfer_accum = 0.0;  // fractional Ca particles owed to the cytosol
  for (long w = 0; w < n_windows; ++w) {
    const double t0 = w * opt.dt_ode;
    core.advance_window(counts, t0, t0 + opt.dt_ode, rng);
    if (currents) {
      const auto& cp = *currents;
      const double ca = counts[cp.idx_ca] / cp.particles_per_um;
      const double er = counts[cp.idx_ca_er] / cp.particles_per_um;
      const double j1 = cp.c1 * cp.v2 * (er / cp.c1 - ca);
      const double j2 = cp.v3 * ca * ca / (ca * ca + cp.k3 * cp.k3);
      transfer_accum += (j1 - j2) * opt.dt_ode * cp.particles_per_um;
      const auto whole = static_cast<std::int64_t>(std::trunc(transfer_accum));
      if (whole != 0) {
        // Clip so neither pool goes negative; the clipped part stays in the
        // accumulator and is re-applied once it can be.
        const std::int64_t applied =
            std::clamp<std::int64_t>(whole, -counts[cp.idx_ca], counts[cp.idx_ca_er]);
        counts[cp.idx_ca] += applied;
        counts[cp.idx_ca_er] -= applied;
        transfer_accum -= static_cast<double>(applied);
      }
    }
    if ((w + 1) % write_every == 0) {
      traj.times.push_back((w + 1) * opt.dt_ode);
      traj.counts.push_back(counts);
    }
  }
  return traj;
}

std::vector<std::int64_t> equilibrate_impl(const ReactionNetwork& net,
                                           const std::vector<std::int64_t>& init_counts,
                                           Rng& rng, double duration_s,
                                           double average_window_s) {
  const int n = net.n_species();
  if (static_cast<int>(init_counts.size()) != n)
    throw std::invalid_argument("init_counts size mismatch");

  // Receptor states are the free species; ligand pools stay clamped.
  std::vector<bool> clamped(n, true);
  std::vector<int> receptor_states;
  for (int s = 0; s < n; ++s)
    if (net.species()[s].compartment == Compartment::Membrane) {
      clamped[s] = false;
      receptor_states.push_back(s);
    }
  std::int64_t n_receptors = 0;
  for (int s : receptor_states) n_receptors += init_counts[s];

  SsaCore core(net, clamped);
  std::vector<std::int64_t> counts = init_counts;
  std::vector<double> occupancy(receptor_states.size(), 0.0);
  const double avg_begin = duration_s - average_window_s;

  double t = 0.0;
  double a0 = core.propensity_sum(counts);
  while (t < duration_s) {
    double t_event = duration_s;
    if (a0 > 0.0) t_event = t + rng.exponential() / a0;
    const double segment_end = std::min(t_event, duration_s);
    const double lo = std::max(t, avg_begin);
    if (segment_end > lo)
      for (std::size_t i = 0; i < receptor_states.size(); ++i)
        occupancy[i] += static_cast<double>(counts[receptor_states[i]]) * (segment_end - lo);
    if (t_event >= duration_s) break;
    a0 = core.fire_event(counts, a0, t_event, rng);
    t = t_event;
  }

  // Largest-remainder rounding keeps the receptor total exact.
  std::vector<double> avg(receptor_states.size(), 0.0);
  std::vector<std::int64_t> rounded = init_counts;
  std::int64_t floor_sum = 0;
  for (std::size_t i = 0; i < receptor_states.size(); ++i) {
    avg[i] = average_window_s > 0.0 ? occupancy[i] / average_window_s : 0.0;
    rounded[receptor_states[i]] = static_cast<std::int64_t>(std::floor(avg[i]));
    floor_sum += rounded[receptor_states[i]];
  }
  std::vector<std::size_t> order(receptor_states.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return (avg[x] - std::floor(avg[x])) > (avg[y] - std::floor(avg[y]));
  });
  std::int64_t deficit = n_receptors - floor_sum;
  for (std::size_t i = 0; deficit > 0; i = (i + 1) % order.size(), --deficit)
    ++rounded[receptor_states[order[i]]];
  return rounded;
}

}  // namespace

Trajectory run_hybrid_ssa(const ReactionNetwork& net,
                          const std::vector<std::int64_t>& init_counts,
                          const HybridOptions& opt,
                          const std::optional<CurrentParams>& currents,
                          std::uint64_t seed) {
  Rng rng(seed);
  return run_hybrid_impl(net, init_counts, opt, currents, rng, seed);
}

std::vector<std::int64_t> equilibrate_receptors(const ReactionNetwork& net,
                                                const std::vector<std::int64_t>& init_counts,
                                                std::uint64_t seed, double duration_s,
                                                double average_window_s) {
  Rng rng(seed);
  return equilibrate_impl(net, init_counts, rng, duration_s, average_window_s);
}

Trajectory simulate_trajectory(const DykParams& p, double ip3_mean_um,
                               std::uint64_t seed) {
  p.validate();
  const ReactionNetwork net = build_dyk_network(p);
  const double nav = particles_per_micromolar(p.v_cyt);
  Rng rng(seed);

  double ca0, ip30;
  do {
    ca0 = rng.normal(p.mu0_ca, p.sigma0_ca);
  } while (ca0 < 0.0);
  do {
    ip30 = rng.normal(ip3_mean_um, p.sigma0_ip3);
  } while (ip30 < 0.0);

  std::vector<std::int64_t> counts(net.n_species(), 0);
  counts[kDykCa] = std::llround(ca0 * nav);
  counts[kDykIp3] = std::llround(ip30 * nav);
  counts[kDykCaEr] = std::llround((p.c0 - ca0) * nav);
  if (counts[kDykCaEr] < 0)
    throw std::runtime_error("initial [Ca] exceeds total calcium c0");
  counts[kDykS000] = p.n_ip3r;

  counts = equilibrate_impl(net, counts, rng, 10.0, 4.0);

  CurrentParams cp;
  cp.c1 = p.c1;
  cp.v2 = p.v2;
  cp.v3 = p.v3;
  cp.k3 = p.k3;
  cp.particles_per_um = nav;
  HybridOptions opt{p.t_max, p.dt_write, p.dt_ode};
  return run_hybrid_impl(net, counts, opt, cp, rng, seed);
}

std::vector<Trajectory> simulate_trajectories(const DykParams& p, double ip3_mean_um,
                                              int m, std::uint64_t base_seed, int jobs) {
  if (m < 1) throw std::invalid_argument("ensemble size must be >= 1");
  std::vector<Trajectory> out(m);
  jobs = std::max(1, jobs);
  std::vector<std::string> errors(m);
  auto worker = [&](int begin, int stride) {
    for (int i = begin; i < m; i += stride) {
      try {
        out[i] = simulate_trajectory(p, ip3_mean_um, base_seed + i);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  if (jobs == 1) {
    worker(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker, j, jobs);
    for (auto& th : pool) th.join();
  }
  for (int i = 0; i < m; ++i)
    if (!errors[i].empty())
      throw std::runtime_error("trajectory with seed " +
                               std::to_string(base_seed + i) + " failed: " + errors[i]);
  return out;
}

}  // namespace camr
