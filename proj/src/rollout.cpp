#include "camr/rollout.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "camr/io.hpp"
#include "camr/rng.hpp"

namespace camr {

ThetaSeries euler_rollout(const SubnetModel& model, const StandardParams& theta0,
                          double t0, double horizon, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  const auto n_steps = static_cast<long>(std::llround(horizon / dt));
  ThetaSeries series;
  series.n_v = theta0.n_v();
  series.q = theta0.q();
  StandardParams theta = theta0;
  series.times.push_back(t0);
  series.params.push_back(theta);
  for (long k = 0; k < n_steps; ++k) {
    const double t = t0 + k * dt;
    const Eigen::VectorXd f = forward(model, theta, t, false, nullptr);
    Eigen::VectorXd packed = theta.pack() + dt * f;
    if (!packed.allFinite())
      throw std::runtime_error("non-finite rollout state at step " + std::to_string(k));
    theta = StandardParams::unpack(packed, series.n_v, series.q);
    series.times.push_back(t0 + (k + 1) * dt);
    series.params.push_back(theta);
  }
  return series;
}

double mse(const ThetaSeries& a, const ThetaSeries& b) {
  if (a.times.size() != b.times.size())
    throw std::invalid_argument("series length mismatch");
  for (std::size_t i = 0; i < a.times.size(); ++i)
    if (std::abs(a.times[i] - b.times[i]) > 1e-6)
      throw std::invalid_argument("series grids do not match");
  double total = 0.0;
  for (std::size_t i = 0; i < a.params.size(); ++i)
    total += (a.params[i].pack() - b.params[i].pack()).squaredNorm();
  return total / static_cast<double>(a.params.size());
}

namespace {

double percentile(std::vector<double> values, double p) {
  std::sort(values.begin(), values.end());
  const double pos = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  const double frac = pos - static_cast<double>(lo);
  return values[lo] * (1.0 - frac) + values[hi] * frac;
}

}  // namespace

RangeResult range_of_oscillations(const EnsembleDataset& ds, const std::string& species,
                                  const TimeWindow& window, double scale,
                                  int n_bootstrap, std::uint64_t seed) {
  const int col = ds.species_column(species);
  std::vector<int> rows;
  for (int t = 0; t < ds.n_times(); ++t)
    if (ds.times[t] >= window.first - 1e-9 && ds.times[t] <= window.second + 1e-9)
      rows.push_back(t);
  if (rows.empty()) throw std::invalid_argument("window selects no timepoints");
  const int m = ds.n_trajectories();

  // values(t, i) for the window, already in output units
  Eigen::MatrixXd values(rows.size(), m);
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (int i = 0; i < m; ++i) values(r, i) = ds.data[i](rows[r], col) / scale;

  auto extrema = [&](const std::vector<int>& members) {
    double cmin = std::numeric_limits<double>::infinity();
    double cmax = -std::numeric_limits<double>::infinity();
    for (Eigen::Index r = 0; r < values.rows(); ++r) {
      double mean = 0.0;
      for (int i : members) mean += values(r, i);
      mean /= members.size();
      double var = 0.0;
      for (int i : members) var += (values(r, i) - mean) * (values(r, i) - mean);
      var /= members.size();
      const double sd = std::sqrt(var);
      cmin = std::min(cmin, mean - sd);
      cmax = std::max(cmax, mean + sd);
    }
    return std::pair<double, double>(cmin, cmax);
  };

  std::vector<int> all(m);
  for (int i = 0; i < m; ++i) all[i] = i;
  RangeResult res;
  std::tie(res.c_minus_min, res.c_plus_max) = extrema(all);

  Rng rng(seed);
  std::vector<double> boot_min(n_bootstrap), boot_max(n_bootstrap);
  std::vector<int> members(m);
  for (int b = 0; b < n_bootstrap; ++b) {
    for (int i = 0; i < m; ++i) members[i] = static_cast<int>(rng.below(m));
    std::tie(boot_min[b], boot_max[b]) = extrema(members);
  }
  res.ci_minus_lo = percentile(boot_min, 0.025);
  res.ci_minus_hi = percentile(boot_min, 0.975);
  res.ci_plus_lo = percentile(boot_max, 0.025);
  res.ci_plus_hi = percentile(boot_max, 0.975);
  return res;
}

Observables reconstruct_observables(const StandardParams& theta_hat,
                                    const StandardizingTransform& transform,
                                    const std::vector<int>& visible_cols) {
  const int n_v = theta_hat.n_v();
  if (static_cast<int>(visible_cols.size()) != n_v)
    throw std::invalid_argument("visible column count mismatch");
  const FullParams fp = to_full(theta_hat, Eigen::VectorXd::Zero(theta_hat.q()),
                                Eigen::VectorXd::Ones(theta_hat.q()));
  const MomentState ms = moments_from(fp);
  const Eigen::VectorXd div = transform.divisors();

  Observables obs;
  obs.mean.resize(n_v);
  obs.cov.resize(n_v, n_v);
  for (int i = 0; i < n_v; ++i)
    obs.mean[i] = transform.m[visible_cols[i]] + div[visible_cols[i]] * ms.mu[i];
  for (int i = 0; i < n_v; ++i)
    for (int j = 0; j < n_v; ++j)
      obs.cov(i, j) = div[visible_cols[i]] * ms.cov(i, j) * div[visible_cols[j]];
  return obs;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> fourier_latent_rate(double t,
                                                                const LatentFourier& lf) {
  const int q = lf.q();
  const int l_count = lf.n_freqs();
  Eigen::VectorXd dmu(q), dsigma(q);
  auto rate = [&](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, int row) {
    double num = 0.0;
    double weight = 0.0;
    for (int l = 0; l < l_count; ++l) {
      const double f = lf.freqs[l];
      num += -a(row, l) * f * std::sin(f * t) + b(row, l) * f * std::cos(f * t);
      weight += std::abs(a(row, l)) + std::abs(b(row, l));
    }
    return num / (std::max(weight, 1.0) + lf.epsilon);
  };
  for (int i = 0; i < q; ++i) {
    dmu[i] = rate(lf.a_mu, lf.b_mu, i);
    dsigma[i] = rate(lf.a_sigma, lf.b_sigma, i);
  }
  return {dmu, dsigma};
}

Eigen::MatrixXd moment_term_decomposition(const SubnetModel& model,
                                          const ThetaSeries& rollout,
                                          int visible_index) {
  if (visible_index < 0 || visible_index >= rollout.n_v)
    throw std::invalid_argument("visible index out of range");
  const int t_count = static_cast<int>(rollout.params.size());
  Eigen::MatrixXd terms(t_count, 6);
  for (int k = 0; k < t_count; ++k) {
    const double t = rollout.times[k];
    const auto& theta = rollout.params[k];
    const Eigen::VectorXd fhat = forward(model, theta, t, false, nullptr);
    const StandardParams fh = StandardParams::unpack(fhat, rollout.n_v, rollout.q);

    const auto [mu_h, sigma_h] = fourier_latent(t, model.lf);
    const auto [f_mu_h, f_sigma_h] = fourier_latent_rate(t, model.lf);
    const Eigen::VectorXd inv_sqrt = sigma_h.array().rsqrt();
    const Eigen::MatrixXd w = theta.w_hat * inv_sqrt.asDiagonal();
    // F_W from the standard-frame prediction: invert
    // Fhat_W = F_W sqrt(Sigma) + 1/2 W Sigma^{-1/2} F_Sigma.
    const Eigen::MatrixXd f_w =
        (fh.w_hat -
         0.5 * w * (inv_sqrt.array() * f_sigma_h.array()).matrix().asDiagonal()) *
        inv_sqrt.asDiagonal();
    const Eigen::VectorXd coupling = f_w * mu_h + w * f_mu_h;
    const Eigen::VectorXd f_b = fh.b_hat - coupling;

    // <X> = mu_v,i = b_i + (W mu_h)_i: sigma^2 and Sigma_h contribute 0.
    terms(k, 0) = f_b[visible_index];
    terms(k, 1) = (f_w * mu_h)[visible_index];
    terms(k, 2) = 0.0;
    terms(k, 3) = (w * f_mu_h)[visible_index];
    terms(k, 4) = 0.0;
    terms(k, 5) = fh.b_hat[visible_index];
  }
  return terms;
}

std::filesystem::path emit_figure_data(FigureKind kind, const FigureData& data,
                                       const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ostringstream csv;
  std::filesystem::path path;
  switch (kind) {
    case FigureKind::RangeDiagram: {
      path = dir / "range_diagram.csv";
      csv << "source,condition,c_minus_min,c_plus_max,ci_minus_lo,ci_minus_hi,"
             "ci_plus_lo,ci_plus_hi\n";
      for (const auto& row : data.range_rows) {
        csv << row.source << "," << io::format_double(row.condition) << ","
            << io::format_double(row.range.c_minus_min) << ","
            << io::format_double(row.range.c_plus_max) << ","
            << io::format_double(row.range.ci_minus_lo) << ","
            << io::format_double(row.range.ci_minus_hi) << ","
            << io::format_double(row.range.ci_plus_lo) << ","
            << io::format_double(row.range.ci_plus_hi) << "\n";
      }
      break;
    }
    case FigureKind::ParameterSlices: {
      path = dir / "parameter_slices.csv";
      const int d_hat = data.theta_ml.params.empty()
                            ? 0
                            : data.theta_ml.params.front().packed_size();
      csv << "t";
      for (int c = 0; c < d_hat; ++c) csv << ",ml_" << c;
      for (int c = 0; c < d_hat; ++c) csv << ",int_" << c;
      csv << "\n";
      for (std::size_t r = 0; r < data.theta_ml.params.size(); ++r) {
        csv << io::format_double(data.theta_ml.times[r]);
        const Eigen::VectorXd ml = data.theta_ml.params[r].pack();
        const Eigen::VectorXd in = data.theta_int.params[r].pack();
        for (int c = 0; c < d_hat; ++c) csv << "," << io::format_double(ml[c]);
        for (int c = 0; c < d_hat; ++c) csv << "," << io::format_double(in[c]);
        csv << "\n";
      }
      break;
    }
    case FigureKind::MseCurves: {
      path = dir / "mse_curves.csv";
      csv << "model,condition,training,seed,mse\n";
      for (const auto& row : data.mse_rows)
        csv << row.model << "," << io::format_double(row.condition) << ","
            << (row.training ? 1 : 0) << "," << row.seed << ","
            << io::format_double(row.mse) << "\n";
      break;
    }
    case FigureKind::TermDecomposition: {
      path = dir / "term_decomposition.csv";
      csv << "t,term_b,term_W,term_sigma2,term_mu_h,term_sigma_h,total\n";
      for (Eigen::Index r = 0; r < data.terms.rows(); ++r) {
        csv << io::format_double(data.term_times.at(r));
        for (int c = 0; c < 6; ++c) csv << "," << io::format_double(data.terms(r, c));
        csv << "\n";
      }
      break;
    }
    default:
      throw std::invalid_argument("unknown figure kind");
  }
  io::write_text(path, csv.str());
  return path;
}

}  // namespace camr
