#include "camr/pca.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "camr/io.hpp"

namespace camr {

Eigen::VectorXd StandardParams::pack() const {
  Eigen::VectorXd out(packed_size());
  out.head(n_v()) = b_hat;
  for (int i = 0; i < n_v(); ++i)
    for (int j = 0; j < q(); ++j) out[n_v() + i * q() + j] = w_hat(i, j);
  out[packed_size() - 1] = sigma2;
  return out;
}

StandardParams StandardParams::unpack(const Eigen::VectorXd& packed, int n_v, int q) {
  if (packed.size() != n_v + n_v * q + 1)
    throw std::invalid_argument("packed parameter size mismatch");
  StandardParams sp;
  sp.b_hat = packed.head(n_v);
  sp.w_hat.resize(n_v, q);
  for (int i = 0; i < n_v; ++i)
    for (int j = 0; j < q; ++j) sp.w_hat(i, j) = packed[n_v + i * q + j];
  sp.sigma2 = packed[packed.size() - 1];
  return sp;
}

namespace {

// Sign convention: u^T 1 >= 0, falling back to the first nonzero entry when
// the dot product is exactly zero.
void fix_sign(Eigen::Ref<Eigen::VectorXd> u) {
  const double dot = u.sum();
  if (dot > 0.0) return;
  if (dot < 0.0) {
    u = -u;
    return;
  }
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (u[i] != 0.0) {
      if (u[i] < 0.0) u = -u;
      return;
    }
  }
}

}  // namespace

StandardParams ml_estimate(const Eigen::MatrixXd& x, int q,
                           const std::map<int, double>& variance_floor) {
  const int m = static_cast<int>(x.rows());
  const int n_v = static_cast<int>(x.cols());
  if (q < 1 || q >= n_v)
    throw std::invalid_argument("latent dimension must satisfy 1 <= q < N_v");
  if (m < 2) throw std::invalid_argument("need at least two samples");
  if (!x.allFinite()) throw std::invalid_argument("non-finite data");

  StandardParams sp;
  sp.b_hat = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - sp.b_hat.transpose();
  Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(m);
  for (const auto& [idx, value] : variance_floor) {
    if (idx < 0 || idx >= n_v)
      throw std::invalid_argument("variance floor index out of range");
    cov(idx, idx) = value;
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("eigendecomposition failed");
  Eigen::VectorXd evals = solver.eigenvalues();
  Eigen::MatrixXd evecs = solver.eigenvectors();
  for (int i = 0; i < n_v; ++i) fix_sign(evecs.col(i));

  // Descending eigenvalues; exact ties broken lexicographically on the
  // sign-fixed eigenvectors so series are reproducible.
  std::vector<int> order(n_v);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (evals[a] != evals[b]) return evals[a] > evals[b];
    for (int r = 0; r < n_v; ++r)
      if (evecs(r, a) != evecs(r, b)) return evecs(r, a) < evecs(r, b);
    return false;
  });

  double tail = 0.0;
  for (int i = q; i < n_v; ++i) tail += evals[order[i]];
  sp.sigma2 = std::max(0.0, tail / (n_v - q));

  sp.w_hat.resize(n_v, q);
  for (int j = 0; j < q; ++j) {
    const double scale = std::sqrt(std::max(0.0, evals[order[j]] - sp.sigma2));
    sp.w_hat.col(j) = evecs.col(order[j]) * scale;
  }
  return sp;
}

Eigen::MatrixXd ThetaSeries::packed() const {
  if (params.empty()) return {};
  Eigen::MatrixXd out(params.size(), params.front().packed_size());
  for (std::size_t i = 0; i < params.size(); ++i)
    out.row(i) = params[i].pack().transpose();
  return out;
}

void ThetaSeries::save(const std::filesystem::path& path) const {
  std::ostringstream csv;
  csv << "t";
  for (int i = 1; i <= n_v; ++i) csv << ",b_" << i;
  for (int i = 1; i <= n_v; ++i)
    for (int j = 1; j <= q; ++j) csv << ",W_" << i << "_" << j;
  csv << ",sigma2\n";
  for (std::size_t r = 0; r < params.size(); ++r) {
    csv << io::format_double(times[r]);
    const Eigen::VectorXd packed = params[r].pack();
    for (Eigen::Index c = 0; c < packed.size(); ++c)
      csv << "," << io::format_double(packed[c]);
    csv << "\n";
  }
  io::write_text(path, csv.str());
}

ThetaSeries ThetaSeries::load(const std::filesystem::path& path, int n_v, int q) {
  const auto csv = io::read_csv(path);
  ThetaSeries series;
  series.n_v = n_v;
  series.q = q;
  const int d_hat = n_v + n_v * q + 1;
  if (static_cast<int>(csv.header.size()) != d_hat + 1)
    throw std::runtime_error("theta series column count mismatch");
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    series.times.push_back(csv.as_double(r, 0));
    Eigen::VectorXd packed(d_hat);
    for (int c = 0; c < d_hat; ++c) packed[c] = csv.as_double(r, c + 1);
    series.params.push_back(StandardParams::unpack(packed, n_v, q));
  }
  return series;
}

ThetaSeries estimate_series(const EnsembleDataset& ds, int q,
                            const std::map<int, double>& variance_floor,
                            const std::optional<TimeWindow>& window) {
  ThetaSeries series;
  series.n_v = static_cast<int>(ds.visible.size());
  series.q = q;
  for (int t = 0; t < ds.n_times(); ++t) {
    const double time = ds.times[t];
    if (window && (time < window->first - 1e-9 || time > window->second + 1e-9))
      continue;
    series.times.push_back(time);
    series.params.push_back(ml_estimate(data_matrix_at(ds, time), q, variance_floor));
  }
  if (series.params.empty()) throw std::invalid_argument("window selects no timepoints");
  return series;
}

FullParams to_full(const StandardParams& sp, const Eigen::VectorXd& mu_h,
                   const Eigen::VectorXd& sigma_h) {
  if (mu_h.size() != sp.q() || sigma_h.size() != sp.q())
    throw std::invalid_argument("latent dimension mismatch");
  if ((sigma_h.array() <= 0.0).any())
    throw std::invalid_argument("Sigma_h entries must be positive");
  FullParams fp;
  const Eigen::VectorXd inv_sqrt = sigma_h.array().rsqrt();
  fp.w = sp.w_hat * inv_sqrt.asDiagonal();
  fp.b = sp.b_hat - fp.w * mu_h;
  fp.sigma2 = sp.sigma2;
  fp.mu_h = mu_h;
  fp.sigma_h = sigma_h;
  return fp;
}

StandardParams to_standard(const FullParams& fp) {
  if ((fp.sigma_h.array() <= 0.0).any())
    throw std::invalid_argument("Sigma_h entries must be positive");
  StandardParams sp;
  sp.b_hat = fp.b + fp.w * fp.mu_h;
  sp.w_hat = fp.w * fp.sigma_h.array().sqrt().matrix().asDiagonal();
  sp.sigma2 = fp.sigma2;
  return sp;
}

MomentState moments_from(const FullParams& fp) {
  const int n_v = static_cast<int>(fp.b.size());
  const int q = static_cast<int>(fp.mu_h.size());
  MomentState ms;
  ms.mu.resize(n_v + q);
  ms.mu.head(n_v) = fp.b + fp.w * fp.mu_h;
  ms.mu.tail(q) = fp.mu_h;
  ms.cov.resize(n_v + q, n_v + q);
  // Visible block W Sigma_h W^T + sigma^2 I: the gauge-invariant marginal,
  // positive semidefinite for every parameter set produced by to_full.
  ms.cov.topLeftCorner(n_v, n_v) =
      fp.w * fp.sigma_h.asDiagonal() * fp.w.transpose() +
      fp.sigma2 * Eigen::MatrixXd::Identity(n_v, n_v);
  ms.cov.topRightCorner(n_v, q) = fp.w * fp.sigma_h.asDiagonal();
  ms.cov.bottomLeftCorner(q, n_v) = ms.cov.topRightCorner(n_v, q).transpose();
  ms.cov.bottomRightCorner(q, q) = fp.sigma_h.asDiagonal();
  return ms;
}

}  // namespace camr
