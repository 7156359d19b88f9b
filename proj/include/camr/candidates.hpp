#ifndef CAMR_CANDIDATES_HPP
#define CAMR_CANDIDATES_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "camr/dual.hpp"
#include "camr/pca.hpp"

namespace camr {

// Single-reaction motifs whose closed moment equations provide the
// physics-derived inputs. Unit rate throughout; the network learns the
// effective magnitudes.
enum class MotifKind { Birth, Death, PredatorPrey, Conserving };

struct ReactionMotif {
  MotifKind kind = MotifKind::Birth;
  int role_a = -1;  // Birth: P, Death: H, PredatorPrey: predator H, Conserving: A
  int role_b = -1;  // PredatorPrey: prey P, Conserving: conserved R

  static ReactionMotif birth(int p) { return {MotifKind::Birth, p, -1}; }
  static ReactionMotif death(int h) { return {MotifKind::Death, h, -1}; }
  static ReactionMotif predator_prey(int h, int p) {
    return {MotifKind::PredatorPrey, h, p};
  }
  static ReactionMotif conserving(int a, int r) {
    return {MotifKind::Conserving, a, r};
  }

  void validate(int n_species) const;
};

// Species naming for motif declarations: visible names first, then the
// hidden components ("X" for q = 1, otherwise X0, X1, ...).
std::vector<std::string> motif_species_names(const std::vector<std::string>& visible,
                                             int q);
std::string format_motif(const ReactionMotif& m, const std::vector<std::string>& names);
ReactionMotif parse_motif(const std::string& text, const std::vector<std::string>& names);

// Time-dependent latent mean and diagonal covariance as bounded Fourier
// series. Templated on the scalar so coefficient gradients can be carried
// by camr::Dual.
template <class S>
struct LatentFourierT {
  Eigen::VectorXd freqs;  // rad/s, fixed grid
  Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic> a_mu, b_mu;        // q x L
  Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic> a_sigma, b_sigma;  // q x L
  double epsilon = 1e-8;

  int q() const { return static_cast<int>(a_mu.rows()); }
  int n_freqs() const { return static_cast<int>(freqs.size()); }
  int n_coeffs() const { return 4 * q() * n_freqs(); }
};

using LatentFourier = LatentFourierT<double>;

// l * 2*pi / period for l = 1..L.
Eigen::VectorXd default_frequencies(int count = 6, double period_s = 40.0);
LatentFourier zero_latent_fourier(int q, const Eigen::VectorXd& freqs,
                                  double epsilon = 1e-8);
// Standardization bootstrap: only the highest frequency kept, a = b = 1.
LatentFourier bootstrap_latent_fourier(const LatentFourier& lf);

// Flat coefficient layout [a_mu, b_mu, a_sigma, b_sigma], each row-major.
Eigen::VectorXd latent_coeffs(const LatentFourier& lf);
void set_latent_coeffs(LatentFourier& lf, const Eigen::VectorXd& coeffs);

// Gaussian closure of a third-order raw moment <n_x n_y n_z> from means and
// raw second moments.
double gaussian_closure_third_moment(double mu_x, double mu_y, double mu_z,
                                     double m_xy, double m_xz, double m_yz);

struct TrackedMoments {
  Eigen::VectorXd dmu_v;     // N_v
  Eigen::MatrixXd dc_vh;     // N_v x q
  double dtr_cv = 0.0;
  Eigen::VectorXd dmu_h;     // q
  Eigen::VectorXd dsigma_h;  // q
};

struct ParamDerivs {
  Eigen::VectorXd f_b;
  Eigen::MatrixXd f_w;
  double f_sigma2 = 0.0;
  Eigen::VectorXd f_mu_h;
  Eigen::VectorXd f_sigma_h;
};

std::pair<Eigen::VectorXd, Eigen::VectorXd> fourier_latent(double t,
                                                           const LatentFourier& lf);
TrackedMoments closed_moment_rhs(const ReactionMotif& motif, const MomentState& phi,
                                 int n_v, int q);
ParamDerivs observables_to_param_rhs(const TrackedMoments& dphi, const FullParams& fp);
Eigen::VectorXd to_standard_rhs(const ParamDerivs& f, const FullParams& fp);

// Full pipeline for one motif set: D_hat entries per motif, concatenated in
// motif order.
Eigen::VectorXd candidate_vector(const StandardParams& theta_hat, double t,
                                 const LatentFourier& lf,
                                 const std::vector<ReactionMotif>& motifs);

struct CandidateStandardization {
  Eigen::VectorXd mean;  // n_motifs * D_hat (or D_hat in parameters-only mode)
  Eigen::VectorXd std;   // floored at 1e-12
};

CandidateStandardization fit_candidate_standardization(
    const ThetaSeries& series, const LatentFourier& lf,
    const std::vector<ReactionMotif>& motifs);

// Diagnostics: number of candidate_vector evaluations since process start
// (any scalar type). Used to verify the parameters-only path never touches
// this module.
std::uint64_t candidate_eval_count();

namespace detail {

void note_candidate_eval();

template <class S>
using VecT = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <class S>
using MatT = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

template <class S>
struct FullParamsT {
  VecT<S> b;
  MatT<S> w;
  S sigma2;
  VecT<S> mu_h;
  VecT<S> sigma_h;
};

template <class S>
struct MomentsT {
  VecT<S> mu;
  MatT<S> cov;
};

template <class S>
struct TrackedT {
  VecT<S> dmu_v;
  MatT<S> dc_vh;
  S dtr_cv;
  VecT<S> dmu_h;
  VecT<S> dsigma_h;
};

template <class S>
struct ParamDerivsT {
  VecT<S> f_b;
  MatT<S> f_w;
  S f_sigma2;
  VecT<S> f_mu_h;
  VecT<S> f_sigma_h;
};

template <class S>
std::pair<VecT<S>, VecT<S>> fourier_latent_t(double t, const LatentFourierT<S>& lf) {
  using std::abs;
  using std::cos;
  using std::sin;
  const int q = lf.q();
  const int l_count = lf.n_freqs();
  if (l_count < 1) throw std::invalid_argument("need at least one frequency");
  VecT<S> mu_h(q), sigma_h(q);
  auto series = [&](const MatT<S>& a, const MatT<S>& b, int row) {
    S num = S(0.0);
    S weight = S(0.0);
    for (int l = 0; l < l_count; ++l) {
      const double phase = lf.freqs[l] * t;
      num += a(row, l) * S(std::cos(phase)) + b(row, l) * S(std::sin(phase));
      weight += abs(a(row, l)) + abs(b(row, l));
    }
    const S den = std::max(weight, S(1.0)) + S(lf.epsilon);
    return num / den;
  };
  for (int i = 0; i < q; ++i) {
    mu_h[i] = series(lf.a_mu, lf.b_mu, i);
    sigma_h[i] = S(1.0 + lf.epsilon) + series(lf.a_sigma, lf.b_sigma, i);
  }
  return {mu_h, sigma_h};
}

template <class S>
FullParamsT<S> to_full_t(const StandardParams& sp, const VecT<S>& mu_h,
                         const VecT<S>& sigma_h) {
  using std::sqrt;
  FullParamsT<S> fp;
  const int q = sp.q();
  VecT<S> inv_sqrt(q);
  for (int j = 0; j < q; ++j) inv_sqrt[j] = S(1.0) / sqrt(sigma_h[j]);
  fp.w = sp.w_hat.template cast<S>() * inv_sqrt.asDiagonal();
  fp.b = sp.b_hat.template cast<S>() - fp.w * mu_h;
  fp.sigma2 = S(sp.sigma2);
  fp.mu_h = mu_h;
  fp.sigma_h = sigma_h;
  return fp;
}

template <class S>
MomentsT<S> moments_from_t(const FullParamsT<S>& fp) {
  const int n_v = static_cast<int>(fp.b.size());
  const int q = static_cast<int>(fp.mu_h.size());
  MomentsT<S> ms;
  ms.mu.resize(n_v + q);
  ms.mu.head(n_v) = fp.b + fp.w * fp.mu_h;
  ms.mu.tail(q) = fp.mu_h;
  ms.cov = MatT<S>::Zero(n_v + q, n_v + q);
  ms.cov.topLeftCorner(n_v, n_v) =
      fp.w * fp.sigma_h.asDiagonal() * fp.w.transpose();
  for (int i = 0; i < n_v; ++i) ms.cov(i, i) += fp.sigma2;
  ms.cov.topRightCorner(n_v, q) = fp.w * fp.sigma_h.asDiagonal();
  ms.cov.bottomLeftCorner(q, n_v) = ms.cov.topRightCorner(n_v, q).transpose();
  for (int j = 0; j < q; ++j) ms.cov(n_v + j, n_v + j) = fp.sigma_h[j];
  return ms;
}

// Reactant orders and stoichiometry of a motif; every propensity here is a
// monomial of degree <= 2.
struct MotifReaction {
  int reactants[2] = {-1, -1};
  int stoich_species[2] = {-1, -1};
  int stoich_delta[2] = {0, 0};
  int n_reactants = 0;
  int n_stoich = 0;
};

MotifReaction motif_reaction(const ReactionMotif& m);

template <class S>
S third_moment_t(const VecT<S>& mu, const MatT<S>& raw, int x, int y, int z) {
  return S(-2.0) * mu[x] * mu[y] * mu[z] + mu[x] * raw(y, z) + mu[y] * raw(x, z) +
         mu[z] * raw(x, y);
}

template <class S>
TrackedT<S> closed_moment_rhs_t(const ReactionMotif& motif, const MomentsT<S>& phi,
                                int n_v, int q) {
  const int n = n_v + q;
  motif.validate(n);
  const MotifReaction rxn = motif_reaction(motif);

  const MatT<S> raw = phi.cov + phi.mu * phi.mu.transpose();

  // <rho> and <rho n_i> for the monomial propensity with unit rate.
  S mean_rho;
  if (rxn.n_reactants == 1)
    mean_rho = phi.mu[rxn.reactants[0]];
  else
    mean_rho = raw(rxn.reactants[0], rxn.reactants[1]);
  auto rho_n = [&](int i) -> S {
    if (rxn.n_reactants == 1) return raw(rxn.reactants[0], i);
    return third_moment_t(phi.mu, raw, rxn.reactants[0], rxn.reactants[1], i);
  };

  VecT<S> nu = VecT<S>::Zero(n);
  VecT<S> dmu = VecT<S>::Zero(n);
  for (int k = 0; k < rxn.n_stoich; ++k) {
    nu[rxn.stoich_species[k]] = S(static_cast<double>(rxn.stoich_delta[k]));
    dmu[rxn.stoich_species[k]] = nu[rxn.stoich_species[k]] * mean_rho;
  }

  auto dcov = [&](int i, int j) -> S {
    // d<n_i n_j> = nu_j <rho n_i> + nu_i <rho n_j> + nu_i nu_j <rho>
    S draw = S(0.0);
    if (value_of(nu[j]) != 0.0) draw += nu[j] * rho_n(i);
    if (value_of(nu[i]) != 0.0) draw += nu[i] * rho_n(j);
    if (value_of(nu[i]) != 0.0 && value_of(nu[j]) != 0.0)
      draw += nu[i] * nu[j] * mean_rho;
    return draw - phi.mu[i] * dmu[j] - phi.mu[j] * dmu[i];
  };

  TrackedT<S> out;
  out.dmu_v = dmu.head(n_v);
  out.dmu_h = dmu.tail(q);
  out.dc_vh.resize(n_v, q);
  for (int i = 0; i < n_v; ++i)
    for (int j = 0; j < q; ++j) out.dc_vh(i, j) = dcov(i, n_v + j);
  out.dtr_cv = S(0.0);
  for (int i = 0; i < n_v; ++i) out.dtr_cv += dcov(i, i);
  out.dsigma_h.resize(q);
  for (int j = 0; j < q; ++j) out.dsigma_h[j] = dcov(n_v + j, n_v + j);
  return out;
}

// F_W mu_h + W F_mu_h. Kept as one shared expression: the b-channel formulas
// subtract and re-add this exact vector, so conserved species whose mean
// derivative vanishes come out as exact zeros.
template <class S>
VecT<S> latent_coupling(const MatT<S>& f_w, const MatT<S>& w, const VecT<S>& mu_h,
                        const VecT<S>& f_mu_h) {
  return f_w * mu_h + w * f_mu_h;
}

template <class S>
ParamDerivsT<S> observables_to_param_rhs_t(const TrackedT<S>& dphi,
                                           const FullParamsT<S>& fp) {
  const int n_v = static_cast<int>(fp.b.size());
  const int q = static_cast<int>(fp.mu_h.size());
  for (int j = 0; j < q; ++j)
    if (!(value_of(fp.sigma_h[j]) > 0.0))
      throw std::invalid_argument("singular Sigma_h");

  VecT<S> inv_sigma(q);
  for (int j = 0; j < q; ++j) inv_sigma[j] = S(1.0) / fp.sigma_h[j];
  const MatT<S> c_vh = fp.w * fp.sigma_h.asDiagonal();

  ParamDerivsT<S> out;
  // dW/dt = dC_vh Sigma^-1 - C_vh Sigma^-1 dSigma Sigma^-1
  out.f_w = dphi.dc_vh * inv_sigma.asDiagonal() -
            c_vh * (inv_sigma.array() * dphi.dsigma_h.array() * inv_sigma.array())
                       .matrix()
                       .asDiagonal();
  out.f_mu_h = dphi.dmu_h;
  out.f_sigma_h = dphi.dsigma_h;
  // db/dt = dmu_v - dW/dt mu_h - W dmu_h/dt
  out.f_b = dphi.dmu_v - latent_coupling(out.f_w, fp.w, fp.mu_h, out.f_mu_h);
  // sigma^2 = (Tr C_v - Tr(W Sigma_h W^T)) / N_v, so
  // dsigma^2/dt = (dTr(C_v) - 2 Tr(Sigma_h W^T dW/dt) - sum W^2 dSigma) / N_v
  S cross = S(0.0);
  for (int i = 0; i < n_v; ++i)
    for (int j = 0; j < q; ++j)
      cross += S(2.0) * fp.w(i, j) * out.f_w(i, j) * fp.sigma_h[j] +
               fp.w(i, j) * fp.w(i, j) * dphi.dsigma_h[j];
  out.f_sigma2 = (dphi.dtr_cv - cross) / S(static_cast<double>(n_v));
  return out;
}

template <class S>
VecT<S> to_standard_rhs_t(const ParamDerivsT<S>& f, const FullParamsT<S>& fp) {
  using std::sqrt;
  const int n_v = static_cast<int>(fp.b.size());
  const int q = static_cast<int>(fp.mu_h.size());
  for (int j = 0; j < q; ++j)
    if (!(value_of(fp.sigma_h[j]) > 0.0))
      throw std::invalid_argument("Sigma_h must be positive");

  VecT<S> sqrt_sigma(q), inv_sqrt(q);
  for (int j = 0; j < q; ++j) {
    sqrt_sigma[j] = sqrt(fp.sigma_h[j]);
    inv_sqrt[j] = S(1.0) / sqrt_sigma[j];
  }
  const VecT<S> fhat_b = f.f_b + latent_coupling(f.f_w, fp.w, fp.mu_h, f.f_mu_h);
  const MatT<S> fhat_w =
      f.f_w * sqrt_sigma.asDiagonal() +
      S(0.5) * fp.w *
          (inv_sqrt.array() * f.f_sigma_h.array()).matrix().asDiagonal();

  VecT<S> packed(n_v + n_v * q + 1);
  packed.head(n_v) = fhat_b;
  for (int i = 0; i < n_v; ++i)
    for (int j = 0; j < q; ++j) packed[n_v + i * q + j] = fhat_w(i, j);
  packed[packed.size() - 1] = f.f_sigma2;
  return packed;
}

template <class S>
VecT<S> candidate_vector_t(const StandardParams& theta_hat, double t,
                           const LatentFourierT<S>& lf,
                           const std::vector<ReactionMotif>& motifs) {
  note_candidate_eval();
  const int n_v = theta_hat.n_v();
  const int q = theta_hat.q();
  if (lf.q() != q) throw std::invalid_argument("latent dimension mismatch");
  const int d_hat = theta_hat.packed_size();

  const auto [mu_h, sigma_h] = fourier_latent_t(t, lf);
  const FullParamsT<S> fp = to_full_t<S>(theta_hat, mu_h, sigma_h);
  const MomentsT<S> phi = moments_from_t(fp);

  VecT<S> out(static_cast<Eigen::Index>(motifs.size()) * d_hat);
  for (std::size_t m = 0; m < motifs.size(); ++m) {
    const TrackedT<S> dphi = closed_moment_rhs_t(motifs[m], phi, n_v, q);
    const ParamDerivsT<S> pd = observables_to_param_rhs_t(dphi, fp);
    out.segment(static_cast<Eigen::Index>(m) * d_hat, d_hat) =
        to_standard_rhs_t(pd, fp);
  }
  return out;
}

}  // namespace detail

}  // namespace camr

#endif
