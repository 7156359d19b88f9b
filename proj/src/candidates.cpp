#include "camr/candidates.hpp"

#include <atomic>
#include <cmath>

namespace camr {

namespace {
std::atomic<std::uint64_t> g_candidate_evals{0};
}

std::uint64_t candidate_eval_count() { return g_candidate_evals.load(); }

namespace detail {

void note_candidate_eval() { g_candidate_evals.fetch_add(1, std::memory_order_relaxed); }

MotifReaction motif_reaction(const ReactionMotif& m) {
  MotifReaction r;
  switch (m.kind) {
    case MotifKind::Birth:  // P -> 2P
      r.reactants[0] = m.role_a;
      r.n_reactants = 1;
      r.stoich_species[0] = m.role_a;
      r.stoich_delta[0] = 1;
      r.n_stoich = 1;
      break;
    case MotifKind::Death:  // H -> 0
      r.reactants[0] = m.role_a;
      r.n_reactants = 1;
      r.stoich_species[0] = m.role_a;
      r.stoich_delta[0] = -1;
      r.n_stoich = 1;
      break;
    case MotifKind::PredatorPrey:  // H + P -> 2H
      r.reactants[0] = m.role_a;
      r.reactants[1] = m.role_b;
      r.n_reactants = 2;
      r.stoich_species[0] = m.role_a;
      r.stoich_delta[0] = 1;
      r.stoich_species[1] = m.role_b;
      r.stoich_delta[1] = -1;
      r.n_stoich = 2;
      break;
    case MotifKind::Conserving:  // A + R -> R
      r.reactants[0] = m.role_a;
      r.reactants[1] = m.role_b;
      r.n_reactants = 2;
      r.stoich_species[0] = m.role_a;
      r.stoich_delta[0] = -1;
      r.n_stoich = 1;
      break;
  }
  return r;
}

}  // namespace detail

void ReactionMotif::validate(int n_species) const {
  auto in_range = [&](int idx) { return idx >= 0 && idx < n_species; };
  switch (kind) {
    case MotifKind::Birth:
    case MotifKind::Death:
      if (!in_range(role_a)) throw std::invalid_argument("motif role out of range");
      break;
    case MotifKind::PredatorPrey:
    case MotifKind::Conserving:
      if (!in_range(role_a) || !in_range(role_b))
        throw std::invalid_argument("motif role out of range");
      if (role_a == role_b)
        throw std::invalid_argument("motif roles must be distinct");
      break;
  }
}

std::vector<std::string> motif_species_names(const std::vector<std::string>& visible,
                                             int q) {
  std::vector<std::string> names = visible;
  if (q == 1) {
    names.push_back("X");
  } else {
    for (int i = 0; i < q; ++i) names.push_back("X" + std::to_string(i));
  }
  return names;
}

namespace {

int name_index(const std::string& name, const std::vector<std::string>& names) {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<int>(i);
  if (name == "X" && !names.empty() && names.back() == "X0")
    throw std::invalid_argument("ambiguous hidden species 'X'; use X0..");
  throw std::invalid_argument("unknown motif species: " + name);
}

std::string strip(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t");
  std::size_t e = s.find_last_not_of(" \t");
  if (b == std::string::npos) return "";
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string format_motif(const ReactionMotif& m, const std::vector<std::string>& names) {
  switch (m.kind) {
    case MotifKind::Birth: return "Birth(" + names.at(m.role_a) + ")";
    case MotifKind::Death: return "Death(" + names.at(m.role_a) + ")";
    case MotifKind::PredatorPrey:
      return "PredatorPrey(" + names.at(m.role_a) + "," + names.at(m.role_b) + ")";
    case MotifKind::Conserving:
      return "Conserving(" + names.at(m.role_a) + "," + names.at(m.role_b) + ")";
  }
  throw std::logic_error("bad motif kind");
}

ReactionMotif parse_motif(const std::string& text, const std::vector<std::string>& names) {
  const auto open = text.find('(');
  const auto close = text.rfind(')');
  if (open == std::string::npos || close == std::string::npos || close < open)
    throw std::invalid_argument("bad motif syntax: " + text);
  const std::string kind = strip(text.substr(0, open));
  const std::string args = text.substr(open + 1, close - open - 1);
  std::vector<std::string> parts;
  std::string current;
  for (char c : args) {
    if (c == ',') {
      parts.push_back(strip(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  parts.push_back(strip(current));

  auto one = [&]() {
    if (parts.size() != 1) throw std::invalid_argument("motif needs one species: " + text);
    return name_index(parts[0], names);
  };
  auto two = [&](int which) {
    if (parts.size() != 2) throw std::invalid_argument("motif needs two species: " + text);
    return name_index(parts[which], names);
  };
  ReactionMotif m;
  if (kind == "Birth") m = ReactionMotif::birth(one());
  else if (kind == "Death") m = ReactionMotif::death(one());
  else if (kind == "PredatorPrey") m = ReactionMotif::predator_prey(two(0), two(1));
  else if (kind == "Conserving") m = ReactionMotif::conserving(two(0), two(1));
  else throw std::invalid_argument("unknown motif kind: " + kind);
  m.validate(static_cast<int>(names.size()));
  return m;
}

Eigen::VectorXd default_frequencies(int count, double period_s) {
  Eigen::VectorXd f(count);
  for (int l = 0; l < count; ++l)
    f[l] = (l + 1) * 2.0 * 3.14159265358979324 / period_s;
  return f;
}

LatentFourier zero_latent_fourier(int q, const Eigen::VectorXd& freqs, double epsilon) {
  LatentFourier lf;
  lf.freqs = freqs;
  lf.a_mu = Eigen::MatrixXd::Zero(q, freqs.size());
  lf.b_mu = Eigen::MatrixXd::Zero(q, freqs.size());
  lf.a_sigma = Eigen::MatrixXd::Zero(q, freqs.size());
  lf.b_sigma = Eigen::MatrixXd::Zero(q, freqs.size());
  lf.epsilon = epsilon;
  return lf;
}

LatentFourier bootstrap_latent_fourier(const LatentFourier& lf) {
  LatentFourier out = zero_latent_fourier(lf.q(), lf.freqs, lf.epsilon);
  const int last = lf.n_freqs() - 1;
  out.a_mu.col(last).setOnes();
  out.b_mu.col(last).setOnes();
  out.a_sigma.col(last).setOnes();
  out.b_sigma.col(last).setOnes();
  return out;
}

Eigen::VectorXd latent_coeffs(const LatentFourier& lf) {
  const int q = lf.q(), l = lf.n_freqs();
  Eigen::VectorXd c(4 * q * l);
  int pos = 0;
  for (const auto* mat : {&lf.a_mu, &lf.b_mu, &lf.a_sigma, &lf.b_sigma})
    for (int i = 0; i < q; ++i)
      for (int j = 0; j < l; ++j) c[pos++] = (*mat)(i, j);
  return c;
}

void set_latent_coeffs(LatentFourier& lf, const Eigen::VectorXd& coeffs) {
  if (coeffs.size() != lf.n_coeffs())
    throw std::invalid_argument("coefficient count mismatch");
  const int q = lf.q(), l = lf.n_freqs();
  int pos = 0;
  for (auto* mat : {&lf.a_mu, &lf.b_mu, &lf.a_sigma, &lf.b_sigma})
    for (int i = 0; i < q; ++i)
      for (int j = 0; j < l; ++j) (*mat)(i, j) = coeffs[pos++];
}

double gaussian_closure_third_moment(double mu_x, double mu_y, double mu_z,
                                     double m_xy, double m_xz, double m_yz) {
  return -2.0 * mu_x * mu_y * mu_z + mu_x * m_yz + mu_y * m_xz + mu_z * m_xy;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> fourier_latent(double t,
                                                           const LatentFourier& lf) {
  return detail::fourier_latent_t<double>(t, lf);
}

TrackedMoments closed_moment_rhs(const ReactionMotif& motif, const MomentState& phi,
                                 int n_v, int q) {
  detail::MomentsT<double> ms{phi.mu, phi.cov};
  const auto tracked = detail::closed_moment_rhs_t<double>(motif, ms, n_v, q);
  return {tracked.dmu_v, tracked.dc_vh, tracked.dtr_cv, tracked.dmu_h,
          tracked.dsigma_h};
}

namespace {

detail::FullParamsT<double> lift(const FullParams& fp) {
  return {fp.b, fp.w, fp.sigma2, fp.mu_h, fp.sigma_h};
}

}  // namespace

ParamDerivs observables_to_param_rhs(const TrackedMoments& dphi, const FullParams& fp) {
  detail::TrackedT<double> tracked{dphi.dmu_v, dphi.dc_vh, dphi.dtr_cv, dphi.dmu_h,
                                   dphi.dsigma_h};
  const auto pd = detail::observables_to_param_rhs_t<double>(tracked, lift(fp));
  return {pd.f_b, pd.f_w, pd.f_sigma2, pd.f_mu_h, pd.f_sigma_h};
}

Eigen::VectorXd to_standard_rhs(const ParamDerivs& f, const FullParams& fp) {
  detail::ParamDerivsT<double> pd{f.f_b, f.f_w, f.f_sigma2, f.f_mu_h, f.f_sigma_h};
  return detail::to_standard_rhs_t<double>(pd, lift(fp));
}

Eigen::VectorXd candidate_vector(const StandardParams& theta_hat, double t,
                                 const LatentFourier& lf,
                                 const std::vector<ReactionMotif>& motifs) {
  return detail::candidate_vector_t<double>(theta_hat, t, lf, motifs);
}

CandidateStandardization fit_candidate_standardization(
    const ThetaSeries& series, const LatentFourier& lf,
    const std::vector<ReactionMotif>& motifs) {
  if (series.params.empty()) throw std::invalid_argument("empty series");
  const LatentFourier boot = bootstrap_latent_fourier(lf);
  const int dim = static_cast<int>(motifs.size()) * series.params.front().packed_size();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(dim);
  const double t_count = static_cast<double>(series.params.size());
  for (std::size_t i = 0; i < series.params.size(); ++i) {
    const Eigen::VectorXd c =
        candidate_vector(series.params[i], series.times[i], boot, motifs);
    sum += c;
    sq += c.cwiseProduct(c);
  }
  CandidateStandardization st;
  st.mean = sum / t_count;
  st.std = (sq / t_count - st.mean.cwiseProduct(st.mean))
               .cwiseMax(0.0)
               .cwiseSqrt()
               .cwiseMax(1e-12);
  return st;
}

}  // namespace camr
