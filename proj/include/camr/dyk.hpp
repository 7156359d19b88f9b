#ifndef CAMR_DYK_HPP
#define CAMR_DYK_HPP

#include <map>
#include <string>
#include <vector>

#include "camr/reaction.hpp"

namespace camr {

// Parameters of the De Young-Keizer IP3 receptor model together with the
// simulation controls. Rate constants are concentration-based (uM, s).
struct DykParams {
  double c0 = 2.0;      // total Ca in cytosolic-volume units, uM
  double c1 = 0.185;    // ER/cytosol volume ratio
  double v1 = 6.0;      // max channel flux, 1/s
  double v2 = 0.11;     // leak constant, 1/s
  double v3 = 0.9;      // max pump rate, uM/s
  double k3 = 0.1;      // pump activation, uM
  double a[5] = {400.0, 0.2, 400.0, 0.2, 20.0};           // 1/(uM s)
  double d[5] = {0.13, 1.049, 0.9434, 0.1445, 0.08234};   // uM
  double mu0_ca = 0.25;     // initial mean [Ca_Cyt], uM
  double mu0_ip3 = 0.5;     // initial mean [IP3], uM
  double sigma0_ca = 1e-3;  // uM
  double sigma0_ip3 = 1e-3; // uM
  double v_cyt = 1e-14;     // L
  double dt_write = 0.1;    // s
  double dt_ode = 1e-3;     // s
  double t_max = 50.0;      // s
  int n_ip3r = 100;         // receptor subunit count

  double b(int i) const { return a[i] * d[i]; }  // backward rate, 1/s

  // Throws std::invalid_argument when a constraint is violated.
  void validate() const;

  // Reads Table-style `key = value` entries; unknown keys are ignored so a
  // pipeline config can be passed directly.
  static DykParams from_key_values(const std::map<std::string, std::string>& kv);
};

// Species ordering used by every DYK-network consumer (trajectory columns,
// propensity tables): Ca_Cyt, Ca_ER, IP3, then the eight subunit states
// S_ijk in lexicographic order S000..S111 with i = IP3 site, j = activating
// Ca site, k = inhibiting Ca site. Open state is S110.
extern const char* const kDykSpeciesNames[11];
constexpr int kDykCa = 0;
constexpr int kDykCaEr = 1;
constexpr int kDykIp3 = 2;
constexpr int kDykS000 = 3;  // S000..S111 occupy indices 3..10

int dyk_state_index(int ip3_bound, int act_bound, int inh_bound);

// Builds the stochastic reaction system: 12 reversible subunit reactions
// (the state cube of the three binding sites) plus the transport pair
// 3 S110 + Ca_ER <=> 3 S110 + Ca_Cyt.
ReactionNetwork build_dyk_network(const DykParams& p);

struct DykOdeResult {
  std::vector<double> times;
  std::vector<double> ca;     // [Ca_Cyt], uM
  std::vector<double> ca_er;  // [Ca_ER] in cytosolic-volume units, uM
};

// Deterministic reference model: the eight subunit fractions plus the
// calcium currents J1 - J2 + J3, [IP3] clamped. Fixed-step RK4.
DykOdeResult integrate_deterministic_dyk(const DykParams& p, double ip3_um,
                                         double horizon_s, double dt);

// Order-of-magnitude subunit count from ER geometry: clusters on a grid of
// spacing dx over a folded sphere surface (area factor lambda).
double estimate_subunit_count(double v_cyt_liters, double dx_um, double lambda,
                              double c1 = 0.185);

}  // namespace camr

#endif
