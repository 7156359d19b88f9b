#include "camr/dyk.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace camr {

const char* const kDykSpeciesNames[11] = {
    "Ca_Cyt", "Ca_ER", "IP3", "S000", "S001", "S010",
    "S011",   "S100",  "S101", "S110", "S111"};

int dyk_state_index(int ip3_bound, int act_bound, int inh_bound) {
  return kDykS000 + 4 * ip3_bound + 2 * act_bound + inh_bound;
}

void DykParams::validate() const {
  auto positive = [](double x, const char* what) {
    if (!(x > 0.0)) throw std::invalid_argument(std::string(what) + " must be positive");
  };
  positive(c0, "c0");
  positive(v1, "v1");
  positive(v2, "v2");
  positive(v3, "v3");
  positive(k3, "k3");
  for (int i = 0; i < 5; ++i) {
    positive(a[i], "a_i");
    positive(d[i], "d_i");
  }
  positive(v_cyt, "V_cyt");
  positive(sigma0_ca, "sigma0_Ca");
  positive(sigma0_ip3, "sigma0_IP3");
  if (!(c1 > 0.0 && c1 < 1.0)) throw std::invalid_argument("c1 must lie in (0,1)");
  if (!(dt_ode > 0.0 && dt_ode <= dt_write && dt_write <= t_max))
    throw std::invalid_argument("need dt_ode <= dt_write <= T_max");
  if (n_ip3r < 0) throw std::invalid_argument("n_IP3R must be non-negative");
}

DykParams DykParams::from_key_values(const std::map<std::string, std::string>& kv) {
  DykParams p;
  auto get = [&](const char* key, double& out) {
    auto it = kv.find(key);
    if (it != kv.end()) out = std::stod(it->second);
  };
  get("c0", p.c0);
  get("c1", p.c1);
  get("v1", p.v1);
  get("v2", p.v2);
  get("v3", p.v3);
  get("k3", p.k3);
  const char* akeys[5] = {"a1", "a2", "a3", "a4", "a5"};
  const char* dkeys[5] = {"d1", "d2", "d3", "d4", "d5"};
  for (int i = 0; i < 5; ++i) {
    get(akeys[i], p.a[i]);
    get(dkeys[i], p.d[i]);
  }
  get("mu0_Ca", p.mu0_ca);
  get("mu0_IP3", p.mu0_ip3);
  get("sigma0_Ca", p.sigma0_ca);
  get("sigma0_IP3", p.sigma0_ip3);
  get("V_cyt", p.v_cyt);
  get("dt_write", p.dt_write);
  get("dt_ode", p.dt_ode);
  get("T_max", p.t_max);
  if (auto it = kv.find("n_IP3R"); it != kv.end()) p.n_ip3r = std::stoi(it->second);
  p.validate();
  return p;
}

namespace {

// Per-subunit transition rates along the three binding axes. Concentration
// factors are applied by the caller.
struct SubunitRates {
  // kon in 1/(uM s) units (times ligand concentration) or molecular units
  // (times ligand count) depending on how the caller scales them.
  double ip3_on(const DykParams& p, int inh) const { return inh == 0 ? p.a[0] : p.a[2]; }
  double ip3_off(const DykParams& p, int inh) const { return inh == 0 ? p.b(0) : p.b(2); }
  double inh_on(const DykParams& p, int ip3) const { return ip3 == 1 ? p.a[1] : p.a[3]; }
  double inh_off(const DykParams& p, int ip3) const { return ip3 == 1 ? p.b(1) : p.b(3); }
  double act_on(const DykParams& p) const { return p.a[4]; }
  double act_off(const DykParams& p) const { return p.b(4); }
};

}  // namespace

ReactionNetwork build_dyk_network(const DykParams& p) {
  p.validate();
  if (p.n_ip3r == 0)
    throw std::invalid_argument("n_IP3R must be positive: transport rate undefined");
  const double nav = particles_per_micromolar(p.v_cyt);

  ReactionNetwork net;
  net.add_species({"Ca_Cyt", Compartment::Cytosol});
  net.add_species({"Ca_ER", Compartment::Er});
  net.add_species({"IP3", Compartment::Cytosol});
  for (int s = 0; s < 8; ++s) {
    const std::string name = "S" + std::to_string((s >> 2) & 1) +
                             std::to_string((s >> 1) & 1) + std::to_string(s & 1);
    net.add_species({name, Compartment::Membrane});
  }

  SubunitRates rates;
  auto add_pair = [&](int from, int to, int ligand, double kon_conc, double koff,
                      const std::string& label) {
    Reaction fwd;
    fwd.label = label + "_f";
    fwd.reactants = {{from, 1}, {ligand, 1}};
    fwd.products = {{to, 1}};
    fwd.rate = kon_conc / nav;  // bimolecular: alpha = a / (cA V)
    net.add_reaction(fwd);
    Reaction bwd;
    bwd.label = label + "_b";
    bwd.reactants = {{to, 1}};
    bwd.products = {{from, 1}, {ligand, 1}};
    bwd.rate = koff;  // unimolecular: beta = b
    net.add_reaction(bwd);
  };

  for (int i = 0; i <= 1; ++i)
    for (int j = 0; j <= 1; ++j)
      for (int k = 0; k <= 1; ++k) {
        const int s = dyk_state_index(i, j, k);
        if (i == 0)
          add_pair(s, dyk_state_index(1, j, k), kDykIp3, rates.ip3_on(p, k),
                   rates.ip3_off(p, k), "ip3_j" + std::to_string(j) + "k" + std::to_string(k));
        if (k == 0)
          add_pair(s, dyk_state_index(i, j, 1), kDykCa, rates.inh_on(p, i),
                   rates.inh_off(p, i), "inh_i" + std::to_string(i) + "j" + std::to_string(j));
        if (j == 0)
          add_pair(s, dyk_state_index(i, 1, k), kDykCa, rates.act_on(p),
                   rates.act_off(p), "act_i" + std::to_string(i) + "k" + std::to_string(k));
      }

  // Transport through the open channel, 3 S110 + Ca_ER <=> 3 S110 + Ca_Cyt.
  const int s110 = dyk_state_index(1, 1, 0);
  const double n3 = static_cast<double>(p.n_ip3r) * p.n_ip3r * p.n_ip3r;
  Reaction tf;
  tf.label = "transport_f";
  tf.reactants = {{s110, 3}, {kDykCaEr, 1}};
  tf.products = {{s110, 3}, {kDykCa, 1}};
  tf.rate = 6.0 * p.v1 / n3;
  net.add_reaction(tf);
  Reaction tb;
  tb.label = "transport_b";
  tb.reactants = {{s110, 3}, {kDykCa, 1}};
  tb.products = {{s110, 3}, {kDykCaEr, 1}};
  tb.rate = 6.0 * p.c1 * p.v1 / n3;
  net.add_reaction(tb);
  return net;
}

namespace {

// State layout for the deterministic model: x[0..7] subunit fractions in
// S000..S111 order, x[8] = [Ca_Cyt], x[9] = [Ca_ER] in cytosolic units.
using DykState = std::array<double, 10>;

DykState dyk_rhs(const DykParams& p, double ip3, const DykState& x) {
  SubunitRates rates;
  DykState dx{};
  const double ca = x[8];
  for (int i = 0; i <= 1; ++i)
    for (int j = 0; j <= 1; ++j)
      for (int k = 0; k <= 1; ++k) {
        const int s = 4 * i + 2 * j + k;
        auto flow = [&](int s_to, double rate) {
          dx[s] -= rate * x[s];
          dx[s_to] += rate * x[s];
        };
        if (i == 0)
          flow(4 + 2 * j + k, rates.ip3_on(p, k) * ip3);
        else
          flow(2 * j + k, rates.ip3_off(p, k));
        if (k == 0)
          flow(4 * i + 2 * j + 1, rates.inh_on(p, i) * ca);
        else
          flow(4 * i + 2 * j, rates.inh_off(p, i));
        if (j == 0)
          flow(4 * i + 2 + k, rates.act_on(p) * ca);
        else
          flow(4 * i + k, rates.act_off(p));
      }
  const double x110 = x[4 + 2];  // i=1, j=1, k=0
  const double er_conc = x[9] / p.c1;  // concentration in ER volume units
  const double j1 = p.c1 * p.v2 * (er_conc - ca);
  const double j2 = p.v3 * ca * ca / (ca * ca + p.k3 * p.k3);
  const double j3 = p.c1 * p.v1 * x110 * x110 * x110 * (er_conc - ca);
  dx[8] = j1 - j2 + j3;
  dx[9] = -(j1 - j2 + j3);
  return dx;
}

}  // namespace

DykOdeResult integrate_deterministic_dyk(const DykParams& p, double ip3_um,
                                         double horizon_s, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  DykState x{};
  x[0] = 1.0;  // all subunits start unbound
  x[8] = p.mu0_ca;
  x[9] = p.c0 - p.mu0_ca;

  DykOdeResult out;
  const auto n_steps = static_cast<long>(std::llround(horizon_s / dt));
  const auto write_every = std::max<long>(1, std::llround(p.dt_write / dt));
  out.times.reserve(n_steps / write_every + 1);
  auto record = [&](double t) {
    out.times.push_back(t);
    out.ca.push_back(x[8]);
    out.ca_er.push_back(x[9]);
  };
  record(0.0);
  for (long step = 0; step < n_steps; ++step) {
    const DykState k1 = dyk_rhs(p, ip3_um, x);
    DykState tmp;
    for (int i = 0; i < 10; ++i) tmp[i] = x[i] + 0.5 * dt * k1[i];
    const DykState k2 = dyk_rhs(p, ip3_um, tmp);
    for (int i = 0; i < 10; ++i) tmp[i] = x[i] + 0.5 * dt * k2[i];
    const DykState k3 = dyk_rhs(p, ip3_um, tmp);
    for (int i = 0; i < 10; ++i) tmp[i] = x[i] + dt * k3[i];
    const DykState k4 = dyk_rhs(p, ip3_um, tmp);
    for (int i = 0; i < 10; ++i)
      x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    if ((step + 1) % write_every == 0) record((step + 1) * dt);
  }
  return out;
}

double estimate_subunit_count(double v_cyt_liters, double dx_um, double lambda,
                              double c1) {
  if (!(v_cyt_liters > 0.0 && dx_um > 0.0 && lambda > 0.0 && c1 > 0.0))
    throw std::invalid_argument("all inputs must be positive");
  const double pi = 3.14159265358979324;
  const double v_um3 = v_cyt_liters * 1e15;  // 1 L = 1e15 um^3
  return 160.0 * pi * lambda / (dx_um * dx_um) *
         std::pow(3.0 * c1 * v_um3 / (4.0 * pi), 2.0 / 3.0);
}

}  // namespace camr
