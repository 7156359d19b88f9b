#ifndef CAMR_REACTION_HPP
#define CAMR_REACTION_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace camr {

enum class Compartment { Cytosol, Er, Membrane };

std::string compartment_name(Compartment c);
Compartment compartment_from_name(const std::string& name);

struct Species {
  std::string name;
  Compartment compartment = Compartment::Cytosol;
};

// Mass-action reaction with a molecular (count-based) rate. Orders are the
// m_i of the propensity gamma * prod_i C(n_i, m_i).
struct Reaction {
  std::string label;
  std::map<int, int> reactants;  // species index -> order
  std::map<int, int> products;   // species index -> multiplicity
  double rate = 0.0;             // molecular rate, units depend on total order
};

class ReactionNetwork {
 public:
  int add_species(Species s);
  // Throws std::invalid_argument on negative rate or empty reaction.
  void add_reaction(Reaction r);

  int species_index(const std::string& name) const;  // throws if unknown
  int find_species(const std::string& name) const;   // -1 if unknown

  const std::vector<Species>& species() const { return species_; }
  const std::vector<Reaction>& reactions() const { return reactions_; }
  int n_species() const { return static_cast<int>(species_.size()); }
  int n_reactions() const { return static_cast<int>(reactions_.size()); }

  // Net count change of each species when reaction r fires.
  std::vector<std::int64_t> stoichiometry(int r) const;

  nlohmann::json to_json() const;
  static ReactionNetwork from_json(const nlohmann::json& j);

 private:
  std::vector<Species> species_;
  std::vector<Reaction> reactions_;
};

// Particles per 1 uM of concentration in a volume of `volume_liters`.
double particles_per_micromolar(double volume_liters);

// Converts a concentration-based mass-action rate (concentrations in uM)
// into the molecular rate of the count-based propensity:
//   gamma = k * cA*V * prod_i m_i! / (cA*V)^{m_i}
// with cA*V expressed in particles per uM.
double concentration_to_molecular_rate(double k, const std::vector<int>& orders,
                                       double volume_liters);

}  // namespace camr

#endif
