#include "camr/reaction.hpp"

#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace camr {

namespace {
constexpr double kAvogadro = 6.02214076e23;
}

std::string compartment_name(Compartment c) {
  switch (c) {
    case Compartment::Cytosol: return "cytosol";
    case Compartment::Er: return "er";
    case Compartment::Membrane: return "membrane";
  }
  throw std::logic_error("bad compartment");
}

Compartment compartment_from_name(const std::string& name) {
  if (name == "cytosol") return Compartment::Cytosol;
  if (name == "er") return Compartment::Er;
  if (name == "membrane") return Compartment::Membrane;
  throw std::invalid_argument("unknown compartment: " + name);
}

int ReactionNetwork::add_species(Species s) {
  if (s.name.empty()) throw std::invalid_argument("species name empty");
  if (find_species(s.name) >= 0)
    throw std::invalid_argument("duplicate species: " + s.name);
  species_.push_back(std::move(s));
  return static_cast<int>(species_.size()) - 1;
}

void ReactionNetwork::add_reaction(Reaction r) {
  if (r.rate < 0.0) throw std::invalid_argument("negative rate: " + r.label);
  if (r.reactants.empty() && r.products.empty())
    throw std::invalid_argument("empty reaction: " + r.label);
  auto check = [&](const std::map<int, int>& side) {
    for (const auto& [idx, order] : side) {
      if (idx < 0 || idx >= n_species())
        throw std::invalid_argument("species index out of range: " + r.label);
      if (order <= 0)
        throw std::invalid_argument("non-positive order: " + r.label);
    }
  };
  check(r.reactants);
  check(r.products);
  reactions_.push_back(std::move(r));
}

int ReactionNetwork::species_index(const std::string& name) const {
  const int i = find_species(name);
  if (i < 0) throw std::invalid_argument("unknown species: " + name);
  return i;
}

int ReactionNetwork::find_species(const std::string& name) const {
  for (int i = 0; i < n_species(); ++i)
    if (species_[i].name == name) return i;
  return -1;
}

std::vector<std::int64_t> ReactionNetwork::stoichiometry(int r) const {
  std::vector<std::int64_t> nu(species_.size(), 0);
  for (const auto& [idx, order] : reactions_.at(r).reactants) nu[idx] -= order;
  for (const auto& [idx, mult] : reactions_.at(r).products) nu[idx] += mult;
  return nu;
}

nlohmann::json ReactionNetwork::to_json() const {
  nlohmann::json j;
  j["species"] = nlohmann::json::array();
  for (const auto& s : species_)
    j["species"].push_back({{"name", s.name},
                            {"compartment", compartment_name(s.compartment)}});
  j["reactions"] = nlohmann::json::array();
  for (const auto& r : reactions_) {
    nlohmann::json jr;
    jr["label"] = r.label;
    jr["rate"] = r.rate;
    auto side = [&](const std::map<int, int>& m) {
      nlohmann::json js = nlohmann::json::object();
      for (const auto& [idx, order] : m) js[species_[idx].name] = order;
      return js;
    };
    jr["reactants"] = side(r.reactants);
    jr["products"] = side(r.products);
    j["reactions"].push_back(jr);
  }
  return j;
}

ReactionNetwork ReactionNetwork::from_json(const nlohmann::json& j) {
  ReactionNetwork net;
  for (const auto& js : j.at("species"))
    net.add_species({js.at("name").get<std::string>(),
                     compartment_from_name(js.at("compartment"))});
  for (const auto& jr : j.at("reactions")) {
    Reaction r;
    r.label = jr.at("label").get<std::string>();
    r.rate = jr.at("rate").get<double>();
    for (auto it = jr.at("reactants").begin(); it != jr.at("reactants").end(); ++it)
      r.reactants[net.species_index(it.key())] = it.value().get<int>();
    for (auto it = jr.at("products").begin(); it != jr.at("products").end(); ++it)
      r.products[net.species_index(it.key())] = it.value().get<int>();
    net.add_reaction(std::move(r));
  }
  return net;
}

double particles_per_micromolar(double volume_liters) {
  if (volume_liters <= 0.0)
    throw std::invalid_argument("volume must be positive");
  return kAvogadro * volume_liters * 1e-6;
}

double concentration_to_molecular_rate(double k, const std::vector<int>& orders,
                                       double volume_liters) {
  if (k < 0.0) throw std::invalid_argument("rate must be non-negative");
  if (orders.empty()) throw std::invalid_argument("orders must be non-empty");
  const double nav = particles_per_micromolar(volume_liters);
  double gamma = k * nav;
  for (int m : orders) {
    if (m < 0) throw std::invalid_argument("negative reactant order");
    double factorial = 1.0;
    for (int i = 2; i <= m; ++i) factorial *= i;
    gamma *= factorial / std::pow(nav, m);
  }
  return gamma;
}

}  // namespace camr
