#include "camr/config.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "camr/io.hpp"

namespace camr {

namespace {

std::string strip(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, e - b + 1);
}

[[noreturn]] void missing(const std::string& key) {
  throw std::runtime_error("missing config key: " + key);
}

[[noreturn]] void invalid(const std::string& key, const std::string& value) {
  throw std::runtime_error("invalid value for config key " + key + ": " + value);
}

class KeyValues {
 public:
  explicit KeyValues(std::map<std::string, std::string> kv) : kv_(std::move(kv)) {}

  bool has(const std::string& key) const { return kv_.count(key) > 0; }

  std::string get_string(const std::string& key) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) missing(key);
    return it->second;
  }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second;
  }

  double get_double(const std::string& key, std::optional<double> fallback = {}) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) {
      if (fallback) return *fallback;
      missing(key);
    }
    try {
      std::size_t used = 0;
      const double v = std::stod(it->second, &used);
      if (used != it->second.size()) invalid(key, it->second);
      return v;
    } catch (const std::logic_error&) {
      invalid(key, it->second);
    }
  }

  long get_int(const std::string& key, std::optional<long> fallback = {}) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) {
      if (fallback) return *fallback;
      missing(key);
    }
    try {
      std::size_t used = 0;
      const long v = std::stol(it->second, &used);
      if (used != it->second.size()) invalid(key, it->second);
      return v;
    } catch (const std::logic_error&) {
      invalid(key, it->second);
    }
  }

  std::vector<double> get_double_list(const std::string& key) const {
    std::vector<double> out;
    for (const auto& item : split_list(get_string(key))) {
      try {
        out.push_back(std::stod(item));
      } catch (const std::logic_error&) {
        invalid(key, item);
      }
    }
    return out;
  }

  const std::map<std::string, std::string>& raw() const { return kv_; }

 private:
  std::map<std::string, std::string> kv_;
};

}  // namespace

std::map<std::string, std::string> read_key_values(const std::filesystem::path& path) {
  const std::string text = io::read_text(path);
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = strip(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(line_no) +
                               " is not `key = value`: " + line);
    kv[strip(line.substr(0, eq))] = strip(line.substr(eq + 1));
  }
  return kv;
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string current;
  int depth = 0;
  for (char c : value) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == ',' && depth == 0) {
      const auto item = strip(current);
      if (!item.empty()) out.push_back(item);
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  const auto item = strip(current);
  if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<ReactionMotif> PipelineConfig::motifs() const {
  const auto names = motif_species_names(visible_species, q);
  std::vector<ReactionMotif> out;
  for (const auto& text : motif_text) out.push_back(parse_motif(text, names));
  return out;
}

std::map<int, double> PipelineConfig::variance_floor() const {
  std::map<int, double> out;
  for (const auto& [name, value] : variance_floor_by_name) {
    int idx = -1;
    for (int i = 0; i < n_v(); ++i)
      if (visible_species[i] == name) idx = i;
    if (idx < 0)
      throw std::runtime_error("variance_floor names non-visible species: " + name);
    out[idx] = value;
  }
  return out;
}

std::vector<double> PipelineConfig::all_conditions() const {
  std::vector<double> all = train_conditions;
  all.insert(all.end(), val_conditions.begin(), val_conditions.end());
  all.insert(all.end(), transform_conditions.begin(), transform_conditions.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end(),
                        [](double a, double b) { return std::abs(a - b) < 1e-12; }),
            all.end());
  return all;
}

std::string PipelineConfig::condition_label(double value) const {
  std::ostringstream out;
  if (axis == ConditionAxis::Ip3)
    out << "ip3_" << value;
  else
    out << "nr_" << static_cast<long>(std::llround(value));
  return out.str();
}

DykParams PipelineConfig::params_for(double condition) const {
  DykParams p = params;
  if (axis == ConditionAxis::ReceptorCount)
    p.n_ip3r = static_cast<int>(std::llround(condition));
  return p;
}

double PipelineConfig::ip3_for(double condition) const {
  return axis == ConditionAxis::Ip3 ? condition : ip3_fixed;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  PipelineConfig cfg;
  cfg.raw_text = io::read_text(path);
  const KeyValues kv(read_key_values(path));

  cfg.params = DykParams::from_key_values(kv.raw());
  cfg.visible_species = split_list(kv.get_string("visible_species"));
  if (cfg.visible_species.empty()) missing("visible_species");
  cfg.q = static_cast<int>(kv.get_int("q", 1));
  if (cfg.q < 1 || cfg.q >= cfg.n_v()) invalid("q", std::to_string(cfg.q));
  cfg.window_start = kv.get_double("window_start", 10.0);
  cfg.window_end = kv.get_double("window_end", cfg.params.t_max);

  const std::string axis = kv.get_string("condition_axis", "ip3");
  if (axis == "ip3") cfg.axis = ConditionAxis::Ip3;
  else if (axis == "n_ip3r") cfg.axis = ConditionAxis::ReceptorCount;
  else invalid("condition_axis", axis);

  cfg.train_conditions = kv.get_double_list("train_conditions");
  cfg.val_conditions = kv.get_double_list("val_conditions");
  cfg.transform_conditions = kv.get_double_list("transform_conditions");
  cfg.ip3_fixed = kv.get_double("ip3_fixed", 0.5);
  cfg.ensemble_size = static_cast<int>(kv.get_int("M"));
  if (cfg.ensemble_size < 1) invalid("M", std::to_string(cfg.ensemble_size));
  cfg.base_seed = static_cast<std::uint64_t>(kv.get_int("base_seed", 1000));

  cfg.motif_text = split_list(kv.get_string("motifs", ""));
  for (const auto& item : split_list(kv.get_string("variance_floor", ""))) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) invalid("variance_floor", item);
    cfg.variance_floor_by_name[strip(item.substr(0, colon))] =
        std::stod(item.substr(colon + 1));
  }

  cfg.tvr.alpha = kv.get_double("tvr_alpha", 100.0);
  cfg.tvr.iterations = static_cast<int>(kv.get_int("tvr_iterations", 10));
  cfg.tvr.small_threshold = kv.get_double("tvr_threshold", 1e-5);
  cfg.tvr.dt = cfg.params.dt_write;

  for (const auto& w : split_list(kv.get_string("subnet_hidden", "25")))
    cfg.subnet.hidden.push_back(std::stoi(w));
  cfg.subnet.dropout_rate = kv.get_double("subnet_dropout", 0.1);
  cfg.subnet.weight_cutoff = kv.get_double("subnet_cutoff", 1.0);
  cfg.subnet.mode = input_mode_from_name(
      kv.get_string("subnet_mode", "reaction_candidates"));
  cfg.subnet.out_dim = cfg.d_hat();
  cfg.subnet.validate();

  cfg.hyper.lr = kv.get_double("lr", 1e-3);
  cfg.hyper.batch = static_cast<int>(kv.get_int("batch", 64));
  cfg.hyper.rounds = static_cast<int>(kv.get_int("rounds", 200));
  cfg.hyper.seed = static_cast<std::uint64_t>(kv.get_int("train_seed", 1));

  cfg.fourier_count = static_cast<int>(kv.get_int("fourier_count", 6));
  cfg.fourier_period = kv.get_double("fourier_period", 40.0);
  cfg.lf_epsilon = kv.get_double("lf_epsilon", 1e-8);
  cfg.rollout_dt = kv.get_double("rollout_dt", cfg.params.dt_write);

  if (cfg.subnet.mode == InputMode::ReactionCandidates && cfg.motif_text.empty())
    missing("motifs");
  return cfg;
}

}  // namespace camr
