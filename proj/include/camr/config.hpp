#ifndef CAMR_CONFIG_HPP
#define CAMR_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "camr/candidates.hpp"
#include "camr/dyk.hpp"
#include "camr/subnet.hpp"
#include "camr/tvr.hpp"

namespace camr {

// `key = value` file with '#' comments. Values keep internal commas; list
// values are split on top-level commas (parentheses respected, so motif
// declarations like PredatorPrey(Ca_Cyt,X) survive).
std::map<std::string, std::string> read_key_values(const std::filesystem::path& path);
std::vector<std::string> split_list(const std::string& value);

enum class ConditionAxis { Ip3, ReceptorCount };

struct PipelineConfig {
  DykParams params;
  std::vector<std::string> visible_species;
  int q = 1;
  double window_start = 10.0;
  double window_end = 50.0;
  ConditionAxis axis = ConditionAxis::Ip3;
  std::vector<double> train_conditions;
  std::vector<double> val_conditions;
  std::vector<double> transform_conditions;
  double ip3_fixed = 0.5;  // used on the receptor-count axis
  int ensemble_size = 30;
  std::uint64_t base_seed = 1000;
  std::vector<std::string> motif_text;
  std::map<std::string, double> variance_floor_by_name;
  TvrConfig tvr;
  SubnetSpec subnet;
  TrainHyper hyper;
  int fourier_count = 6;
  double fourier_period = 40.0;
  double lf_epsilon = 1e-8;
  double rollout_dt = 0.1;

  std::string raw_text;  // original file contents, hashed into manifests

  int n_v() const { return static_cast<int>(visible_species.size()); }
  int d_hat() const { return n_v() + n_v() * q + 1; }

  std::vector<ReactionMotif> motifs() const;
  std::map<int, double> variance_floor() const;  // visible index -> value
  std::vector<double> all_conditions() const;    // train + val + transform, dedup
  std::string condition_label(double value) const;
  DykParams params_for(double condition) const;
  double ip3_for(double condition) const;

  static PipelineConfig load(const std::filesystem::path& path);
};

}  // namespace camr

#endif
