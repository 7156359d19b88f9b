#ifndef CAMR_PIPELINE_HPP
#define CAMR_PIPELINE_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "camr/config.hpp"

namespace camr {

constexpr const char* kToolVersion = "camr 0.1.0";

struct StageOptions {
  std::filesystem::path out;
  int jobs = 1;
  std::optional<std::uint64_t> seed_override;
};

// Each stage reads its declared inputs from `out`, writes its outputs plus
// a <stage>_manifest.json recording the config hash, input hashes, seeds
// and tool version.
void stage_simulate(const PipelineConfig& cfg, const StageOptions& opt);
void stage_transform(const PipelineConfig& cfg, const StageOptions& opt);
void stage_estimate(const PipelineConfig& cfg, const StageOptions& opt);
void stage_derivative(const PipelineConfig& cfg, const StageOptions& opt);
void stage_train(const PipelineConfig& cfg, const StageOptions& opt);
void stage_rollout(const PipelineConfig& cfg, const StageOptions& opt);
void stage_analyze(const PipelineConfig& cfg, const StageOptions& opt);
void stage_report(const PipelineConfig& cfg, const StageOptions& opt);

// Paths shared between stages (and with tests).
std::filesystem::path ensemble_dir(const StageOptions& opt, const std::string& label);
std::filesystem::path transform_path(const StageOptions& opt);
std::filesystem::path theta_path(const StageOptions& opt, const std::string& label);
std::filesystem::path pairs_path(const StageOptions& opt, const std::string& label);
std::filesystem::path checkpoint_path(const StageOptions& opt);
std::filesystem::path rollout_path(const StageOptions& opt, const std::string& label);

// Loads an ensemble and prepares it for estimation: visible species marked,
// standardizing transform applied.
EnsembleDataset load_standardized_ensemble(const PipelineConfig& cfg,
                                           const StageOptions& opt,
                                           const std::string& label);

}  // namespace camr

#endif
