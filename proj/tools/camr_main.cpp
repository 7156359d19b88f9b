#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "camr/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"stochastic calcium model reduction pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  if (const char* env = std::getenv("CAMR_OUT")) out_dir = env;
  if (out_dir.empty()) out_dir = "out";
  int jobs = 1;
  std::int64_t seed_override = -1;

  app.add_option("--config", config_path, "pipeline config file")->required();
  app.add_option("--out", out_dir, "output root (default $CAMR_OUT or ./out)");
  app.add_option("--jobs", jobs, "parallel workers for ensemble simulation");
  app.add_option("--seed", seed_override, "override the configured seed");

  using Stage = std::function<void(const camr::PipelineConfig&, const camr::StageOptions&)>;
  const std::map<std::string, std::pair<Stage, const char*>> stages = {
      {"simulate", {camr::stage_simulate, "run stochastic ensembles for all conditions"}},
      {"transform", {camr::stage_transform, "fit the standardizing transform"}},
      {"estimate", {camr::stage_estimate, "per-timepoint ML parameter estimation"}},
      {"derivative", {camr::stage_derivative, "TVR differentiation into training pairs"}},
      {"train", {camr::stage_train, "train the subnet model"}},
      {"rollout", {camr::stage_rollout, "integrate the learned dynamics"}},
      {"analyze", {camr::stage_analyze, "ranges, MSE, slices, diagnostics"}},
      {"report", {camr::stage_report, "manifest linking inputs to outputs"}},
  };
  std::map<std::string, CLI::App*> subcommands;
  for (const auto& [name, stage] : stages)
    subcommands[name] = app.add_subcommand(name, stage.second);

  CLI11_PARSE(app, argc, argv);

  try {
    const auto cfg = camr::PipelineConfig::load(config_path);
    camr::StageOptions opt;
    opt.out = out_dir;
    opt.jobs = jobs;
    if (seed_override >= 0)
      opt.seed_override = static_cast<std::uint64_t>(seed_override);
    for (const auto& [name, sub] : subcommands)
      if (sub->parsed()) stages.at(name).first(cfg, opt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
