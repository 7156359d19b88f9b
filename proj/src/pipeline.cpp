#include "camr/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include "camr/io.hpp"
#include "camr/rollout.hpp"

namespace camr {

namespace {

std::string config_hash(const PipelineConfig& cfg) {
  return io::hex64(io::fnv1a64(cfg.raw_text));
}

nlohmann::json base_manifest(const PipelineConfig& cfg, const StageOptions& opt,
                             const std::string& stage) {
  nlohmann::json j;
  j["stage"] = stage;
  j["tool_version"] = kToolVersion;
  j["config_hash"] = config_hash(cfg);
  j["rng_algorithm"] = Rng::kAlgorithm;
  if (opt.seed_override) j["seed_override"] = *opt.seed_override;
  return j;
}

void write_manifest(const StageOptions& opt, const std::string& stage,
                    nlohmann::json manifest) {
  io::write_text(opt.out / (stage + "_manifest.json"), manifest.dump(2) + "\n");
}

nlohmann::json hash_entry(const std::filesystem::path& path,
                          const std::filesystem::path& root) {
  // store paths relative to the output root so reruns into different
  // directories stay byte-identical
  return {{"file", std::filesystem::relative(path, root).string()},
          {"fnv1a64", io::hex64(io::fnv1a64_file(path))}};
}

std::vector<double> estimation_conditions(const PipelineConfig& cfg) {
  std::vector<double> out = cfg.train_conditions;
  for (double v : cfg.val_conditions) {
    bool dup = false;
    for (double u : out) dup = dup || std::abs(u - v) < 1e-12;
    if (!dup) out.push_back(v);
  }
  return out;
}

bool is_training_condition(const PipelineConfig& cfg, double c) {
  for (double v : cfg.train_conditions)
    if (std::abs(v - c) < 1e-12) return true;
  return false;
}

std::uint64_t condition_seed(const PipelineConfig& cfg, const StageOptions& opt,
                             std::size_t index) {
  return opt.seed_override.value_or(cfg.base_seed) + 10000ull * index;
}

}  // namespace

std::filesystem::path ensemble_dir(const StageOptions& opt, const std::string& label) {
  return opt.out / "sim" / label;
}
std::filesystem::path transform_path(const StageOptions& opt) {
  return opt.out / "transform.json";
}
std::filesystem::path theta_path(const StageOptions& opt, const std::string& label) {
  return opt.out / "estimate" / (label + "_theta_ml.csv");
}
std::filesystem::path pairs_path(const StageOptions& opt, const std::string& label) {
  return opt.out / "derivative" / (label + "_pairs.csv");
}
std::filesystem::path checkpoint_path(const StageOptions& opt) {
  return opt.out / "train" / "model.json";
}
std::filesystem::path rollout_path(const StageOptions& opt, const std::string& label) {
  return opt.out / "rollout" / (label + "_theta_int.csv");
}

void stage_simulate(const PipelineConfig& cfg, const StageOptions& opt) {
  const auto conditions = cfg.all_conditions();
  nlohmann::json manifest = base_manifest(cfg, opt, "simulate");
  manifest["ensembles"] = nlohmann::json::array();
  const std::vector<std::string> species(kDykSpeciesNames, kDykSpeciesNames + 11);
  for (std::size_t i = 0; i < conditions.size(); ++i) {
    const double c = conditions[i];
    const DykParams p = cfg.params_for(c);
    const double ip3 = cfg.ip3_for(c);
    const std::uint64_t seed = condition_seed(cfg, opt, i);
    const auto trajectories =
        simulate_trajectories(p, ip3, cfg.ensemble_size, seed, opt.jobs);
    auto ds = EnsembleDataset::from_trajectories(species, trajectories,
                                                 cfg.condition_label(c));
    const auto dir = ensemble_dir(opt, ds.label);
    save_ensemble(ds, dir, config_hash(cfg), ip3, seed);
    nlohmann::json entry;
    entry["label"] = ds.label;
    entry["condition"] = c;
    entry["base_seed"] = seed;
    entry["dir"] = std::filesystem::relative(dir, opt.out).string();
    entry["manifest"] = hash_entry(dir / "manifest.json", opt.out);
    manifest["ensembles"].push_back(entry);
  }
  write_manifest(opt, "simulate", manifest);
}

void stage_transform(const PipelineConfig& cfg, const StageOptions& opt) {
  std::vector<EnsembleDataset> loaded;
  for (double c : cfg.transform_conditions) {
    auto ds = load_ensemble(ensemble_dir(opt, cfg.condition_label(c)));
    ds.set_visible(cfg.visible_species);  // synthesizes IP3R when needed
    loaded.push_back(std::move(ds));
  }
  std::vector<const EnsembleDataset*> ptrs;
  for (const auto& ds : loaded) ptrs.push_back(&ds);
  const auto tr =
      fit_transform(ptrs, TimeWindow{cfg.window_start, cfg.window_end});
  tr.save(transform_path(opt));

  nlohmann::json manifest = base_manifest(cfg, opt, "transform");
  manifest["inputs"] = nlohmann::json::array();
  for (double c : cfg.transform_conditions)
    manifest["inputs"].push_back(
        hash_entry(ensemble_dir(opt, cfg.condition_label(c)) / "manifest.json", opt.out));
  manifest["output"] = hash_entry(transform_path(opt), opt.out);
  write_manifest(opt, "transform", manifest);
}

EnsembleDataset load_standardized_ensemble(const PipelineConfig& cfg,
                                           const StageOptions& opt,
                                           const std::string& label) {
  auto ds = load_ensemble(ensemble_dir(opt, label));
  ds.set_visible(cfg.visible_species);
  const auto tr = StandardizingTransform::load(transform_path(opt));
  auto out = apply_transform(ds, tr);
  out.visible = ds.visible;
  return out;
}

void stage_estimate(const PipelineConfig& cfg, const StageOptions& opt) {
  nlohmann::json manifest = base_manifest(cfg, opt, "estimate");
  manifest["outputs"] = nlohmann::json::array();
  for (double c : estimation_conditions(cfg)) {
    const std::string label = cfg.condition_label(c);
    const auto ds = load_standardized_ensemble(cfg, opt, label);
    const auto series =
        estimate_series(ds, cfg.q, cfg.variance_floor(),
                        TimeWindow{cfg.window_start, cfg.window_end});
    series.save(theta_path(opt, label));
    manifest["outputs"].push_back(hash_entry(theta_path(opt, label), opt.out));
  }
  write_manifest(opt, "estimate", manifest);
}

void stage_derivative(const PipelineConfig& cfg, const StageOptions& opt) {
  nlohmann::json manifest = base_manifest(cfg, opt, "derivative");
  manifest["outputs"] = nlohmann::json::array();
  TvrConfig tvr = cfg.tvr;
  tvr.dt = cfg.params.dt_write;
  for (double c : estimation_conditions(cfg)) {
    const std::string label = cfg.condition_label(c);
    const auto series = ThetaSeries::load(theta_path(opt, label), cfg.n_v(), cfg.q);
    const auto pairs = build_training_pairs(series.times, series.packed(), tvr);
    const int d_hat = cfg.d_hat();
    std::ostringstream csv;
    csv << "t";
    for (int k = 0; k < d_hat; ++k) csv << ",in_" << k;
    for (int k = 0; k < d_hat; ++k) csv << ",tg_" << k;
    csv << "\n";
    for (std::size_t r = 0; r < pairs.times.size(); ++r) {
      csv << io::format_double(pairs.times[r]);
      for (int k = 0; k < d_hat; ++k) csv << "," << io::format_double(pairs.inputs(r, k));
      for (int k = 0; k < d_hat; ++k)
        csv << "," << io::format_double(pairs.targets(r, k));
      csv << "\n";
    }
    io::write_text(pairs_path(opt, label), csv.str());
    manifest["outputs"].push_back(hash_entry(pairs_path(opt, label), opt.out));
  }
  write_manifest(opt, "derivative", manifest);
}

namespace {

std::vector<TrainSample> load_pairs_as_samples(const PipelineConfig& cfg,
                                               const StageOptions& opt,
                                               const std::string& label) {
  const auto csv = io::read_csv(pairs_path(opt, label));
  const int d_hat = cfg.d_hat();
  std::vector<TrainSample> samples;
  // First and last rows carry one-sided derivative estimates; skip them.
  for (std::size_t r = 1; r + 1 < csv.rows.size(); ++r) {
    TrainSample s;
    s.t = csv.as_double(r, 0);
    s.theta_packed.resize(d_hat);
    s.target.resize(d_hat);
    for (int k = 0; k < d_hat; ++k) {
      s.theta_packed[k] = csv.as_double(r, 1 + k);
      s.target[k] = csv.as_double(r, 1 + d_hat + k);
    }
    samples.push_back(std::move(s));
  }
  return samples;
}

ModelContext model_context(const PipelineConfig& cfg) {
  ModelContext ctx;
  ctx.n_v = cfg.n_v();
  ctx.q = cfg.q;
  ctx.visible_names = cfg.visible_species;
  ctx.motifs = cfg.motifs();
  ctx.freqs = default_frequencies(cfg.fourier_count, cfg.fourier_period);
  ctx.lf_epsilon = cfg.lf_epsilon;
  return ctx;
}

}  // namespace

void stage_train(const PipelineConfig& cfg, const StageOptions& opt) {
  std::vector<TrainSample> samples;
  for (double c : cfg.train_conditions) {
    auto part = load_pairs_as_samples(cfg, opt, cfg.condition_label(c));
    samples.insert(samples.end(), part.begin(), part.end());
  }
  TrainHyper hyper = cfg.hyper;
  if (opt.seed_override) hyper.seed = *opt.seed_override;
  const auto model = train_subnet(samples, cfg.subnet, hyper, model_context(cfg));
  save_checkpoint(model, checkpoint_path(opt));

  nlohmann::json manifest = base_manifest(cfg, opt, "train");
  manifest["n_samples"] = samples.size();
  manifest["seed"] = hyper.seed;
  manifest["mode"] = input_mode_name(cfg.subnet.mode);
  manifest["inputs"] = nlohmann::json::array();
  for (double c : cfg.train_conditions)
    manifest["inputs"].push_back(hash_entry(pairs_path(opt, cfg.condition_label(c)), opt.out));
  manifest["checkpoint"] = hash_entry(checkpoint_path(opt), opt.out);
  write_manifest(opt, "train", manifest);
}

void stage_rollout(const PipelineConfig& cfg, const StageOptions& opt) {
  const auto model = load_checkpoint(checkpoint_path(opt));
  nlohmann::json manifest = base_manifest(cfg, opt, "rollout");
  manifest["outputs"] = nlohmann::json::array();
  for (double c : estimation_conditions(cfg)) {
    const std::string label = cfg.condition_label(c);
    const auto ml = ThetaSeries::load(theta_path(opt, label), cfg.n_v(), cfg.q);
    const auto rolled =
        euler_rollout(model, ml.params.front(), ml.times.front(),
                      ml.times.back() - ml.times.front(), cfg.rollout_dt);
    rolled.save(rollout_path(opt, label));
    manifest["outputs"].push_back(hash_entry(rollout_path(opt, label), opt.out));
  }
  write_manifest(opt, "rollout", manifest);
}

void stage_analyze(const PipelineConfig& cfg, const StageOptions& opt) {
  const auto analyze_dir = opt.out / "analyze";
  std::filesystem::create_directories(analyze_dir);
  nlohmann::json manifest = base_manifest(cfg, opt, "analyze");
  manifest["outputs"] = nlohmann::json::array();

  // Range of oscillations: stochastic ensembles plus, on the IP3 axis, the
  // deterministic reference.
  FigureData ranges;
  const double window_len = 40.0;
  const TimeWindow range_window{std::max(0.0, cfg.params.t_max - window_len),
                                cfg.params.t_max};
  for (double c : cfg.all_conditions()) {
    const std::string label = cfg.condition_label(c);
    if (!std::filesystem::exists(ensemble_dir(opt, label) / "manifest.json")) continue;
    const auto ds = load_ensemble(ensemble_dir(opt, label));
    RangeDiagramRow row;
    row.source = "stochastic";
    row.condition = c;
    row.range = range_of_oscillations(
        ds, "Ca_Cyt", range_window,
        particles_per_micromolar(cfg.params_for(c).v_cyt));
    ranges.range_rows.push_back(row);
    if (cfg.axis == ConditionAxis::Ip3) {
      const auto ode =
          integrate_deterministic_dyk(cfg.params_for(c), c, cfg.params.t_max, 1e-4);
      RangeDiagramRow det;
      det.source = "deterministic";
      det.condition = c;
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (std::size_t i = 0; i < ode.times.size(); ++i)
        if (ode.times[i] >= range_window.first) {
          lo = std::min(lo, ode.ca[i]);
          hi = std::max(hi, ode.ca[i]);
        }
      det.range.c_minus_min = det.range.ci_minus_lo = det.range.ci_minus_hi = lo;
      det.range.c_plus_max = det.range.ci_plus_lo = det.range.ci_plus_hi = hi;
      ranges.range_rows.push_back(det);
    }
  }
  manifest["outputs"].push_back(
      hash_entry(emit_figure_data(FigureKind::RangeDiagram, ranges, analyze_dir), opt.out));

  // Model-dependent outputs only when a trained model and rollouts exist.
  if (std::filesystem::exists(checkpoint_path(opt))) {
    const auto model = load_checkpoint(checkpoint_path(opt));
    const auto tr = StandardizingTransform::load(transform_path(opt));
    std::vector<int> visible_cols;
    for (const auto& name : cfg.visible_species) {
      for (std::size_t i = 0; i < tr.species.size(); ++i)
        if (tr.species[i] == name) visible_cols.push_back(static_cast<int>(i));
    }

    FigureData mse_data;
    std::ostringstream diag;
    diag << "condition,min_cov_eigenvalue,fraction_nonnegative_mean\n";
    for (double c : estimation_conditions(cfg)) {
      const std::string label = cfg.condition_label(c);
      if (!std::filesystem::exists(rollout_path(opt, label))) continue;
      const auto ml = ThetaSeries::load(theta_path(opt, label), cfg.n_v(), cfg.q);
      const auto rolled = ThetaSeries::load(rollout_path(opt, label), cfg.n_v(), cfg.q);

      MseCurveRow row;
      row.model = input_mode_name(model.spec.mode);
      row.condition = c;
      row.training = is_training_condition(cfg, c);
      row.seed = 0;
      row.mse = mse(rolled, ml);
      mse_data.mse_rows.push_back(row);

      FigureData slice;
      slice.theta_ml = ml;
      slice.theta_int = rolled;
      manifest["outputs"].push_back(hash_entry(
          emit_figure_data(FigureKind::ParameterSlices, slice, analyze_dir / label),
          opt.out));

      FigureData term;
      term.term_times = rolled.times;
      term.terms = moment_term_decomposition(model, rolled, 0);
      manifest["outputs"].push_back(hash_entry(
          emit_figure_data(FigureKind::TermDecomposition, term, analyze_dir / label),
          opt.out));

      double min_eig = std::numeric_limits<double>::infinity();
      int nonneg = 0;
      for (const auto& theta : rolled.params) {
        const auto obs = reconstruct_observables(theta, tr, visible_cols);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(obs.cov);
        min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
        if ((obs.mean.array() >= 0.0).all()) ++nonneg;
      }
      diag << io::format_double(c) << "," << io::format_double(min_eig) << ","
           << io::format_double(static_cast<double>(nonneg) / rolled.params.size())
           << "\n";
    }
    manifest["outputs"].push_back(
        hash_entry(emit_figure_data(FigureKind::MseCurves, mse_data, analyze_dir),
                   opt.out));
    io::write_text(analyze_dir / "diagnostics.csv", diag.str());
    manifest["outputs"].push_back(
        hash_entry(analyze_dir / "diagnostics.csv", opt.out));
  }
  write_manifest(opt, "analyze", manifest);
}

void stage_report(const PipelineConfig& cfg, const StageOptions& opt) {
  nlohmann::json report = base_manifest(cfg, opt, "report");
  report["stages"] = nlohmann::json::array();
  for (const char* stage : {"simulate", "transform", "estimate", "derivative",
                            "train", "rollout", "analyze"}) {
    const auto path = opt.out / (std::string(stage) + "_manifest.json");
    if (std::filesystem::exists(path))
      report["stages"].push_back(hash_entry(path, opt.out));
  }
  nlohmann::json artifacts = nlohmann::json::array();
  for (const auto& entry : std::filesystem::recursive_directory_iterator(opt.out)) {
    if (!entry.is_regular_file()) continue;
    const auto name = entry.path().filename().string();
    if (name == "report.json") continue;
    artifacts.push_back(hash_entry(entry.path(), opt.out));
  }
  std::sort(artifacts.begin(), artifacts.end(),
            [](const nlohmann::json& a, const nlohmann::json& b) {
              return a.at("file").get<std::string>() < b.at("file").get<std::string>();
            });
  report["artifacts"] = artifacts;
  io::write_text(opt.out / "report.json", report.dump(2) + "\n");
}

}  // namespace camr
