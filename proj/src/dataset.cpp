#include "camr/dataset.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "camr/io.hpp"

namespace camr {

namespace {
constexpr double kDegenerateVariance = 1e-12;
constexpr double kGridTolerance = 1e-6;
}  // namespace

Eigen::VectorXd StandardizingTransform::divisors() const {
  Eigen::VectorXd div(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i)
    div[i] = v[i] < kDegenerateVariance ? 1.0 : std::sqrt(v[i]);
  return div;
}

void StandardizingTransform::save(const std::filesystem::path& path) const {
  nlohmann::json j;
  j["species"] = species;
  j["m"] = std::vector<double>(m.data(), m.data() + m.size());
  j["v"] = std::vector<double>(v.data(), v.data() + v.size());
  io::write_text(path, j.dump(2) + "\n");
}

StandardizingTransform StandardizingTransform::load(const std::filesystem::path& path) {
  const auto j = nlohmann::json::parse(io::read_text(path));
  StandardizingTransform tr;
  tr.species = j.at("species").get<std::vector<std::string>>();
  const auto mv = j.at("m").get<std::vector<double>>();
  const auto vv = j.at("v").get<std::vector<double>>();
  tr.m = Eigen::Map<const Eigen::VectorXd>(mv.data(), mv.size());
  tr.v = Eigen::Map<const Eigen::VectorXd>(vv.data(), vv.size());
  return tr;
}

int EnsembleDataset::time_index(double t) const {
  if (times.empty()) throw std::invalid_argument("empty dataset");
  const double dt = times.size() > 1 ? times[1] - times[0] : 1.0;
  const auto idx = static_cast<long>(std::llround((t - times.front()) / dt));
  if (idx < 0 || idx >= static_cast<long>(times.size()) ||
      std::abs(times[idx] - t) > kGridTolerance)
    throw std::invalid_argument("time " + std::to_string(t) + " is off the grid");
  return static_cast<int>(idx);
}

int EnsembleDataset::species_column(const std::string& name) const {
  for (int i = 0; i < n_species(); ++i)
    if (species[i] == name) return i;
  throw std::invalid_argument("unknown species: " + name);
}

EnsembleDataset EnsembleDataset::from_trajectories(
    const std::vector<std::string>& species, const std::vector<Trajectory>& trajectories,
    std::string label) {
  if (trajectories.empty()) throw std::invalid_argument("no trajectories");
  EnsembleDataset ds;
  ds.species = species;
  ds.times = trajectories.front().times;
  ds.label = std::move(label);
  const int t_count = static_cast<int>(ds.times.size());
  const int n = static_cast<int>(species.size());
  for (const auto& traj : trajectories) {
    if (static_cast<int>(traj.times.size()) != t_count)
      throw std::invalid_argument("trajectories disagree on the time grid");
    Eigen::MatrixXd mat(t_count, n);
    for (int t = 0; t < t_count; ++t) {
      if (static_cast<int>(traj.counts[t].size()) != n)
        throw std::invalid_argument("species count mismatch");
      for (int s = 0; s < n; ++s)
        mat(t, s) = static_cast<double>(traj.counts[t][s]);
    }
    ds.data.push_back(std::move(mat));
    ds.seeds.push_back(traj.seed);
  }
  return ds;
}

void EnsembleDataset::set_visible(const std::vector<std::string>& names) {
  visible.clear();
  for (const auto& name : names) {
    int col = -1;
    for (int i = 0; i < n_species(); ++i)
      if (species[i] == name) col = i;
    if (col < 0 && name == "IP3R") {
      // Receptor total: sum of the subunit-state columns.
      std::vector<int> state_cols;
      for (int i = 0; i < n_species(); ++i)
        if (species[i].size() == 4 && species[i][0] == 'S') state_cols.push_back(i);
      if (state_cols.empty())
        throw std::invalid_argument("no receptor-state columns to derive IP3R from");
      col = n_species();
      species.push_back("IP3R");
      for (auto& mat : data) {
        mat.conservativeResize(Eigen::NoChange, mat.cols() + 1);
        mat.col(col).setZero();
        for (int sc : state_cols) mat.col(col) += mat.col(sc);
      }
    }
    if (col < 0) throw std::invalid_argument("unknown visible species: " + name);
    visible.push_back(col);
  }
}

StandardizingTransform fit_transform(const std::vector<const EnsembleDataset*>& datasets,
                                     const std::optional<TimeWindow>& window) {
  if (datasets.empty()) throw std::invalid_argument("no datasets");
  const auto& first = *datasets.front();
  if (first.data.empty() || first.times.empty())
    throw std::invalid_argument("empty dataset");
  const int n = first.n_species();

  auto in_window = [&](double t) {
    return !window || (t >= window->first - kGridTolerance &&
                       t <= window->second + kGridTolerance);
  };

  Eigen::VectorXd sum = Eigen::VectorXd::Zero(n);
  double count = 0.0;
  for (const auto* ds : datasets) {
    if (ds->n_species() != n || ds->species != first.species)
      throw std::invalid_argument("datasets disagree on species");
    for (const auto& mat : ds->data)
      for (int t = 0; t < ds->n_times(); ++t)
        if (in_window(ds->times[t])) {
          sum += mat.row(t).transpose();
          count += 1.0;
        }
  }
  if (count == 0.0) throw std::invalid_argument("window selects no samples");

  StandardizingTransform tr;
  tr.species = first.species;
  tr.m = sum / count;
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(n);
  for (const auto* ds : datasets)
    for (const auto& mat : ds->data)
      for (int t = 0; t < ds->n_times(); ++t)
        if (in_window(ds->times[t]))
          sq += (mat.row(t).transpose() - tr.m).array().square().matrix();
  tr.v = sq / count;
  return tr;
}

EnsembleDataset apply_transform(const EnsembleDataset& ds,
                                const StandardizingTransform& tr) {
  if (tr.species != ds.species)
    throw std::invalid_argument("transform species mismatch");
  EnsembleDataset out = ds;
  const Eigen::VectorXd div = tr.divisors();
  for (auto& mat : out.data)
    mat = (mat.rowwise() - tr.m.transpose()).array().rowwise() /
          div.transpose().array();
  out.transform = tr;
  return out;
}

Eigen::MatrixXd data_matrix_at(const EnsembleDataset& ds, double t) {
  if (ds.visible.empty())
    throw std::invalid_argument("dataset has no visible species configured");
  const int row = ds.time_index(t);
  Eigen::MatrixXd x(ds.n_trajectories(), ds.visible.size());
  for (int i = 0; i < ds.n_trajectories(); ++i)
    for (std::size_t j = 0; j < ds.visible.size(); ++j)
      x(i, j) = ds.data[i](row, ds.visible[j]);
  return x;
}

EnsembleDataset simulate_ensemble(const DykParams& p, double ip3_mean_um, int m,
                                  std::uint64_t base_seed, int jobs) {
  const std::vector<std::string> species(kDykSpeciesNames, kDykSpeciesNames + 11);
  std::ostringstream label;
  label << "ip3_" << ip3_mean_um;
  return EnsembleDataset::from_trajectories(
      species, simulate_trajectories(p, ip3_mean_um, m, base_seed, jobs),
      label.str());
}

void save_ensemble(const EnsembleDataset& ds, const std::filesystem::path& dir,
                   const std::string& params_hash, double ip3_mean,
                   std::uint64_t base_seed) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  manifest["label"] = ds.label;
  manifest["species"] = ds.species;
  manifest["params_hash"] = params_hash;
  manifest["ip3_mean"] = ip3_mean;
  manifest["base_seed"] = base_seed;
  manifest["files"] = nlohmann::json::array();
  for (int i = 0; i < ds.n_trajectories(); ++i) {
    std::ostringstream name;
    name << "traj_" << ds.seeds[i] << ".csv";
    std::ostringstream csv;
    csv << "t";
    for (const auto& s : ds.species) csv << "," << s;
    csv << ",seed\n";
    for (int t = 0; t < ds.n_times(); ++t) {
      csv << io::format_double(ds.times[t]);
      for (int s = 0; s < ds.n_species(); ++s)
        csv << "," << static_cast<std::int64_t>(std::llround(ds.data[i](t, s)));
      csv << "," << ds.seeds[i] << "\n";
    }
    io::write_text(dir / name.str(), csv.str());
    manifest["files"].push_back(name.str());
  }
  io::write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

EnsembleDataset load_ensemble(const std::filesystem::path& dir) {
  const auto manifest = nlohmann::json::parse(io::read_text(dir / "manifest.json"));
  EnsembleDataset ds;
  ds.label = manifest.at("label").get<std::string>();
  ds.species = manifest.at("species").get<std::vector<std::string>>();
  const int n = static_cast<int>(ds.species.size());
  for (const auto& file : manifest.at("files")) {
    const auto csv = io::read_csv(dir / file.get<std::string>());
    const int rows = static_cast<int>(csv.rows.size());
    Eigen::MatrixXd mat(rows, n);
    std::vector<double> times(rows);
    for (int t = 0; t < rows; ++t) {
      times[t] = csv.as_double(t, 0);
      for (int s = 0; s < n; ++s)
        mat(t, s) = static_cast<double>(csv.as_int(t, 1 + s));
    }
    if (ds.data.empty()) ds.times = times;
    ds.data.push_back(std::move(mat));
    ds.seeds.push_back(static_cast<std::uint64_t>(csv.as_int(0, n + 1)));
  }
  if (ds.data.empty()) throw std::runtime_error("ensemble has no trajectories");
  return ds;
}

}  // namespace camr
