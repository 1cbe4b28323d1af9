#include "experiment.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "macroreal/correlation.hpp"
#include "macroreal/hamiltonian.hpp"
#include "output.hpp"

namespace macroreal::cli {
namespace {

using json = nlohmann::json;

struct MatrixFile {
  std::string text;
  json doc;
  std::string path;
};

MatrixFile read_matrix_file(const ExperimentConfig& config) {
  const auto path = config.base_dir / config.system.file;
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::config, "cannot read explicit matrix file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  MatrixFile f{ss.str(), {}, path.string()};
  try {
    f.doc = json::parse(f.text);
  } catch (const json::exception& e) {
    fail(ErrorKind::config, "malformed explicit matrix file " + f.path + ": " + e.what());
  }
  return f;
}

ComplexMatrix read_matrix(const MatrixFile& f, const char* key) {
  if (!f.doc.contains(key)) fail(ErrorKind::config, f.path + ": missing \"" + key + "\"");
  try {
    const auto& m = f.doc.at(key);
    const auto re = m.at("re").get<std::vector<std::vector<double>>>();
    const auto im = m.contains("im") ? m.at("im").get<std::vector<std::vector<double>>>()
                                     : std::vector<std::vector<double>>{};
    const auto n = static_cast<Eigen::Index>(re.size());
    ComplexMatrix out(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (static_cast<Eigen::Index>(re[i].size()) != n) fail(ErrorKind::config, f.path + ": \"" + key + "\" is not square");
      for (Eigen::Index j = 0; j < n; ++j) {
        out(i, j) = Complex(re[i][j], im.empty() ? 0.0 : im.at(i).at(j));
      }
    }
    if (hermiticity_defect(out) > 1e-12) fail(ErrorKind::config, f.path + ": \"" + key + "\" is not Hermitian");
    return out;
  } catch (const json::exception& e) {
    fail(ErrorKind::config, f.path + ": bad \"" + key + "\": " + e.what());
  } catch (const std::out_of_range&) {
    fail(ErrorKind::config, f.path + ": \"" + key + "\" imaginary part has the wrong shape");
  }
}

ComplexVector read_vector(const MatrixFile& f, const char* key, Eigen::Index n) {
  if (!f.doc.contains(key)) fail(ErrorKind::config, f.path + ": missing \"" + key + "\"");
  try {
    const auto& v = f.doc.at(key);
    const auto re = v.at("re").get<std::vector<double>>();
    const auto im = v.contains("im") ? v.at("im").get<std::vector<double>>() : std::vector<double>(re.size(), 0.0);
    if (static_cast<Eigen::Index>(re.size()) != n || im.size() != re.size()) {
      fail(ErrorKind::config, f.path + ": \"" + key + "\" has the wrong length");
    }
    ComplexVector out(n);
    for (Eigen::Index i = 0; i < n; ++i) out[i] = Complex(re[i], im[i]);
    if (out.norm() == 0.0) fail(ErrorKind::config, f.path + ": \"" + key + "\" is the zero vector");
    return out.normalized();
  } catch (const json::exception& e) {
    fail(ErrorKind::config, f.path + ": bad \"" + key + "\": " + e.what());
  }
}

std::shared_ptr<const HermitianObservable> shared(HermitianObservable o) {
  return std::make_shared<const HermitianObservable>(diagonalize(std::move(o)));
}

SpatialGrid grid_of(const SystemConfig& s) { return SpatialGrid(s.grid.x_min, s.grid.x_max, s.grid.points); }

}  // namespace

std::shared_ptr<const HermitianObservable> build_hamiltonian(const ExperimentConfig& config,
                                                             std::vector<FixtureFile>* fixtures) {
  const auto& s = config.system;
  switch (s.kind) {
    case SystemKind::double_well: {
      DoubleWellParameters p;
      p.omega0 = s.omega0;
      p.alpha = s.alpha;
      p.barrier_height = s.barrier_height;
      p.kinetic = s.kinetic;
      return shared(build_double_well_hamiltonian(grid_of(s), p));
    }
    case SystemKind::harmonic:
      return shared(build_harmonic_hamiltonian(grid_of(s), s.omega0, s.kinetic));
    case SystemKind::explicit_matrix: {
      const auto f = read_matrix_file(config);
      if (fixtures) fixtures->push_back({f.path, sha256_hex(f.text)});
      return shared(HermitianObservable::dense("H", "explicit", read_matrix(f, "H")));
    }
  }
  fail(ErrorKind::config, "unknown system kind");
}

Model build_model(const ExperimentConfig& config) {
  const auto& s = config.system;
  Model m;
  m.h = build_hamiltonian(config, &m.fixtures);
  ComplexVector file_state;
  if (s.kind == SystemKind::explicit_matrix) {
    const auto f = read_matrix_file(config);
    m.a = shared(HermitianObservable::dense("A", "explicit", read_matrix(f, "A")));
    m.b = shared(HermitianObservable::dense("B", "explicit", read_matrix(f, "B")));
    const auto n = static_cast<Eigen::Index>(m.h->dimension());
    if (static_cast<Eigen::Index>(m.a->dimension()) != n || static_cast<Eigen::Index>(m.b->dimension()) != n) {
      fail(ErrorKind::config, f.path + ": H, A and B must have the same dimension");
    }
    if (s.initial_state == "file") file_state = read_vector(f, "state", n);
    m.state.basis = "explicit";
  } else {
    m.a = shared(build_position_observable(grid_of(s)));
    m.b = m.a;
    m.frequency_unit = s.omega0;
    m.state.basis = kGridBasis;
  }
  const std::size_t dim = m.h->dimension();
  if ((s.initial_state == "h_eigenstate" || s.initial_state == "a_eigenstate") && s.eigen_index >= dim) {
    fail(ErrorKind::config, "system.eigen_index " + std::to_string(s.eigen_index) +
                                " is out of range for dimension " + std::to_string(dim));
  }
  if (s.initial_state == "ground") m.state.amplitudes = ground_state(*m.h);
  else if (s.initial_state == "h_eigenstate") m.state.amplitudes = m.h->eigenvector(s.eigen_index);
  else if (s.initial_state == "a_eigenstate") m.state.amplitudes = m.a->eigenvector(s.eigen_index);
  else m.state.amplitudes = file_state;
  return m;
}

Experiment::Experiment(const ExperimentConfig& config) : config_(config), model_(build_model(config)) {
  SystemOptions opts;
  opts.population_tail = config.tolerances.population_tail;
  opts.energy_tail = config.tolerances.energy_tail;
  opts.pointer_tail = config.tolerances.pointer_tail;
  system_ = std::make_unique<TwoTimeSystem>(model_.h, model_.a, model_.b, model_.state, opts);
  d_eff_ = effective_dimension(model_.state, *model_.a, config.tolerances.occupation_threshold).value;
}

double Experiment::absolute_sigma(double value) const {
  if (config_.measurement.sigma_unit == "au") return value;
  if (!(d_eff_ > 0)) {
    fail(ErrorKind::config, "measurement.sigma_unit is d_eff but the initial state has zero effective "
                            "dimension; give sigma in au");
  }
  return value * d_eff_;
}

std::vector<double> Experiment::sigmas() const {
  std::vector<double> out;
  for (double v : config_.measurement.sigma.resolve()) out.push_back(absolute_sigma(v));
  return out;
}

double Experiment::sigma_b() const {
  const double v = config_.measurement.sigma_b;
  if (config_.measurement.sigma_b_unit == "au") return v;
  if (!(d_eff_ > 0)) {
    fail(ErrorKind::config, "measurement.sigma_b_unit is d_eff but the effective dimension is zero; "
                            "give sigma_b in au");
  }
  return v * d_eff_;
}

std::vector<double> Experiment::taus() const { return config_.times.resolve(model_.frequency_unit); }

}  // namespace macroreal::cli
