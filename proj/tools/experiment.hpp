#pragma once

#include <memory>
#include <string>
#include <vector>

#include "config.hpp"
#include "macroreal/observable.hpp"
#include "macroreal/state.hpp"
#include "macroreal/system.hpp"

namespace macroreal::cli {

struct FixtureFile {
  std::string path;
  std::string sha256;
};

/// H, A, B and the initial state described by a config.
struct Model {
  std::shared_ptr<const HermitianObservable> h, a, b;
  QuantumState state;
  double frequency_unit = 1.0;  // omega0 for grid systems
  std::vector<FixtureFile> fixtures;
};

std::shared_ptr<const HermitianObservable> build_hamiltonian(const ExperimentConfig& config,
                                                             std::vector<FixtureFile>* fixtures = nullptr);
Model build_model(const ExperimentConfig& config);

class Experiment {
 public:
  explicit Experiment(const ExperimentConfig& config);

  const ExperimentConfig& config() const { return config_; }
  const Model& model() const { return model_; }
  const TwoTimeSystem& system() const { return *system_; }
  double d_eff() const { return d_eff_; }

  double absolute_sigma(double value) const;
  std::vector<double> sigmas() const;  // absolute, without limits
  double sigma_b() const;
  std::vector<double> taus() const;

 private:
  ExperimentConfig config_;
  Model model_;
  std::unique_ptr<TwoTimeSystem> system_;
  double d_eff_ = 0.0;
};

}  // namespace macroreal::cli
