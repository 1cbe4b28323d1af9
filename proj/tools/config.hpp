#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "macroreal/hamiltonian.hpp"

namespace macroreal::cli {

inline constexpr int kSchemaVersion = 1;

struct GridConfig {
  double x_min = -1200.0;
  double x_max = 1200.0;
  std::size_t points = 4096;
  bool operator==(const GridConfig&) const = default;
};

enum class SystemKind { double_well, harmonic, explicit_matrix };

struct SystemConfig {
  SystemKind kind = SystemKind::double_well;
  double omega0 = 4.3e-3;
  double alpha = 5e-2;
  double barrier_height = 1.0;
  KineticScheme kinetic = KineticScheme::spectral;
  GridConfig grid;
  std::string file;  // explicit_matrix, relative to the config file
  // "ground", "h_eigenstate", "a_eigenstate" or "file"
  std::string initial_state = "ground";
  std::size_t eigen_index = 0;
  bool operator==(const SystemConfig&) const = default;
};

/// Either explicit values or a log grid (per_decade points per decade, both ends included).
struct ValueList {
  std::vector<double> values;
  double log_min = 0.0;
  double log_max = 0.0;
  int per_decade = 0;
  bool is_log() const { return per_decade > 0; }
  std::vector<double> resolve() const;
  bool operator==(const ValueList&) const = default;
};

struct MeasurementConfig {
  ValueList sigma;
  std::string sigma_unit = "d_eff";  // "d_eff" or "au"
  bool include_limits = true;        // add sigma = 0 and sigma = inf where a limit makes sense
  double sigma_b = 0.1;
  std::string sigma_b_unit = "d_eff";
  bool operator==(const MeasurementConfig&) const = default;
};

struct TimesConfig {
  std::vector<double> values;  // explicit list, or
  std::size_t samples = 0;     // uniform: tau_k = k * span / samples
  double span = 0.0;
  std::string unit = "au";  // "au", "pi" or "period" (2 pi / omega0)
  std::vector<double> resolve(double omega0) const;
  bool operator==(const TimesConfig&) const = default;
};

struct ToleranceConfig {
  double eps_iwm = 1e-4;
  double eps_nsit = 1e-4;
  double population_tail = 1e-14;
  double energy_tail = 1e-10;
  double pointer_tail = 1e-13;
  double occupation_threshold = 1e-6;
  int hermite_nodes = 64;
  bool operator==(const ToleranceConfig&) const = default;
};

struct ProtocolConfig {
  double n = 1.0;
  std::optional<double> nsit_sigma;  // in measurement.sigma_unit
  bool operator==(const ProtocolConfig&) const = default;
};

struct OutputConfig {
  std::string directory = "out";
  std::vector<std::string> formats{"csv", "json"};
  bool operator==(const OutputConfig&) const = default;
};

struct ExperimentConfig {
  int schema_version = kSchemaVersion;
  SystemConfig system;
  MeasurementConfig measurement;
  TimesConfig times;
  std::vector<double> ensemble{1.0};
  ToleranceConfig tolerances;
  ProtocolConfig protocol;
  OutputConfig output;
  std::filesystem::path base_dir;  // not serialized
  bool operator==(const ExperimentConfig& o) const;
};

std::string to_string(SystemKind kind);

/// Throws Error(config) with "line L, column C" anchors.
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const ExperimentConfig& config);

}  // namespace macroreal::cli
