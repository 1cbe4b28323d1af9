#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "macroreal/correlation.hpp"
#include "macroreal/measurement.hpp"
#include "macroreal/system.hpp"

namespace macroreal {

struct Tolerances {
  double eps_iwm = 1e-4;
  double eps_nsit = 1e-4;
  bool operator==(const Tolerances&) const = default;
};

/// Gauss-Hermite nodes and weights for int exp(-x^2) f(x) dx.
void gauss_hermite(int count, RealVector& nodes, RealVector& weights);

/// y_B distributions of the intensive B for N identical factors, with and
/// without a preceding A measurement, on one common pointer grid.
///
/// N = 1 uses the dephased single-particle state. For N > 1 the density is
/// rebuilt from its characteristic function: every particle receives the same
/// momentum-like kick k/N of the A measurement (k Gaussian with variance
/// 1/(4 sigma^2)), the N-fold product of the single-particle characteristic
/// function is integrated over k by Gauss-Hermite quadrature and the pointer
/// Gaussian is applied in Fourier space. The system must outlive this object.
class ReducedDistributions {
 public:
  ReducedDistributions(const TwoTimeSystem& system, double tau, double sigma_b, double n = 1.0,
                       std::size_t state = 0, int hermite_nodes = 64);

  const TwoTimeSystem& system() const { return *system_; }
  std::size_t state() const { return state_; }
  double n() const { return n_; }
  double sigma_b() const { return sigma_b_; }
  const Transition& transition() const { return transition_; }
  const PointerGrid& grid() const { return grid_; }

  PointerDistribution unmeasured() const;
  PointerDistribution reduced(double sigma_a) const;
  /// Characteristic-function route regardless of n (used for n > 1).
  PointerDistribution characteristic(double sigma_a) const;

 private:

  const TwoTimeSystem* system_;
  Transition transition_;
  double sigma_b_;
  double n_;
  std::size_t state_;
  int hermite_nodes_;
  PointerGrid grid_;
};

struct IwmScan {
  RealVector sigma_values;
  std::vector<PointerDistribution> reduced;
  RealVector derivative_norms;  // ||R_{k+1} - R_k||_1 / (sigma_{k+1} - sigma_k)
  RealVector scaled_norms;      // derivative_norms[k] * sigma_k
  std::optional<double> sigma_threshold;
  std::optional<std::size_t> threshold_index;
  double eps_iwm = 0.0;
  double n = 1.0;
  double sigma_b = 0.0;
  double tau = 0.0;
};

/// sigma_values must be strictly increasing, at least 5 of them spanning at
/// least two decades.
IwmScan iwm_scan(const ReducedDistributions& distributions, std::span<const double> sigma_values,
                 double eps_iwm);

struct NsitResult {
  double l1_residual = 0.0;
  /// |<y_A y_B> - <y_A><y_B>| / scale at sigma_a.
  double factorization_gap = 0.0;
  double scale = 1.0;
  double eps_nsit = 0.0;
  bool holds = false;
  /// Whether the scaled IWM derivative norm at sigma_a is below eps_iwm.
  std::optional<bool> iwm_consistent;
  double sigma_a = 0.0;
  double sigma_b = 0.0;
  double n = 1.0;
};

/// sqrt(<A^2> <B^2(tau)>) of one factor; 1 when that vanishes.
double correlation_scale(const TwoTimeSystem& system, const Transition& transition,
                         std::size_t state = 0);

/// Refuses (ErrorKind::refusal) unless the scan found a threshold and
/// sigma_a is at or above it.
NsitResult nsit_test(const ReducedDistributions& distributions, const DelaySlice& slice,
                     const IwmScan& scan, double sigma_a, double eps_nsit);

enum class Region { contextual, macrorealistic, non_macrorealistic };
std::string to_string(Region region);

struct DeltaEntry {
  double sigma = 0.0;
  double n = 1.0;
  double correlation = 0.0;
  double mean_a = 0.0;
  double mean_b = 0.0;
  double delta_qc = 0.0;
  double delta = 0.0;
  double derivative_term = 0.0;
  Region region = Region::contextual;
};

struct DecayFit {
  std::string model;  // "power_law": log|D| = c + p log N; "exponential": log|D| = c - r N
  double parameter = 0.0;
  double intercept = 0.0;
  double rms_residual = 0.0;
  std::size_t points = 0;
};

struct DeltaTable {
  std::vector<DeltaEntry> entries;  // sorted by (N, sigma)
  std::vector<double> n_values;
  std::vector<double> asymptotic_delta;  // per N, at the largest sigma
  double scale = 1.0;
  double tau = 0.0;
  std::vector<DecayFit> fits;
};

/// Discrete Delta(sigma_k, N) = [C(sigma_{k+1}, N) - C(sigma_k, N)] - Delta_QC(sigma_k, N)
/// (backward difference at the last sigma) from the collective correlator.
DeltaTable delta_statistic(const TwoTimeSystem& system, const DelaySlice& slice,
                           std::span<const double> sigma_values, std::span<const double> n_values,
                           const Tolerances& tolerances, double scale);

enum class Verdict { macrorealistic, non_macrorealistic, inconclusive };
std::string to_string(Verdict verdict);

struct ProtocolOptions {
  std::vector<double> sigma_values;  // absolute
  double sigma_b = 0.0;              // absolute
  double tau = 0.0;
  double n = 1.0;
  std::vector<double> delta_n_values;
  std::optional<double> nsit_sigma;  // defaults to the detected threshold
  Tolerances tolerances;
  int hermite_nodes = 64;
};

struct ProtocolReport {
  IwmScan iwm;
  std::optional<NsitResult> nsit;
  DeltaTable delta;
  Verdict verdict = Verdict::inconclusive;
  Tolerances tolerances;
  double d_eff = 0.0;
  double tau = 0.0;
  double n = 1.0;
};

ProtocolReport run_protocol(const TwoTimeSystem& system, const ProtocolOptions& options);

}  // namespace macroreal
