#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "macroreal/measurement.hpp"
#include "macroreal/state.hpp"
#include "macroreal/system.hpp"

namespace macroreal {

enum class CorrelationMethod {
  brute_force,
  closed_form,
  many_body,
  collective,
  iwm_limit,
  projective_limit,
};

std::string to_string(CorrelationMethod method);

/// <y_A(t) y_B(tau)>.
struct CorrelationResult {
  double value = 0.0;
  /// |Im| of the symmetrized sum relative to max(|value|, 1); zero up to rounding.
  double imag_residue = 0.0;
  double sigma_a = 0.0;
  double sigma_b = 0.0;
  double t = 0.0;
  double tau = 0.0;
  CorrelationMethod method = CorrelationMethod::closed_form;
  TruncationReport truncation;
};

/// Double pointer integral of y_A y_B P(y_A, y_B).
CorrelationResult correlation_brute_force(const JointDistribution& joint);

/// Closed form Re sum_{i,j} a_i c_j* G_ij c_i B_ji(tau), G_ij = exp(-(a_i-a_j)^2/(8 sigma^2)).
/// Independent of sigma_b.
CorrelationResult correlation_closed_form(const TwoTimeSystem& system, const DelaySlice& slice,
                                          double sigma_a);
CorrelationResult correlation_closed_form(const TwoTimeSystem& system, double sigma_a, double tau);
CorrelationResult correlation_closed_form(const QuantumState& state,
                                          std::shared_ptr<const HermitianObservable> a,
                                          std::shared_ptr<const HermitianObservable> b,
                                          const Propagator& prop, double sigma_a);

/// <y_B(tau)> after the A measurement: Re sum_{i,j} c_j* G_ij c_i B_ji(tau).
double mean_b_after(const TwoTimeSystem& system, const DelaySlice& slice, double sigma_a,
                    std::size_t state = 0);

/// Re <psi| A U† B U |psi> by direct operator products.
CorrelationResult correlation_iwm_limit(const TwoTimeSystem& system, double tau);
/// sum_i a_i |c_i|^2 <a_i| B(tau) |a_i>.
CorrelationResult correlation_projective_limit(const TwoTimeSystem& system, double tau);

/// N copies of single-particle factors and the intensive A = sum_xi A_xi / N.
struct ManyBodySpec {
  std::size_t n = 1;
  /// One entry (all factors identical) or n entries, indices into the
  /// system's initial states.
  std::vector<std::size_t> factors{0};

  std::size_t factor(std::size_t xi) const { return factors.size() == 1 ? factors[0] : factors[xi]; }
};

/// Explicit product-basis evaluation of the many-body closed form with
/// damping exp(-(sum_nu a_{i_nu} - a_{j_nu})^2 / (8 sigma^2 N^2)),
/// non-interacting evolution. Product dimension capped at max_dimension.
CorrelationResult correlation_many_body(const TwoTimeSystem& system, const ManyBodySpec& spec,
                                        const DelaySlice& slice, double sigma_a,
                                        std::size_t max_dimension = 100000);

/// Same sum for an arbitrary many-body state and Heisenberg operator given in
/// the product A eigenbasis: Re sum_{I,J} A_I c_J* G_IJ c_I B_JI with
/// A_I = (sum_nu a_{i_nu}) / N.
double many_body_dense(const RealVector& a_single, std::size_t n, const ComplexVector& c,
                       const ComplexMatrix& heisenberg, double sigma_a);

/// Non-interacting identical factors:
/// (1/N) Re sum_{i,j} c_j* G^{(N sigma)}_ij c_i B_ji (a_i + (N-1)<A>).
CorrelationResult correlation_collective(const TwoTimeSystem& system, const DelaySlice& slice,
                                         double sigma_a, double n, std::size_t state = 0);

struct EffectiveDimension {
  double value = 0.0;
  double occupation_threshold = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

/// Width of the occupied part of A's spectrum: eigenvalues needed (largest
/// population first) to reach 1 - threshold. For N identical factors the
/// intensive width equals the single-particle one.
EffectiveDimension effective_dimension(const QuantumState& state, const HermitianObservable& a,
                                       double occupation_threshold = 1e-6);

enum class ExpansionVariant { as_printed, roles_swapped, derived };
std::string to_string(ExpansionVariant variant);

struct BackactionCheck {
  ExpansionVariant variant;
  ComplexVector approximant;
  double fidelity = 0.0;  // |<exact|approx>|^2 / (|exact|^2 |approx|^2)
  double deficit = 0.0;   // 1 - fidelity, from the perpendicular residual
};

struct BackactionReport {
  ComplexVector exact;  // two_time_state amplitudes
  std::vector<BackactionCheck> checks;
  double d_eff = 0.0;
  const BackactionCheck& variant(ExpansionVariant v) const;
};

/// Exact two-time state next to its first-order expansions in 1/sigma^2.
/// Requires sigma_a, sigma_b >= min_ratio * d_eff.
BackactionReport backaction_first_order(const QuantumState& state, const MeasurementModel& model_a,
                                        const Propagator& prop, const MeasurementModel& model_b,
                                        double y_a, double y_b, double min_ratio = 1e3);

/// <A^2> - <A>^2 for A = sum_xi A_xi / N on the product of the given factors,
/// via N^-2 sum_xi [<A_xi^2> + sum_{nu != xi} <A_xi><A_nu>] - <A>^2 with the
/// cross terms cancelled algebraically.
double intensive_variance(const std::vector<QuantumState>& factors, const HermitianObservable& a,
                          std::size_t n);

}  // namespace macroreal
