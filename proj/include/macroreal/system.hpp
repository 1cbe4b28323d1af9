#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "macroreal/observable.hpp"
#include "macroreal/state.hpp"
#include "macroreal/types.hpp"

namespace macroreal {

struct SystemOptions {
  /// A-eigenbasis states are dropped (smallest population first) while the
  /// dropped population of every initial state stays below this.
  double population_tail = 1e-14;
  /// Energy states dropped from correlation traces while the dephased state
  /// and A times it lose less than this population.
  double energy_tail = 1e-10;
  /// B-eigenbasis rows dropped from pointer distributions below this bound.
  double pointer_tail = 1e-13;
};

/// Where an infinite eigenbasis sum was cut.
struct TruncationReport {
  std::size_t a_retained = 0;
  std::size_t a_total = 0;
  double a_tail = 0.0;
  std::size_t energy_retained = 0;
  std::size_t energy_total = 0;
  double energy_tail = 0.0;
};

/// B(tau) restricted to the retained A eigenbasis at one delay.
/// heisenberg(j, i) = <a_j| U† B U |a_i>.
struct DelaySlice {
  double tau = 0.0;
  ComplexMatrix heisenberg;
};

/// Amplitudes c_{j,i} = <b_j| U |a_i> on the retained A states. Rows are B
/// eigenstates; rows whose population bound is negligible for every initial
/// state are removed from `rows`/`b` but kept in `full` for operator sums.
struct Transition {
  double tau = 0.0;
  ComplexMatrix full;            // n_B x K_A
  std::vector<std::size_t> rows; // occupied B rows, ascending
  RealVector b;                  // eigenvalues of the occupied rows
  ComplexMatrix occupied;        // rows of `full` listed in `rows`
  double dropped_bound = 0.0;
};

/// Everything needed for two sequential measurements of A then B with unitary
/// evolution under H in between: H spectrum, the initial state(s) in A's
/// eigenbasis, and the basis changes between the three eigenbases. The
/// heavy matrices are real whenever H, A, B and the states are real.
class TwoTimeSystem {
 public:
  TwoTimeSystem(std::shared_ptr<const HermitianObservable> hamiltonian,
                std::shared_ptr<const HermitianObservable> a,
                std::shared_ptr<const HermitianObservable> b,
                std::vector<QuantumState> initial_states, SystemOptions options = {});
  TwoTimeSystem(std::shared_ptr<const HermitianObservable> hamiltonian,
                std::shared_ptr<const HermitianObservable> a,
                std::shared_ptr<const HermitianObservable> b, const QuantumState& initial,
                SystemOptions options = {});
  ~TwoTimeSystem();
  TwoTimeSystem(TwoTimeSystem&&) noexcept;
  TwoTimeSystem& operator=(TwoTimeSystem&&) noexcept;

  bool is_real() const;
  const SystemOptions& options() const;
  std::size_t dimension() const;
  std::size_t state_count() const;

  const HermitianObservable& hamiltonian() const;
  std::shared_ptr<const HermitianObservable> hamiltonian_ptr() const;
  const HermitianObservable& a() const;
  const HermitianObservable& b() const;
  const QuantumState& initial_state(std::size_t k = 0) const;

  /// Retained A eigenvalues (ascending) and their indices in A's spectrum.
  const RealVector& a_values() const;
  const std::vector<std::size_t>& a_indices() const;
  /// c_i = <a_i|psi_k> on the retained states.
  ComplexVector coefficients(std::size_t k = 0) const;
  TruncationReport truncation() const;

  /// Exact moments of the full initial state k.
  double mean_a(std::size_t k = 0) const;
  double mean_a2(std::size_t k = 0) const;

  Transition transition(double tau) const;
  DelaySlice delay_slice(const Transition& transition) const;
  DelaySlice delay_slice(double tau) const;

  /// Populations over the occupied B rows after a Gaussian A measurement of
  /// width sigma (0: projective, +inf: no back-action).
  RealVector b_populations(const Transition& tr, double sigma, std::size_t k = 0) const;
  /// |<b_j| U exp(i kappa A) |psi_k>|^2 over the occupied rows.
  RealVector kicked_b_populations(const Transition& tr, double kappa, std::size_t k = 0) const;

  /// C(tau) = Re Tr(diag(a) (rho o G_sigma) B(tau)) at every tau, through the
  /// energy representation. sigma may be 0 or +inf.
  RealVector correlation_trace(double sigma, std::span<const double> taus,
                               TruncationReport* report = nullptr) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace macroreal
