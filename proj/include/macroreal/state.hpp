#pragma once

#include <memory>
#include <string>

#include "macroreal/grid.hpp"
#include "macroreal/observable.hpp"

namespace macroreal {

/// Amplitudes over an orthonormal discrete basis. Grid states hold
/// c_i = psi(x_i) sqrt(dx); see wavefunction().
struct QuantumState {
  ComplexVector amplitudes;
  std::string basis;
  double time = 0.0;

  double norm_squared() const { return amplitudes.squaredNorm(); }
  QuantumState normalized() const;
};

/// psi(x_i) on the grid; satisfies sum_i w_i |psi_i|^2 = 1 up to edge terms.
ComplexVector wavefunction(const QuantumState& state, const SpatialGrid& grid);

/// Unitary step between the two measurements, U = exp(-i H tau).
struct Propagator {
  std::shared_ptr<const HermitianObservable> hamiltonian;
  double tau = 0.0;

  Propagator(std::shared_ptr<const HermitianObservable> h, double duration);

  ComplexMatrix unitary() const;
  ComplexVector apply(const ComplexVector& v) const;
  ComplexVector apply_adjoint(const ComplexVector& v) const;
};

QuantumState evolve(const QuantumState& state, const Propagator& prop);

/// B_{j,i}(tau) = <a_j| U† B U |a_i> in the eigenbasis of basis_of.
ComplexMatrix heisenberg_matrix_elements(const HermitianObservable& b, const Propagator& prop,
                                         const HermitianObservable& basis_of);

}  // namespace macroreal
