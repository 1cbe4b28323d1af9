#include "macroreal/state.hpp"

#include <cmath>

namespace macroreal {

QuantumState QuantumState::normalized() const {
  const double n = std::sqrt(norm_squared());
  require(n > 0, "cannot normalize a zero state");
  return QuantumState{amplitudes / n, basis, time};
}

ComplexVector wavefunction(const QuantumState& state, const SpatialGrid& grid) {
  require(static_cast<std::size_t>(state.amplitudes.size()) == grid.size(),
          "state and grid dimensions differ");
  return state.amplitudes / std::sqrt(grid.spacing());
}

Propagator::Propagator(std::shared_ptr<const HermitianObservable> h, double duration)
    : hamiltonian(std::move(h)), tau(duration) {
  require(hamiltonian != nullptr, "propagator needs a Hamiltonian");
  require(hamiltonian->has_spectrum(), "propagator needs a diagonalized Hamiltonian");
  require(std::isfinite(duration), "propagation time must be finite");
}

ComplexMatrix Propagator::unitary() const {
  const ComplexMatrix v = hamiltonian->eigenvector_matrix();
  const RealVector& e = hamiltonian->eigenvalues();
  ComplexVector phase(e.size());
  for (Eigen::Index n = 0; n < e.size(); ++n) phase[n] = std::polar(1.0, -e[n] * tau);
  return v * phase.asDiagonal() * v.adjoint();
}

ComplexVector Propagator::apply(const ComplexVector& v) const {
  ComplexVector c = hamiltonian->to_eigenbasis(v);
  const RealVector& e = hamiltonian->eigenvalues();
  for (Eigen::Index n = 0; n < e.size(); ++n) c[n] *= std::polar(1.0, -e[n] * tau);
  return hamiltonian->from_eigenbasis(c);
}

ComplexVector Propagator::apply_adjoint(const ComplexVector& v) const {
  ComplexVector c = hamiltonian->to_eigenbasis(v);
  const RealVector& e = hamiltonian->eigenvalues();
  for (Eigen::Index n = 0; n < e.size(); ++n) c[n] *= std::polar(1.0, e[n] * tau);
  return hamiltonian->from_eigenbasis(c);
}

QuantumState evolve(const QuantumState& state, const Propagator& prop) {
  if (state.basis != prop.hamiltonian->basis()) {
    fail(ErrorKind::invalid_argument, "cannot evolve a state in basis '" + state.basis +
                                          "' with a Hamiltonian in basis '" +
                                          prop.hamiltonian->basis() + "'");
  }
  return QuantumState{prop.apply(state.amplitudes), state.basis, state.time + prop.tau};
}

ComplexMatrix heisenberg_matrix_elements(const HermitianObservable& b, const Propagator& prop,
                                         const HermitianObservable& basis_of) {
  const auto& h = *prop.hamiltonian;
  if (b.basis() != h.basis() || basis_of.basis() != h.basis()) {
    fail(ErrorKind::invalid_argument, "Heisenberg matrix elements need a common basis");
  }
  const ComplexMatrix u = prop.unitary();
  const ComplexMatrix heis = u.adjoint() * b.dense_matrix() * u;
  const ComplexMatrix w = basis_of.eigenvector_matrix();
  return w.adjoint() * heis * w;
}

}  // namespace macroreal
