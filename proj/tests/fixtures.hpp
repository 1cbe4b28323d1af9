#pragma once

#include <cstdint>
#include <memory>
#include <random>

#include "macroreal/hamiltonian.hpp"
#include "macroreal/observable.hpp"
#include "macroreal/state.hpp"

namespace fixtures {

using namespace macroreal;

inline ComplexMatrix random_hermitian(int n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, 1.0);
  ComplexMatrix m(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) m(i, j) = Complex(g(rng), g(rng));
  return scale * 0.5 * (m + m.adjoint());
}

inline ComplexVector random_state(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  ComplexVector v(n);
  for (int i = 0; i < n; ++i) v[i] = Complex(g(rng), g(rng));
  return v.normalized();
}

inline std::shared_ptr<const HermitianObservable> shared(HermitianObservable o) {
  return std::make_shared<const HermitianObservable>(diagonalize(std::move(o)));
}

/// Random n-level system: H, A, B Hermitian, psi random, all in basis "levels".
struct Levels {
  std::shared_ptr<const HermitianObservable> h, a, b;
  QuantumState psi;
};

inline Levels random_levels(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Levels l;
  l.h = shared(HermitianObservable::dense("H", "levels", random_hermitian(n, rng)));
  l.a = shared(HermitianObservable::dense("A", "levels", random_hermitian(n, rng)));
  l.b = shared(HermitianObservable::dense("B", "levels", random_hermitian(n, rng)));
  l.psi = QuantumState{random_state(n, rng), "levels", 0.0};
  return l;
}

/// Small double well on a coarse symmetric grid (fast enough for unit tests).
struct Well {
  SpatialGrid grid{-600.0, 600.0, 512};
  std::shared_ptr<const HermitianObservable> h, x;
  QuantumState ground;
};

inline Well small_double_well() {
  Well w;
  w.h = shared(build_double_well_hamiltonian(w.grid, DoubleWellParameters{}));
  w.x = shared(build_position_observable(w.grid));
  w.ground = QuantumState{ground_state(*w.h), kGridBasis, 0.0};
  return w;
}

}  // namespace fixtures
