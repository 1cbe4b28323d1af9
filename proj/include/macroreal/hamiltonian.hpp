#pragma once

#include <string>

#include "macroreal/grid.hpp"
#include "macroreal/observable.hpp"

namespace macroreal {

inline const std::string kGridBasis = "grid";

enum class KineticScheme { finite_difference, spectral };

std::string to_string(KineticScheme scheme);
KineticScheme kinetic_scheme_from_string(const std::string& name);

/// -1/2 d²/dx² on the grid (hbar = m = 1), Dirichlet outside the box.
RealMatrix kinetic_matrix(const SpatialGrid& grid, KineticScheme scheme);

struct DoubleWellParameters {
  double omega0 = 4.3e-3;
  double alpha = 5e-2;
  double barrier_height = 1.0;
  KineticScheme kinetic = KineticScheme::spectral;
};

/// V(x) = omega0² x² / 2 + barrier_height / cosh²(alpha x)
double double_well_potential(double x, const DoubleWellParameters& p);

/// P²/2 + omega0² X²/2 + cosh⁻²(alpha X) on the grid. Throws a regime error if
/// the potential at the box edge does not clear the 40 lowest levels.
HermitianObservable build_double_well_hamiltonian(const SpatialGrid& grid,
                                                  const DoubleWellParameters& params);

HermitianObservable build_harmonic_hamiltonian(const SpatialGrid& grid, double omega0,
                                               KineticScheme kinetic = KineticScheme::spectral);

/// Diagonal matrix of the grid abscissae.
HermitianObservable build_position_observable(const SpatialGrid& grid);

}  // namespace macroreal
