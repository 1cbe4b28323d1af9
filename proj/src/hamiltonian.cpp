#include "macroreal/hamiltonian.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace macroreal {
namespace {

// Levels whose confinement the box edge must clear.
constexpr int kGuardedLevels = 40;

HermitianObservable assemble(const SpatialGrid& grid, const RealVector& potential,
                             KineticScheme kinetic, const std::string& name) {
  RealMatrix h = kinetic_matrix(grid, kinetic);
  h.diagonal() += potential;
  auto obs = HermitianObservable::dense(name, kGridBasis, h.cast<Complex>());
  obs.set_parity_symmetric(grid.symmetric());
  return obs;
}

void guard_box(const SpatialGrid& grid, double edge_potential, double level_bound,
               const std::string& what) {
  if (!(edge_potential > level_bound)) {
    std::ostringstream msg;
    msg << what << ": grid [" << grid.x_min() << ", " << grid.x_max()
        << "] too narrow; edge potential " << edge_potential << " a.u. does not exceed the bound "
        << level_bound << " a.u. on the " << kGuardedLevels << " lowest levels (widen the grid)";
    fail(ErrorKind::regime, msg.str());
  }
}

}  // namespace

std::string to_string(KineticScheme scheme) {
  return scheme == KineticScheme::spectral ? "spectral" : "finite_difference";
}

KineticScheme kinetic_scheme_from_string(const std::string& name) {
  if (name == "spectral") return KineticScheme::spectral;
  if (name == "finite_difference") return KineticScheme::finite_difference;
  fail(ErrorKind::config, "unknown kinetic scheme '" + name + "' (expected spectral or finite_difference)");
}

RealMatrix kinetic_matrix(const SpatialGrid& grid, KineticScheme scheme) {
  const auto n = static_cast<Eigen::Index>(grid.size());
  const double dx2 = grid.spacing() * grid.spacing();
  RealMatrix t = RealMatrix::Zero(n, n);
  if (scheme == KineticScheme::finite_difference) {
    for (Eigen::Index i = 0; i < n; ++i) {
      t(i, i) = 1.0 / dx2;
      if (i + 1 < n) {
        t(i, i + 1) = -0.5 / dx2;
        t(i + 1, i) = -0.5 / dx2;
      }
    }
    return t;
  }
  // sinc-DVR on a uniform grid
  const double pi2 = std::numbers::pi * std::numbers::pi;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Index d = i - j;
      if (d == 0) {
        t(i, j) = pi2 / (6.0 * dx2);
      } else {
        const double sign = (d % 2 == 0) ? 1.0 : -1.0;
        t(i, j) = sign / (dx2 * static_cast<double>(d * d));
      }
    }
  }
  return t;
}

double double_well_potential(double x, const DoubleWellParameters& p) {
  const double c = std::cosh(p.alpha * x);
  return 0.5 * p.omega0 * p.omega0 * x * x + p.barrier_height / (c * c);
}

HermitianObservable build_double_well_hamiltonian(const SpatialGrid& grid,
                                                  const DoubleWellParameters& p) {
  require(p.omega0 > 0 && std::isfinite(p.omega0), "double well requires omega0 > 0");
  require(p.alpha > 0 && std::isfinite(p.alpha), "double well requires alpha > 0");
  require(p.barrier_height >= 0 && std::isfinite(p.barrier_height),
          "double well requires a non-negative barrier height");
  const RealVector x = grid.points();
  RealVector v(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) v[i] = double_well_potential(x[i], p);
  // min-max: E_n <= (n + 1/2) omega0 + max barrier
  const double bound = (kGuardedLevels - 0.5) * p.omega0 + p.barrier_height;
  guard_box(grid, std::min(v[0], v[v.size() - 1]), bound, "double well");
  return assemble(grid, v, p.kinetic, "H_double_well");
}

HermitianObservable build_harmonic_hamiltonian(const SpatialGrid& grid, double omega0,
                                               KineticScheme kinetic) {
  require(omega0 > 0 && std::isfinite(omega0), "harmonic oscillator requires omega0 > 0");
  const RealVector x = grid.points();
  const RealVector v = (0.5 * omega0 * omega0) * x.array().square();
  guard_box(grid, std::min(v[0], v[v.size() - 1]), (kGuardedLevels - 0.5) * omega0, "harmonic");
  return assemble(grid, v, kinetic, "H_harmonic");
}

HermitianObservable build_position_observable(const SpatialGrid& grid) {
  return HermitianObservable::diagonal("X", kGridBasis, grid.points());
}

}  // namespace macroreal
