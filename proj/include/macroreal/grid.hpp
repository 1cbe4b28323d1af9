#pragma once

#include <cstddef>

#include "macroreal/types.hpp"

namespace macroreal {

/// Uniform 1-D grid with trapezoidal quadrature weights (atomic units).
class SpatialGrid {
 public:
  SpatialGrid(double x_min, double x_max, std::size_t n_points);

  double x_min() const { return x_min_; }
  double x_max() const { return x_max_; }
  std::size_t size() const { return n_points_; }
  double spacing() const { return spacing_; }

  double point(std::size_t i) const { return x_min_ + spacing_ * static_cast<double>(i); }
  RealVector points() const;
  RealVector weights() const;

  /// True when the abscissae are symmetric about zero (x_i = -x_{n-1-i}).
  bool symmetric() const;

  bool operator==(const SpatialGrid&) const = default;

 private:
  double x_min_;
  double x_max_;
  std::size_t n_points_;
  double spacing_;
};

SpatialGrid build_grid(double x_min, double x_max, std::size_t n_points);

}  // namespace macroreal
