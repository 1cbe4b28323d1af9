#include "macroreal/grid.hpp"

#include <cmath>
#include <sstream>

namespace macroreal {

SpatialGrid::SpatialGrid(double x_min, double x_max, std::size_t n_points)
    : x_min_(x_min), x_max_(x_max), n_points_(n_points), spacing_(0.0) {
  require(std::isfinite(x_min) && std::isfinite(x_max), "grid bounds must be finite");
  require(x_min < x_max, "grid requires x_min < x_max");
  if (n_points < 8) {
    std::ostringstream msg;
    msg << "grid requires at least 8 points, got " << n_points;
    fail(ErrorKind::invalid_argument, msg.str());
  }
  spacing_ = (x_max - x_min) / static_cast<double>(n_points - 1);
}

RealVector SpatialGrid::points() const {
  RealVector x(n_points_);
  for (std::size_t i = 0; i < n_points_; ++i) x[i] = point(i);
  x[n_points_ - 1] = x_max_;
  if (symmetric()) {
    // exact mirror symmetry, so even potentials stay bitwise even
    for (std::size_t i = 0; i < n_points_ / 2; ++i) x[n_points_ - 1 - i] = -x[i];
    if (n_points_ % 2 == 1) x[n_points_ / 2] = 0.0;
  }
  return x;
}

RealVector SpatialGrid::weights() const {
  RealVector w = RealVector::Constant(n_points_, spacing_);
  w[0] = 0.5 * spacing_;
  w[n_points_ - 1] = 0.5 * spacing_;
  return w;
}

bool SpatialGrid::symmetric() const {
  return std::abs(x_min_ + x_max_) <= 1e-12 * std::max(std::abs(x_min_), std::abs(x_max_));
}

SpatialGrid build_grid(double x_min, double x_max, std::size_t n_points) {
  return SpatialGrid(x_min, x_max, n_points);
}

}  // namespace macroreal
