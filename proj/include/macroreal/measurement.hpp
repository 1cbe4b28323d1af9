#pragma once

#include <cstddef>
#include <memory>

#include "macroreal/observable.hpp"
#include "macroreal/state.hpp"
#include "macroreal/system.hpp"
#include "macroreal/types.hpp"

namespace macroreal {

/// Omega_{y-a} = (2 pi sigma^2)^(-1/4) exp(-(y-a)^2 / (4 sigma^2)).
double kraus_amplitude(double y, double a, double sigma);

/// Uniform pointer axis with trapezoidal weights.
struct PointerGrid {
  double y_min = 0.0;
  double spacing = 0.0;
  std::size_t size = 0;

  double y_max() const { return y_min + spacing * static_cast<double>(size - 1); }
  RealVector points() const;
  RealVector weights() const;
  bool covers(double lo, double hi) const;
  bool operator==(const PointerGrid&) const = default;
};

/// [lo - reach sigma, hi + reach sigma] with spacing sigma / resolution.
PointerGrid make_pointer_grid(double lo, double hi, double sigma, double resolution = 16.0,
                              double reach = 8.0);

struct MeasurementModel {
  std::shared_ptr<const HermitianObservable> observable;  // diagonalized
  double sigma = 1.0;
  double lambda = 1.0;
  PointerGrid grid;
};

/// Pointer grid spanning the whole spectrum of the observable.
MeasurementModel make_measurement(std::shared_ptr<const HermitianObservable> observable,
                                  double sigma);
/// Pointer grid spanning [lo, hi] (the occupied part of the spectrum).
MeasurementModel make_measurement(std::shared_ptr<const HermitianObservable> observable,
                                  double sigma, double lo, double hi);

struct PointerDistribution {
  RealVector y;
  RealVector density;
  RealVector weights;
  double sigma = 0.0;

  double integral() const { return weights.dot(density); }
  double mean() const { return weights.dot(y.cwiseProduct(density)); }
};

/// L1 distance of two densities on the same pointer grid.
double l1_distance(const PointerDistribution& p, const PointerDistribution& q);

struct JointDistribution {
  RealVector y_a, y_b;
  RealVector w_a, w_b;
  RealMatrix density;  // rows y_a, columns y_b
  double sigma_a = 0.0, sigma_b = 0.0;
  double t = 0.0, tau = 0.0;

  double integral() const { return w_a.dot(density * w_b); }
  RealVector marginal_a() const { return density * w_b; }
  RealVector marginal_b() const { return density.transpose() * w_a; }
};

/// State after reading y_A: sum_i Omega_{y_A - a_i} c_i |a_i>, unnormalized; returned in
/// the input basis. Its squared norm is the pointer density at y_A.
QuantumState post_measurement_state(const QuantumState& state, const MeasurementModel& model,
                                    double y_a);

PointerDistribution pointer_distribution(const QuantumState& state, const MeasurementModel& model);

/// sum_{i,j} Omega_{y_A - a_i} Omega_{y_B - b_j} c_i c_{j,i} |b_j>, unnormalized,
/// in the common basis at time t + tau.
QuantumState two_time_state(const QuantumState& state, const MeasurementModel& model_a,
                            const Propagator& prop, const MeasurementModel& model_b, double y_a,
                            double y_b);

JointDistribution joint_distribution(const QuantumState& state, const MeasurementModel& model_a,
                                     const Propagator& prop, const MeasurementModel& model_b);

/// Joint density of a prepared system on explicit pointer grids.
JointDistribution joint_distribution(const TwoTimeSystem& system, const Transition& transition,
                                     double sigma_a, double sigma_b, const PointerGrid& grid_a,
                                     const PointerGrid& grid_b);

/// int dy_A P(y_A, y_B).
PointerDistribution reduced_distribution(const JointDistribution& joint);

/// sum_j p_j |Omega_{y - b_j}|^2 on the grid.
PointerDistribution mixture_distribution(const RealVector& populations, const RealVector& b,
                                         double sigma, const PointerGrid& grid);

/// Pointer grid for y_B covering the occupied rows of a transition.
PointerGrid pointer_grid_for(const Transition& transition, double sigma_b);
/// Pointer grid for y_A covering the retained A eigenvalues.
PointerGrid pointer_grid_for(const TwoTimeSystem& system, double sigma_a);

/// Reduced y_B distribution after an A measurement of width sigma_a (0 and
/// +inf allowed), computed from the dephased state without the y_A integral.
PointerDistribution reduced_distribution(const TwoTimeSystem& system, const Transition& transition,
                                         double sigma_a, double sigma_b, const PointerGrid& grid_b,
                                         std::size_t state = 0);
/// y_B distribution without the first measurement.
PointerDistribution unmeasured_distribution(const TwoTimeSystem& system,
                                            const Transition& transition, double sigma_b,
                                            const PointerGrid& grid_b, std::size_t state = 0);

}  // namespace macroreal
