#include "macroreal/measurement.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "macroreal/kernels.hpp"

namespace macroreal {
namespace {

constexpr double kReach = 8.0;

void check_sigma(double sigma) {
  if (!(sigma > 0) || !std::isfinite(sigma)) {
    fail(ErrorKind::invalid_argument, "measurement strength sigma must be positive and finite");
  }
}

void require_coverage(const PointerGrid& grid, double lo, double hi, double sigma,
                      const char* which) {
  if (!grid.covers(lo - kReach * sigma, hi + kReach * sigma)) {
    std::ostringstream msg;
    msg.precision(6);
    msg << "pointer grid for " << which << " [" << grid.y_min << ", " << grid.y_max()
        << "] does not cover the occupied spectrum [" << lo << ", " << hi << "] +- 8 sigma (sigma = "
        << sigma << "); widen the grid or use make_pointer_grid";
    fail(ErrorKind::regime, msg.str());
  }
}

// occupied eigenvalue range of a state: cumulative population 1 - 1e-14
std::pair<double, double> occupied_range(const RealVector& values, const RealVector& pop) {
  double lo = values[values.size() - 1], hi = values[0];
  const double total = pop.sum();
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (pop[i] > 0 && pop[i] > 1e-14 * total) {
      lo = std::min(lo, values[i]);
      hi = std::max(hi, values[i]);
    }
  }
  if (lo > hi) lo = hi = values[0];
  return {lo, hi};
}

}  // namespace

double kraus_amplitude(double y, double a, double sigma) {
  check_sigma(sigma);
  const double u = y - a;
  return std::pow(2.0 * std::numbers::pi * sigma * sigma, -0.25) * std::exp(-u * u / (4.0 * sigma * sigma));
}

RealVector PointerGrid::points() const {
  RealVector y(static_cast<Eigen::Index>(size));
  for (std::size_t k = 0; k < size; ++k) y[static_cast<Eigen::Index>(k)] = y_min + spacing * static_cast<double>(k);
  return y;
}

RealVector PointerGrid::weights() const {
  RealVector w = RealVector::Constant(static_cast<Eigen::Index>(size), spacing);
  if (size > 0) {
    w[0] *= 0.5;
    w[static_cast<Eigen::Index>(size) - 1] *= 0.5;
  }
  return w;
}

bool PointerGrid::covers(double lo, double hi) const {
  const double slack = 1e-9 * std::max({1.0, std::abs(lo), std::abs(hi)});
  return y_min <= lo + slack && y_max() >= hi - slack;
}

PointerGrid make_pointer_grid(double lo, double hi, double sigma, double resolution, double reach) {
  check_sigma(sigma);
  require(lo <= hi, "pointer range is inverted");
  require(resolution >= 1 && reach > 0, "pointer grid resolution and reach must be positive");
  PointerGrid g;
  g.spacing = sigma / resolution;
  const double start = lo - reach * sigma;
  const double stop = hi + reach * sigma;
  const auto steps = static_cast<std::size_t>(std::ceil((stop - start) / g.spacing - 1e-9));
  g.size = steps + 1;
  // centre the (slightly longer) grid on the requested interval
  g.y_min = 0.5 * (start + stop) - 0.5 * g.spacing * static_cast<double>(steps);
  return g;
}

MeasurementModel make_measurement(std::shared_ptr<const HermitianObservable> observable,
                                  double sigma) {
  require(observable && observable->has_spectrum(), "measured observable must be diagonalized");
  const RealVector& a = observable->eigenvalues();
  return make_measurement(observable, sigma, a[0], a[a.size() - 1]);
}

MeasurementModel make_measurement(std::shared_ptr<const HermitianObservable> observable,
                                  double sigma, double lo, double hi) {
  require(observable && observable->has_spectrum(), "measured observable must be diagonalized");
  check_sigma(sigma);
  MeasurementModel m;
  m.observable = std::move(observable);
  m.sigma = sigma;
  m.grid = make_pointer_grid(lo, hi, sigma);
  return m;
}

double l1_distance(const PointerDistribution& p, const PointerDistribution& q) {
  require(p.y.size() == q.y.size() && (p.y - q.y).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + p.y.cwiseAbs().maxCoeff()),
          "L1 distance needs a common pointer grid");
  return p.weights.dot((p.density - q.density).cwiseAbs());
}

QuantumState post_measurement_state(const QuantumState& state, const MeasurementModel& model,
                                    double y_a) {
  const auto& obs = *model.observable;
  if (state.basis != obs.basis()) {
    fail(ErrorKind::invalid_argument, "state basis '" + state.basis +
                                          "' cannot be converted to the eigenbasis of '" +
                                          obs.name() + "'");
  }
  ComplexVector c = obs.to_eigenbasis(state.amplitudes);
  const RealVector& a = obs.eigenvalues();
  for (Eigen::Index i = 0; i < c.size(); ++i) c[i] *= kraus_amplitude(y_a, model.lambda * a[i], model.sigma);
  return QuantumState{obs.from_eigenbasis(c), state.basis, state.time};
}

PointerDistribution pointer_distribution(const QuantumState& state, const MeasurementModel& model) {
  const auto& obs = *model.observable;
  require(state.basis == obs.basis(), "state and observable bases differ");
  const RealVector pop = obs.to_eigenbasis(state.amplitudes).cwiseAbs2();
  const RealVector& a = obs.eigenvalues();
  const auto [lo, hi] = occupied_range(a, pop);
  require_coverage(model.grid, lo, hi, model.sigma, obs.name().c_str());
  PointerDistribution d;
  d.y = model.grid.points();
  d.weights = model.grid.weights();
  d.sigma = model.sigma;
  d.density.resize(d.y.size());
  // |psi_A|^2 = sum_i Omega_{y - a_i}^2 |c_i|^2 (the Kraus family is diagonal in A)
  for (Eigen::Index k = 0; k < d.y.size(); ++k) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      const double om = kraus_amplitude(d.y[k], a[i], model.sigma);
      s += om * om * pop[i];
    }
    d.density[k] = s;
  }
  return d;
}

QuantumState two_time_state(const QuantumState& state, const MeasurementModel& model_a,
                            const Propagator& prop, const MeasurementModel& model_b, double y_a,
                            double y_b) {
  const auto& a = *model_a.observable;
  const auto& b = *model_b.observable;
  const auto& h = *prop.hamiltonian;
  if (state.basis != a.basis() || a.basis() != b.basis() || b.basis() != h.basis()) {
    fail(ErrorKind::invalid_argument, "two-time state needs state, A, B and H in one basis");
  }
  const ComplexVector c = a.to_eigenbasis(state.amplitudes);
  // c_{j,i} = <b_j| U |a_i>
  const ComplexMatrix cji = b.eigenvector_matrix().adjoint() * prop.unitary() * a.eigenvector_matrix();
  const RealVector& av = a.eigenvalues();
  const RealVector& bv = b.eigenvalues();
  ComplexVector out = ComplexVector::Zero(c.size());
  for (Eigen::Index j = 0; j < bv.size(); ++j) {
    const double om_b = kraus_amplitude(y_b, model_b.lambda * bv[j], model_b.sigma);
    Complex sum = 0.0;
    for (Eigen::Index i = 0; i < av.size(); ++i) {
      sum += kraus_amplitude(y_a, model_a.lambda * av[i], model_a.sigma) * c[i] * cji(j, i);
    }
    out[j] = om_b * sum;
  }
  return QuantumState{b.from_eigenbasis(out), state.basis, state.time + prop.tau};
}

JointDistribution joint_distribution(const QuantumState& state, const MeasurementModel& model_a,
                                     const Propagator& prop, const MeasurementModel& model_b) {
  SystemOptions options;
  options.population_tail = 0.0;
  const TwoTimeSystem system(prop.hamiltonian, model_a.observable, model_b.observable, state, options);
  const Transition tr = system.transition(prop.tau);
  JointDistribution j = joint_distribution(system, tr, model_a.sigma, model_b.sigma, model_a.grid, model_b.grid);
  j.t = state.time;
  return j;
}

JointDistribution joint_distribution(const TwoTimeSystem& system, const Transition& transition,
                                     double sigma_a, double sigma_b, const PointerGrid& grid_a,
                                     const PointerGrid& grid_b) {
  check_sigma(sigma_a);
  check_sigma(sigma_b);
  const RealVector& a = system.a_values();
  require_coverage(grid_a, a[0], a[a.size() - 1], sigma_a, "A");
  require_coverage(grid_b, transition.b[0], transition.b[transition.b.size() - 1], sigma_b, "B");
  JointDistribution j;
  j.y_a = grid_a.points();
  j.y_b = grid_b.points();
  j.w_a = grid_a.weights();
  j.w_b = grid_b.weights();
  j.sigma_a = sigma_a;
  j.sigma_b = sigma_b;
  j.t = system.initial_state().time;
  j.tau = transition.tau;
  RealMatrix omega(a.size(), j.y_a.size());
  for (Eigen::Index k = 0; k < j.y_a.size(); ++k)
    for (Eigen::Index i = 0; i < a.size(); ++i) omega(i, k) = kraus_amplitude(j.y_a[k], a[i], sigma_a);
  // phi_j(y_A) = sum_i c_{j,i} Omega_{y_A - a_i} c_i
  const ComplexMatrix phi = transition.occupied * system.coefficients().asDiagonal() * omega.cast<Complex>();
  j.density = kernels::parallel::joint_density(phi, transition.b, sigma_b, j.y_b);
  return j;
}

PointerDistribution reduced_distribution(const JointDistribution& joint) {
  PointerDistribution d;
  d.y = joint.y_b;
  d.weights = joint.w_b;
  d.density = joint.marginal_b();
  d.sigma = joint.sigma_b;
  return d;
}

PointerDistribution mixture_distribution(const RealVector& populations, const RealVector& b,
                                         double sigma, const PointerGrid& grid) {
  check_sigma(sigma);
  PointerDistribution d;
  d.y = grid.points();
  d.weights = grid.weights();
  d.sigma = sigma;
  d.density = kernels::parallel::gaussian_mixture(populations, b, sigma, d.y);
  return d;
}

PointerGrid pointer_grid_for(const Transition& transition, double sigma_b) {
  return make_pointer_grid(transition.b[0], transition.b[transition.b.size() - 1], sigma_b);
}

PointerGrid pointer_grid_for(const TwoTimeSystem& system, double sigma_a) {
  const RealVector& a = system.a_values();
  return make_pointer_grid(a[0], a[a.size() - 1], sigma_a);
}

PointerDistribution reduced_distribution(const TwoTimeSystem& system, const Transition& transition,
                                         double sigma_a, double sigma_b, const PointerGrid& grid_b,
                                         std::size_t state) {
  require_coverage(grid_b, transition.b[0], transition.b[transition.b.size() - 1], sigma_b, "B");
  const RealVector p = system.b_populations(transition, sigma_a, state);
  return mixture_distribution(p, transition.b, sigma_b, grid_b);
}

PointerDistribution unmeasured_distribution(const TwoTimeSystem& system,
                                            const Transition& transition, double sigma_b,
                                            const PointerGrid& grid_b, std::size_t state) {
  return reduced_distribution(system, transition, std::numeric_limits<double>::infinity(), sigma_b,
                              grid_b, state);
}

}  // namespace macroreal
