#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "fixtures.hpp"
#include "macroreal/correlation.hpp"
#include "macroreal/measurement.hpp"
#include "macroreal/system.hpp"

using namespace macroreal;

namespace {

double norm_const(double sigma) { return std::pow(2 * std::numbers::pi * sigma * sigma, -0.25); }

// Kraus operator as an explicit matrix in the input basis
ComplexMatrix kraus_matrix(const HermitianObservable& a, double y, double sigma) {
  RealVector d(a.eigenvalues().size());
  for (Eigen::Index i = 0; i < d.size(); ++i) d[i] = kraus_amplitude(y, a.eigenvalues()[i], sigma);
  const ComplexMatrix v = a.eigenvector_matrix();
  return v * d.cast<Complex>().asDiagonal() * v.adjoint();
}

}  // namespace

TEST(Measurement, KrausAmplitude) {
  const double s = 0.7;
  EXPECT_DOUBLE_EQ(kraus_amplitude(1.3, 1.3, s), norm_const(s));
  EXPECT_NEAR(kraus_amplitude(1.3 + 2 * s, 1.3, s), norm_const(s) * std::exp(-1.0), 1e-15);
  const auto g = make_pointer_grid(1.3, 1.3, s);
  const RealVector y = g.points(), w = g.weights();
  double mass = 0, first = 0;
  for (Eigen::Index k = 0; k < y.size(); ++k) {
    const double om = kraus_amplitude(y[k], 1.3, s);
    mass += w[k] * om * om;
    first += w[k] * y[k] * om * om;
  }
  EXPECT_NEAR(mass, 1.0, 1e-10);
  EXPECT_NEAR(first, 1.3, 1e-8);
  EXPECT_THROW(kraus_amplitude(0, 0, 0.0), Error);
  EXPECT_THROW(kraus_amplitude(0, 0, -1.0), Error);
}

TEST(Measurement, PostMeasurementStateMatchesKrausMatrix) {
  auto l = fixtures::random_levels(3, 31);
  const auto m = make_measurement(l.a, 1.0);
  const auto out = post_measurement_state(l.psi, m, 0.0);
  const ComplexVector expected = kraus_matrix(*l.a, 0.0, 1.0) * l.psi.amplitudes;
  EXPECT_LT((out.amplitudes - expected).norm(), 1e-14);
  // eigenbasis amplitudes c_i A exp(-a_i^2/4)
  const ComplexVector c = l.a->to_eigenbasis(l.psi.amplitudes);
  const ComplexVector co = l.a->to_eigenbasis(out.amplitudes);
  for (Eigen::Index i = 0; i < 3; ++i) {
    const double ai = l.a->eigenvalues()[i];
    EXPECT_LT(std::abs(co[i] - c[i] * norm_const(1.0) * std::exp(-ai * ai / 4)), 1e-14);
  }
}

TEST(Measurement, PostMeasurementNormIsDensity) {
  auto l = fixtures::random_levels(4, 32);
  const auto m = make_measurement(l.a, 0.4);
  const auto d = pointer_distribution(l.psi, m);
  for (Eigen::Index k : {Eigen::Index(3), d.y.size() / 3, d.y.size() / 2}) {
    EXPECT_NEAR(post_measurement_state(l.psi, m, d.y[k]).norm_squared(), d.density[k], 1e-14);
  }
}

TEST(Measurement, EigenstateIsUnchangedUpToScale) {
  auto l = fixtures::random_levels(4, 33);
  const QuantumState e{l.a->eigenvector(2), "levels", 0.0};
  const auto m = make_measurement(l.a, 0.3);
  const double a2 = l.a->eigenvalues()[2];
  for (double shift : {-2.0, 0.0, 1.0, 3.0}) {
    const auto out = post_measurement_state(e, m, a2 + shift * 0.3);
    EXPECT_NEAR(std::abs(out.amplitudes.normalized().dot(e.amplitudes)), 1.0, 1e-12);
  }
}

TEST(Measurement, ProjectiveLimitFidelityIsMonotone) {
  auto l = fixtures::random_levels(4, 34);
  const RealVector& a = l.a->eigenvalues();
  double gap = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 1; i < a.size(); ++i) gap = std::min(gap, a[i] - a[i - 1]);
  // 1 - fidelity with |a_k>, from the weight outside a_k (no cancellation)
  const auto deficit = [&](Eigen::Index k, double f) {
    const auto out = post_measurement_state(l.psi, make_measurement(l.a, f * gap), a[k]);
    const RealVector w = l.a->to_eigenbasis(out.amplitudes).cwiseAbs2();
    return (w.sum() - w[k]) / w.sum();
  };
  for (Eigen::Index k = 0; k < 4; ++k) {
    const double d1 = deficit(k, 1.0), d2 = deficit(k, 0.1), d3 = deficit(k, 0.01);
    EXPECT_LT(d2, d1) << k;
    EXPECT_LE(d3, d2) << k;
    EXPECT_LT(d3, 1e-12) << k;
  }
}

TEST(Measurement, CompletenessAndCalibrationOnRandomStates) {
  std::mt19937_64 rng(77);
  auto a = fixtures::shared(HermitianObservable::dense("A", "levels", fixtures::random_hermitian(5, rng)));
  for (double sigma : {0.05, 0.8, 6.0}) {
    const auto m = make_measurement(a, sigma);
    for (int trial = 0; trial < 100; ++trial) {
      const QuantumState psi{fixtures::random_state(5, rng), "levels", 0.0};
      const auto d = pointer_distribution(psi, m);
      ASSERT_NEAR(d.integral(), 1.0, 1e-8);
      ASSERT_NEAR(d.mean(), a->expectation(psi.amplitudes), 1e-8);
      ASSERT_GE(d.density.minCoeff(), 0.0);
    }
  }
}

TEST(Measurement, EigenstateAndBimodalShapes) {
  auto a = fixtures::shared(HermitianObservable::diagonal("A", "q", RealVector{{-1.0, 1.0}}));
  const QuantumState up{ComplexVector{{0.0, 1.0}}, "q", 0.0};
  const auto m = make_measurement(a, 0.1);
  const auto d = pointer_distribution(up, m);
  const double var = d.weights.dot((d.y.array() - 1.0).square().matrix().cwiseProduct(d.density));
  EXPECT_NEAR(d.mean(), 1.0, 1e-10);
  EXPECT_NEAR(std::sqrt(var), 0.1, 1e-8);

  const QuantumState both{ComplexVector{{1.0, 1.0}} / std::sqrt(2.0), "q", 0.0};
  const auto b = pointer_distribution(both, m);
  Eigen::Index left, right, mid;
  (b.y.array() + 1.0).abs().minCoeff(&left);
  (b.y.array() - 1.0).abs().minCoeff(&right);
  b.y.cwiseAbs().minCoeff(&mid);
  EXPECT_GT(b.density[left], b.density[left - 3]);
  EXPECT_GT(b.density[left], b.density[left + 3]);
  EXPECT_GT(b.density[right], b.density[right + 3]);
  EXPECT_GT(b.density[left], 1e6 * b.density[mid]);
}

TEST(Measurement, CoverageIsEnforced) {
  auto l = fixtures::random_levels(3, 35);
  auto m = make_measurement(l.a, 0.5);
  m.grid = make_pointer_grid(0.0, 0.1, 0.05);
  try {
    pointer_distribution(l.psi, m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::regime);
  }
}

TEST(Measurement, TwoTimeStateReducesAtZeroDelay) {
  auto l = fixtures::random_levels(3, 36);
  const auto ma = make_measurement(l.a, 0.6);
  const auto mb = make_measurement(l.a, 0.9);
  const Propagator prop(l.h, 0.0);
  const double ya = 0.4, yb = -0.3;
  const auto two = two_time_state(l.psi, ma, prop, mb, ya, yb);
  const ComplexVector expected = kraus_matrix(*l.a, yb, 0.9) * kraus_matrix(*l.a, ya, 0.6) * l.psi.amplitudes;
  EXPECT_LT((two.amplitudes - expected).norm(), 1e-14);
}

TEST(Measurement, JointDensityMatchesTwoTimeState) {
  auto l = fixtures::random_levels(3, 37);
  const auto ma = make_measurement(l.a, 0.5);
  const auto mb = make_measurement(l.b, 0.7);
  const Propagator prop(l.h, 1.1);
  const auto j = joint_distribution(l.psi, ma, prop, mb);
  for (auto [k, q] : {std::pair<Eigen::Index, Eigen::Index>{10, 20}, {j.y_a.size() / 2, j.y_b.size() / 3},
                      {j.y_a.size() / 3, j.y_b.size() / 2}}) {
    const double lit = two_time_state(l.psi, ma, prop, mb, j.y_a[k], j.y_b[q]).norm_squared();
    EXPECT_NEAR(j.density(k, q), lit, 1e-12 * std::max(lit, 1e-3));
  }
}

TEST(Measurement, JointNormalizationAndFirstMarginal) {
  for (int n : {3, 5}) {
    auto l = fixtures::random_levels(n, 40 + n);
    for (double sa : {0.2, 1.0, 4.0}) {
      for (double tau : {0.0, 0.9}) {
        const auto ma = make_measurement(l.a, sa);
        const auto mb = make_measurement(l.b, 0.5);
        const auto j = joint_distribution(l.psi, ma, Propagator(l.h, tau), mb);
        EXPECT_NEAR(j.integral(), 1.0, 1e-7);
        EXPECT_GE(j.density.minCoeff(), 0.0);
        const auto single = pointer_distribution(l.psi, ma);
        EXPECT_LT((j.marginal_a() - single.density).cwiseAbs().maxCoeff(), 1e-7);
        EXPECT_NEAR(reduced_distribution(j).integral(), 1.0, 1e-7);
      }
    }
  }
}

TEST(Measurement, EigenstateFactorizesAndSatisfiesNoSignaling) {
  auto l = fixtures::random_levels(4, 50);
  const QuantumState e{l.a->eigenvector(1), "levels", 0.0};
  const Propagator prop(l.h, 0.8);
  for (double sa : {0.1, 1.0, 10.0}) {
    const auto ma = make_measurement(l.a, sa);
    const auto mb = make_measurement(l.b, 0.4);
    const auto j = joint_distribution(e, ma, prop, mb);
    const RealMatrix product = j.marginal_a() * j.marginal_b().transpose();
    EXPECT_LT((j.density - product).cwiseAbs().maxCoeff(), 1e-9);

    SystemOptions opts;
    opts.population_tail = 0.0;
    const TwoTimeSystem sys(l.h, l.a, l.b, e, opts);
    const auto tr = sys.transition(0.8);
    const auto unmeasured = unmeasured_distribution(sys, tr, 0.4, mb.grid);
    EXPECT_LT(l1_distance(reduced_distribution(j), unmeasured), 1e-7);
  }
}

TEST(Measurement, DephasedRouteMatchesJointMarginal) {
  auto l = fixtures::random_levels(4, 51);
  SystemOptions opts;
  opts.population_tail = 0.0;
  const TwoTimeSystem sys(l.h, l.a, l.b, l.psi, opts);
  const auto tr = sys.transition(1.7);
  for (double sa : {0.2, 1.0, 5.0}) {
    const auto grid_a = make_pointer_grid(l.a->eigenvalues()[0], l.a->eigenvalues()[3], sa);
    const auto grid_b = make_pointer_grid(l.b->eigenvalues()[0], l.b->eigenvalues()[3], 0.3);
    const auto j = joint_distribution(sys, tr, sa, 0.3, grid_a, grid_b);
    const auto dephased = reduced_distribution(sys, tr, sa, 0.3, grid_b);
    EXPECT_LT(l1_distance(reduced_distribution(j), dephased), 1e-8) << sa;
  }
}

TEST(Measurement, DoubleWellSignalsAtStrongCoupling) {
  const auto w = fixtures::small_double_well();
  const TwoTimeSystem sys(w.h, w.x, w.x, w.ground);
  const double d = effective_dimension(w.ground, *w.x).value;
  const auto tr = sys.transition(33.3 * std::numbers::pi);
  const double sb = d / 10;
  const auto grid = pointer_grid_for(tr, sb);
  const auto measured = reduced_distribution(sys, tr, d / 10, sb, grid);
  const auto free = unmeasured_distribution(sys, tr, sb, grid);
  const double l1 = l1_distance(measured, free);
  RecordProperty("l1_at_deff_over_10", std::to_string(l1));
  EXPECT_GT(l1, 1e-3);
  EXPECT_LE(l1, 2.0);
  EXPECT_NEAR(measured.integral(), 1.0, 1e-8);
  EXPECT_NEAR(free.integral(), 1.0, 1e-8);
}
