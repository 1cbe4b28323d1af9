#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "fixtures.hpp"
#include "macroreal/correlation.hpp"
#include "macroreal/protocol.hpp"
#include "macroreal/system.hpp"

using namespace macroreal;

namespace {

std::vector<double> log_sigmas(double lo, double hi, int count) {
  std::vector<double> s(count);
  for (int k = 0; k < count; ++k) s[k] = lo * std::pow(hi / lo, double(k) / (count - 1));
  return s;
}

struct Setup {
  fixtures::Levels l;
  TwoTimeSystem system;
  double d;
};

Setup random_setup(int n, std::uint64_t seed) {
  auto l = fixtures::random_levels(n, seed);
  TwoTimeSystem sys(l.h, l.a, l.b, l.psi);
  const double d = effective_dimension(l.psi, *l.a).value;
  return Setup{l, std::move(sys), d};
}

ProtocolOptions options_for(double d, double tau) {
  ProtocolOptions o;
  o.sigma_values = log_sigmas(1e-2 * d, 1e4 * d, 31);
  o.sigma_b = 0.1 * d;
  o.tau = tau;
  return o;
}

ComplexMatrix pair_sum(const ComplexMatrix& m) {
  const auto n = m.rows();
  const ComplexMatrix id = ComplexMatrix::Identity(n, n);
  ComplexMatrix out(n * n, n * n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      out.block(i * n, j * n, n, n) = m(i, j) * id + (i == j ? m : ComplexMatrix::Zero(n, n));
  return out;
}

}  // namespace

TEST(Protocol, GaussHermiteIntegratesMoments) {
  RealVector x, w;
  gauss_hermite(20, x, w);
  const double sqpi = std::sqrt(std::numbers::pi);
  EXPECT_NEAR(w.sum(), sqpi, 1e-13);
  EXPECT_NEAR(w.dot(x.cwiseAbs2()), 0.5 * sqpi, 1e-13);
  EXPECT_NEAR(w.dot(x.array().pow(4).matrix()), 0.75 * sqpi, 1e-12);
  EXPECT_NEAR(w.dot(x.array().pow(3).matrix()), 0.0, 1e-12);
}

TEST(Protocol, CharacteristicRouteMatchesDephasedAtSingleParticle) {
  auto s = random_setup(4, 3);
  const ReducedDistributions dist(s.system, 0.9, 0.1 * s.d);
  for (double r : {0.2, 1.0, 5.0, std::numeric_limits<double>::infinity()}) {
    const auto direct = dist.reduced(r * s.d);
    const auto fourier = dist.characteristic(r * s.d);
    EXPECT_LT(l1_distance(direct, fourier), 1e-8) << "sigma/d=" << r;
  }
}

TEST(Protocol, CharacteristicRouteMatchesExplicitPair) {
  auto s = random_setup(3, 21);
  const auto& l = s.l;
  auto h2 = fixtures::shared(HermitianObservable::dense("H2", "pair", pair_sum(l.h->dense_matrix())));
  auto a2 = fixtures::shared(HermitianObservable::dense("A2", "pair", 0.5 * pair_sum(l.a->dense_matrix())));
  auto b2 = fixtures::shared(HermitianObservable::dense("B2", "pair", 0.5 * pair_sum(l.b->dense_matrix())));
  ComplexVector psi2(9);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) psi2[3 * i + j] = l.psi.amplitudes[i] * l.psi.amplitudes[j];
  TwoTimeSystem pair(h2, a2, b2, QuantumState{psi2, "pair", 0.0});

  const double tau = 1.3, sb = 0.1 * s.d;
  const ReducedDistributions collective(s.system, tau, sb, 2.0);
  const ReducedDistributions explicit_pair(pair, tau, sb);
  ASSERT_TRUE(collective.grid() == explicit_pair.grid());
  for (double r : {0.3, 1.0, 4.0, std::numeric_limits<double>::infinity()}) {
    EXPECT_LT(l1_distance(collective.reduced(r * s.d), explicit_pair.reduced(r * s.d)), 1e-8)
        << "sigma/d=" << r;
  }
}

TEST(Protocol, EigenstateOfAIsMacrorealisticAtFirstSigma) {
  auto l = fixtures::random_levels(4, 5);
  l.psi.amplitudes = l.a->eigenvector(1);
  TwoTimeSystem sys(l.h, l.a, l.b, l.psi);
  auto o = options_for(1.0, 0.8);
  const auto rep = run_protocol(sys, o);
  ASSERT_TRUE(rep.iwm.sigma_threshold);
  EXPECT_EQ(*rep.iwm.threshold_index, 0u);
  ASSERT_TRUE(rep.nsit);
  EXPECT_LT(rep.nsit->l1_residual, 1e-10);
  EXPECT_LT(rep.nsit->factorization_gap, 1e-10);
  EXPECT_EQ(rep.verdict, Verdict::macrorealistic);
}

TEST(Protocol, SuperpositionIsNonMacrorealisticAtSingleParticle) {
  auto s = random_setup(3, 8);
  const auto rep = run_protocol(s.system, options_for(s.d, 0.8));
  ASSERT_TRUE(rep.iwm.sigma_threshold);
  EXPECT_GT(*rep.iwm.sigma_threshold, s.d);
  ASSERT_TRUE(rep.nsit);
  EXPECT_TRUE(rep.nsit->iwm_consistent.value_or(false));
  EXPECT_GT(rep.nsit->factorization_gap, 10 * rep.tolerances.eps_nsit);
  EXPECT_EQ(rep.verdict, Verdict::non_macrorealistic);
}

TEST(Protocol, VerdictStableUnderToleranceRescaling) {
  for (std::uint64_t seed : {8u, 12u}) {
    auto s = random_setup(3, seed);
    auto o = options_for(s.d, 0.8);
    const auto base = run_protocol(s.system, o).verdict;
    for (double f : {0.5, 2.0}) {
      o.tolerances = Tolerances{1e-4 * f, 1e-4 * f};
      EXPECT_EQ(run_protocol(s.system, o).verdict, base) << "seed=" << seed << " factor=" << f;
    }
  }
}

TEST(Protocol, RefusesNsitBelowThreshold) {
  auto s = random_setup(3, 8);
  auto o = options_for(s.d, 0.8);
  o.nsit_sigma = o.sigma_values.front();
  try {
    run_protocol(s.system, o);
    FAIL() << "expected refusal";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::refusal);
    EXPECT_NE(std::string(e.what()).find("IWM not established"), std::string::npos);
  }
}

TEST(Protocol, InconclusiveWhenScanNeverReachesIwm) {
  auto s = random_setup(3, 8);
  auto o = options_for(s.d, 0.8);
  o.sigma_values = log_sigmas(1e-2 * s.d, 1.0 * s.d, 9);
  const auto rep = run_protocol(s.system, o);
  EXPECT_FALSE(rep.iwm.sigma_threshold);
  EXPECT_FALSE(rep.nsit);
  EXPECT_EQ(rep.verdict, Verdict::inconclusive);
}

TEST(Protocol, ScanRejectsBadSigmaGrids) {
  auto s = random_setup(3, 8);
  const ReducedDistributions dist(s.system, 0.8, 0.1 * s.d);
  const std::vector<double> few{1, 10, 100, 1000};
  const std::vector<double> narrow{1, 2, 3, 4, 5};
  const std::vector<double> unsorted{1, 10, 5, 100, 1000};
  EXPECT_THROW(iwm_scan(dist, few, 1e-4), Error);
  EXPECT_THROW(iwm_scan(dist, narrow, 1e-4), Error);
  EXPECT_THROW(iwm_scan(dist, unsorted, 1e-4), Error);
}

TEST(Protocol, DeltaTableRegionsAndCollectiveDecay) {
  auto s = random_setup(3, 8);
  const DelaySlice slice = s.system.delay_slice(0.8);
  const double scale = correlation_scale(s.system, s.system.transition(0.8));
  const auto sig = log_sigmas(1e-2 * s.d, 1e4 * s.d, 13);
  const std::vector<double> ns{1, 10, 100, 1000, 10000};
  const auto t = delta_statistic(s.system, slice, sig, ns, Tolerances{}, scale);
  ASSERT_EQ(t.entries.size(), sig.size() * ns.size());
  EXPECT_EQ(t.entries[1].region, Region::contextual);
  EXPECT_EQ(t.entries[sig.size() - 1].region, Region::non_macrorealistic);
  // quantum-classical gap ~ 1/N deep in the weak regime
  const auto& power = t.fits.front();
  EXPECT_EQ(power.model, "power_law");
  EXPECT_NEAR(power.parameter, -1.0, 0.02);
  EXPECT_EQ(t.entries.back().region, Region::macrorealistic);
}
