#include "macroreal/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace macroreal {
namespace {

constexpr double kPointerCutoff = 9.0;  // exp(-81/2) beyond s = 9 / sigma_b

DecayFit fit_decay(const std::string& model, const std::vector<double>& x,
                   const std::vector<double>& logy) {
  DecayFit f;
  f.model = model;
  f.points = x.size();
  if (x.size() < 2) return f;
  const double m = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += logy[i];
    sxx += x[i] * x[i];
    sxy += x[i] * logy[i];
  }
  const double denom = m * sxx - sx * sx;
  if (denom == 0.0) return f;
  const double slope = (m * sxy - sx * sy) / denom;
  const double icpt = (sy - slope * sx) / m;
  double rss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = logy[i] - (icpt + slope * x[i]);
    rss += r * r;
  }
  f.intercept = icpt;
  f.rms_residual = std::sqrt(rss / m);
  f.parameter = model == "exponential" ? -slope : slope;
  return f;
}

void check_sigma_grid(std::span<const double> sigma) {
  require(sigma.size() >= 5, "IWM scan needs at least 5 sigma values");
  for (std::size_t k = 0; k < sigma.size(); ++k) {
    require(sigma[k] > 0 && std::isfinite(sigma[k]), "sigma values must be positive and finite");
    if (k > 0) require(sigma[k] > sigma[k - 1], "sigma values must be strictly increasing");
  }
  require(sigma.back() >= 100.0 * sigma.front(), "sigma values must span at least two decades");
}

}  // namespace

void gauss_hermite(int count, RealVector& nodes, RealVector& weights) {
  require(count >= 1, "Gauss-Hermite rule needs at least one node");
  RealMatrix jacobi = RealMatrix::Zero(count, count);
  for (int k = 1; k < count; ++k) {
    jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(0.5 * k);
  }
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(jacobi);
  nodes = es.eigenvalues();
  weights = std::sqrt(std::numbers::pi) * es.eigenvectors().row(0).transpose().cwiseAbs2();
}

ReducedDistributions::ReducedDistributions(const TwoTimeSystem& system, double tau, double sigma_b,
                                           double n, std::size_t state, int hermite_nodes)
    : system_(&system),
      transition_(system.transition(tau)),
      sigma_b_(sigma_b),
      n_(n),
      state_(state),
      hermite_nodes_(hermite_nodes) {
  require(sigma_b > 0 && std::isfinite(sigma_b), "sigma_b must be positive and finite");
  require(n >= 1 && std::isfinite(n), "particle number must be finite and >= 1");
  require(hermite_nodes >= 8, "at least 8 Gauss-Hermite nodes are required");
  grid_ = pointer_grid_for(transition_, sigma_b);
}

PointerDistribution ReducedDistributions::unmeasured() const {
  return reduced(std::numeric_limits<double>::infinity());
}

PointerDistribution ReducedDistributions::reduced(double sigma_a) const {
  require(sigma_a > 0, "sigma_a must be positive");
  if (n_ == 1.0) return reduced_distribution(*system_, transition_, sigma_a, sigma_b_, grid_, state_);
  return characteristic(sigma_a);
}

PointerDistribution ReducedDistributions::characteristic(double sigma_a) const {
  require(sigma_a > 0, "sigma_a must be positive");
  PointerDistribution d;
  d.y = grid_.points();
  d.weights = grid_.weights();
  d.sigma = sigma_b_;

  const RealVector& b = transition_.b;
  const double centre = 0.5 * (b[0] + b[b.size() - 1]);
  const RealVector shifted = (b.array() - centre).matrix();
  const double width = grid_.y_max() - grid_.y_min;
  const double ds = std::numbers::pi / width;
  const double s_max = kPointerCutoff / sigma_b_;
  const auto ns = static_cast<Eigen::Index>(std::ceil(s_max / ds)) + 1;

  RealVector nodes, weights;
  if (std::isinf(sigma_a)) {
    nodes = RealVector::Zero(1);
    weights = RealVector::Ones(1);
  } else {
    gauss_hermite(hermite_nodes_, nodes, weights);
    // k = x / (sqrt(2) sigma): variance 1/(4 sigma^2)
    nodes /= std::sqrt(2.0) * sigma_a;
    weights /= std::sqrt(std::numbers::pi);
  }

  ComplexVector chi = ComplexVector::Zero(ns);
  for (Eigen::Index q = 0; q < nodes.size(); ++q) {
    const RealVector p = system_->kicked_b_populations(transition_, nodes[q] / n_, state_);
    for (Eigen::Index m = 0; m < ns; ++m) {
      const double u = static_cast<double>(m) * ds / n_;
      Complex phi = 0.0;
      for (Eigen::Index j = 0; j < p.size(); ++j) phi += p[j] * std::polar(1.0, u * shifted[j]);
      chi[m] += weights[q] * std::pow(phi, n_);
    }
  }
  for (Eigen::Index m = 0; m < ns; ++m) {
    const double s = static_cast<double>(m) * ds;
    chi[m] *= std::exp(-0.5 * sigma_b_ * sigma_b_ * s * s);
  }
  const RealVector y = grid_.points();
  RealVector out(y.size());
#pragma omp parallel for schedule(static)
  for (Eigen::Index k = 0; k < y.size(); ++k) {
    const double yy = y[k] - centre;
    double sum = 0.5 * chi[0].real();
    for (Eigen::Index m = 1; m < ns; ++m) {
      sum += (std::polar(1.0, -static_cast<double>(m) * ds * yy) * chi[m]).real();
    }
    out[k] = sum * ds / std::numbers::pi;
  }
  d.density = std::move(out);
  return d;
}

IwmScan iwm_scan(const ReducedDistributions& distributions, std::span<const double> sigma_values,
                 double eps_iwm) {
  check_sigma_grid(sigma_values);
  require(eps_iwm > 0, "eps_iwm must be positive");
  IwmScan scan;
  const auto m = static_cast<Eigen::Index>(sigma_values.size());
  scan.sigma_values = Eigen::Map<const RealVector>(sigma_values.data(), m);
  scan.eps_iwm = eps_iwm;
  scan.n = distributions.n();
  scan.sigma_b = distributions.sigma_b();
  scan.tau = distributions.transition().tau;
  scan.reduced.resize(sigma_values.size());
#pragma omp parallel for schedule(dynamic)
  for (Eigen::Index k = 0; k < m; ++k) {
    scan.reduced[static_cast<std::size_t>(k)] = distributions.reduced(sigma_values[static_cast<std::size_t>(k)]);
  }
  scan.derivative_norms.resize(m - 1);
  scan.scaled_norms.resize(m - 1);
  for (Eigen::Index k = 0; k + 1 < m; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    const double l1 = l1_distance(scan.reduced[kk + 1], scan.reduced[kk]);
    scan.derivative_norms[k] = l1 / (sigma_values[kk + 1] - sigma_values[kk]);
    scan.scaled_norms[k] = scan.derivative_norms[k] * sigma_values[kk];
  }
  // smallest k after which every scaled norm stays below eps_iwm
  Eigen::Index first = m - 1;
  while (first > 0 && scan.scaled_norms[first - 1] < eps_iwm) --first;
  if (first < m - 1) {
    scan.threshold_index = static_cast<std::size_t>(first);
    scan.sigma_threshold = sigma_values[static_cast<std::size_t>(first)];
  }
  return scan;
}

double correlation_scale(const TwoTimeSystem& system, const Transition& transition,
                         std::size_t state) {
  const RealVector& b = system.b().eigenvalues();
  const RealVector q = (transition.full * system.coefficients(state)).cwiseAbs2();
  const double b2 = q.dot(b.cwiseAbs2());
  const double s = std::sqrt(system.mean_a2(state) * b2);
  return s > 0 ? s : 1.0;
}

NsitResult nsit_test(const ReducedDistributions& distributions, const DelaySlice& slice,
                     const IwmScan& scan, double sigma_a, double eps_nsit) {
  require(eps_nsit > 0, "eps_nsit must be positive");
  if (!scan.sigma_threshold) {
    fail(ErrorKind::refusal, "IWM not established: the sigma scan found no threshold, so NSIT "
                             "cannot separate invasiveness from non-macrorealism");
  }
  if (sigma_a < *scan.sigma_threshold * (1.0 - 1e-12)) {
    std::ostringstream msg;
    msg << "IWM not established at sigma_a = " << sigma_a << ": the detected threshold is "
        << *scan.sigma_threshold;
    fail(ErrorKind::refusal, msg.str());
  }
  const TwoTimeSystem& system = distributions.system();
  const std::size_t state = distributions.state();
  NsitResult r;
  r.sigma_a = sigma_a;
  r.sigma_b = distributions.sigma_b();
  r.n = distributions.n();
  r.eps_nsit = eps_nsit;
  r.l1_residual = l1_distance(distributions.unmeasured(), distributions.reduced(sigma_a));
  r.scale = correlation_scale(system, distributions.transition(), state);
  const double c = correlation_collective(system, slice, sigma_a, r.n, state).value;
  const double mb = mean_b_after(system, slice, sigma_a * r.n, state);
  r.factorization_gap = std::abs(c - system.mean_a(state) * mb) / r.scale;
  r.holds = r.l1_residual <= eps_nsit && r.factorization_gap <= eps_nsit;
  const auto& sv = scan.sigma_values;
  Eigen::Index k = 0;
  while (k < sv.size() && sv[k] < sigma_a * (1.0 - 1e-12)) ++k;
  k = std::min<Eigen::Index>(k, scan.scaled_norms.size() - 1);
  r.iwm_consistent = scan.scaled_norms[k] < scan.eps_iwm;
  return r;
}

std::string to_string(Region region) {
  switch (region) {
    case Region::contextual: return "contextual";
    case Region::macrorealistic: return "macrorealistic";
    case Region::non_macrorealistic: return "non-macrorealistic";
  }
  return "unknown";
}

std::string to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::macrorealistic: return "macrorealistic";
    case Verdict::non_macrorealistic: return "non-macrorealistic";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "unknown";
}

DeltaTable delta_statistic(const TwoTimeSystem& system, const DelaySlice& slice,
                           std::span<const double> sigma_values, std::span<const double> n_values,
                           const Tolerances& tolerances, double scale) {
  require(sigma_values.size() >= 2, "Delta statistic needs at least 2 sigma values");
  require(!n_values.empty(), "Delta statistic needs at least one N");
  require(scale > 0, "scale must be positive");
  std::vector<double> sig(sigma_values.begin(), sigma_values.end());
  std::vector<double> ns(n_values.begin(), n_values.end());
  std::sort(sig.begin(), sig.end());
  std::sort(ns.begin(), ns.end());
  require(std::adjacent_find(sig.begin(), sig.end()) == sig.end(), "sigma values must be unique");
  require(std::adjacent_find(ns.begin(), ns.end()) == ns.end(), "N values must be unique");

  DeltaTable t;
  t.scale = scale;
  t.tau = slice.tau;
  t.n_values = ns;
  const std::size_t m = sig.size();
  t.entries.resize(ns.size() * m);
  const double mean_a = system.mean_a();
  const auto total = static_cast<std::ptrdiff_t>(t.entries.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t idx = 0; idx < total; ++idx) {
    const auto u = static_cast<std::size_t>(idx);
    DeltaEntry& e = t.entries[u];
    e.n = ns[u / m];
    e.sigma = sig[u % m];
    e.correlation = correlation_collective(system, slice, e.sigma, e.n).value;
    e.mean_a = mean_a;
    e.mean_b = mean_b_after(system, slice, e.sigma * e.n);
    e.delta_qc = e.correlation - e.mean_a * e.mean_b;
  }
  for (std::size_t in = 0; in < ns.size(); ++in) {
    for (std::size_t k = 0; k < m; ++k) {
      DeltaEntry& e = t.entries[in * m + k];
      const double dc = k + 1 < m ? t.entries[in * m + k + 1].correlation - e.correlation
                                  : e.correlation - t.entries[in * m + k - 1].correlation;
      e.derivative_term = dc;
      e.delta = dc - e.delta_qc;
      if (std::abs(dc) / scale >= tolerances.eps_iwm) e.region = Region::contextual;
      else if (std::abs(e.delta) / scale < tolerances.eps_nsit) e.region = Region::macrorealistic;
      else e.region = Region::non_macrorealistic;
    }
    t.asymptotic_delta.push_back(t.entries[in * m + m - 1].delta);
  }
  std::vector<double> x_log, x_lin, y_log;
  for (std::size_t in = 0; in < ns.size(); ++in) {
    const double d = std::abs(t.asymptotic_delta[in]);
    if (d > 0 && std::isfinite(d)) {
      x_log.push_back(std::log(ns[in]));
      x_lin.push_back(ns[in]);
      y_log.push_back(std::log(d));
    }
  }
  t.fits.push_back(fit_decay("power_law", x_log, y_log));
  t.fits.push_back(fit_decay("exponential", x_lin, y_log));
  return t;
}

ProtocolReport run_protocol(const TwoTimeSystem& system, const ProtocolOptions& options) {
  ProtocolReport rep;
  rep.tolerances = options.tolerances;
  rep.tau = options.tau;
  rep.n = options.n;
  rep.d_eff = effective_dimension(system.initial_state(), system.a()).value;
  const ReducedDistributions dist(system, options.tau, options.sigma_b, options.n, 0,
                                  options.hermite_nodes);
  rep.iwm = iwm_scan(dist, options.sigma_values, options.tolerances.eps_iwm);
  const DelaySlice slice = system.delay_slice(dist.transition());
  const double scale = correlation_scale(system, dist.transition());
  std::vector<double> ns = options.delta_n_values;
  if (ns.empty()) ns.push_back(options.n);
  rep.delta = delta_statistic(system, slice, options.sigma_values, ns, options.tolerances, scale);
  if (!rep.iwm.sigma_threshold && !options.nsit_sigma) {
    rep.verdict = Verdict::inconclusive;
    return rep;
  }
  const double sigma_nsit = options.nsit_sigma.value_or(rep.iwm.sigma_threshold.value_or(0.0));
  rep.nsit = nsit_test(dist, slice, rep.iwm, sigma_nsit, options.tolerances.eps_nsit);
  rep.verdict = rep.nsit->holds ? Verdict::macrorealistic : Verdict::non_macrorealistic;
  return rep;
}

}  // namespace macroreal
