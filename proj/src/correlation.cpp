#include "macroreal/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "macroreal/kernels.hpp"

namespace macroreal {
namespace {

double relative_imag(Complex sum, double magnitude) {
  return std::abs(sum.imag()) / std::max(magnitude, std::numeric_limits<double>::min());
}

// (1/2) sum_{i,j} (w_i + w_j) c_j* G_ij c_i B_ji; real for Hermitian B.
Complex weighted_trace(const RealVector& w, const ComplexVector& c, const RealMatrix& g,
                       const ComplexMatrix& heis, double* magnitude) {
  const Eigen::Index k = c.size();
  Complex sum = 0.0;
  double mag = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      const Complex term = 0.5 * (w[i] + w[j]) * std::conj(c[j]) * g(i, j) * c[i] * heis(j, i);
      sum += term;
      mag += std::abs(term);
    }
  }
  if (magnitude) *magnitude = mag;
  return sum;
}

void check_slice(const TwoTimeSystem& system, const DelaySlice& slice) {
  const auto k = static_cast<Eigen::Index>(system.a_values().size());
  require(slice.heisenberg.rows() == k && slice.heisenberg.cols() == k,
          "delay slice does not match the system's retained basis");
}

double degeneracy_tol(const TwoTimeSystem& system) {
  return system.a().spectrum().degeneracy_tolerance;
}

}  // namespace

std::string to_string(CorrelationMethod method) {
  switch (method) {
    case CorrelationMethod::brute_force: return "brute_force";
    case CorrelationMethod::closed_form: return "closed_form";
    case CorrelationMethod::many_body: return "many_body";
    case CorrelationMethod::collective: return "collective";
    case CorrelationMethod::iwm_limit: return "iwm_limit";
    case CorrelationMethod::projective_limit: return "projective_limit";
  }
  return "unknown";
}

CorrelationResult correlation_brute_force(const JointDistribution& joint) {
  CorrelationResult r;
  r.value = joint.y_a.cwiseProduct(joint.w_a).dot(joint.density * joint.y_b.cwiseProduct(joint.w_b));
  r.sigma_a = joint.sigma_a;
  r.sigma_b = joint.sigma_b;
  r.t = joint.t;
  r.tau = joint.tau;
  r.method = CorrelationMethod::brute_force;
  return r;
}

CorrelationResult correlation_closed_form(const TwoTimeSystem& system, const DelaySlice& slice,
                                          double sigma_a) {
  require(sigma_a >= 0, "sigma_a must be non-negative");
  check_slice(system, slice);
  const RealVector& a = system.a_values();
  const RealMatrix g = kernels::dephasing_kernel(a, sigma_a, degeneracy_tol(system));
  double mag = 0.0;
  const Complex sum = weighted_trace(a, system.coefficients(), g, slice.heisenberg, &mag);
  CorrelationResult r;
  r.value = sum.real();
  r.imag_residue = relative_imag(sum, mag);
  r.sigma_a = sigma_a;
  r.t = system.initial_state().time;
  r.tau = slice.tau;
  r.method = CorrelationMethod::closed_form;
  r.truncation = system.truncation();
  return r;
}

CorrelationResult correlation_closed_form(const TwoTimeSystem& system, double sigma_a, double tau) {
  return correlation_closed_form(system, system.delay_slice(tau), sigma_a);
}

CorrelationResult correlation_closed_form(const QuantumState& state,
                                          std::shared_ptr<const HermitianObservable> a,
                                          std::shared_ptr<const HermitianObservable> b,
                                          const Propagator& prop, double sigma_a) {
  require(sigma_a > 0 && std::isfinite(sigma_a), "sigma_a must be positive and finite");
  const TwoTimeSystem system(prop.hamiltonian, std::move(a), std::move(b), state);
  return correlation_closed_form(system, sigma_a, prop.tau);
}

double mean_b_after(const TwoTimeSystem& system, const DelaySlice& slice, double sigma_a,
                    std::size_t state) {
  check_slice(system, slice);
  const RealVector& a = system.a_values();
  const RealMatrix g = kernels::dephasing_kernel(a, sigma_a, degeneracy_tol(system));
  const RealVector ones = RealVector::Ones(a.size());
  return weighted_trace(ones, system.coefficients(state), g, slice.heisenberg, nullptr).real();
}

CorrelationResult correlation_iwm_limit(const TwoTimeSystem& system, double tau) {
  const Propagator prop(system.hamiltonian_ptr(), tau);
  const ComplexVector& psi = system.initial_state().amplitudes;
  const ComplexVector v = prop.apply(psi);
  const ComplexVector w = prop.apply(system.a().apply(psi));
  const Complex z = w.dot(system.b().apply(v));
  CorrelationResult r;
  r.value = z.real();
  r.sigma_a = std::numeric_limits<double>::infinity();
  r.t = system.initial_state().time;
  r.tau = tau;
  r.method = CorrelationMethod::iwm_limit;
  r.truncation.a_retained = r.truncation.a_total = system.dimension();
  r.truncation.energy_retained = r.truncation.energy_total = system.dimension();
  return r;
}

CorrelationResult correlation_projective_limit(const TwoTimeSystem& system, double tau) {
  const Transition tr = system.transition(tau);
  const RealVector& a = system.a_values();
  const RealVector& b = system.b().eigenvalues();
  const ComplexVector c = system.coefficients();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    // <a_i| B(tau) |a_i> = sum_j b_j |c_{j,i}|^2
    const double bi = tr.full.col(i).cwiseAbs2().dot(b);
    sum += a[i] * std::norm(c[i]) * bi;
  }
  CorrelationResult r;
  r.value = sum;
  r.sigma_a = 0.0;
  r.t = system.initial_state().time;
  r.tau = tau;
  r.method = CorrelationMethod::projective_limit;
  r.truncation = system.truncation();
  return r;
}

CorrelationResult correlation_many_body(const TwoTimeSystem& system, const ManyBodySpec& spec,
                                        const DelaySlice& slice, double sigma_a,
                                        std::size_t max_dimension) {
  require(spec.n >= 1, "particle number must be at least 1");
  require(spec.factors.size() == 1 || spec.factors.size() == spec.n,
          "many-body factors must be one shared state or one per particle");
  for (std::size_t f : spec.factors) require(f < system.state_count(), "factor index out of range");
  check_slice(system, slice);
  const RealVector& a = system.a_values();
  const auto k = static_cast<std::size_t>(a.size());
  const std::size_t n = spec.n;
  double dim_d = std::pow(static_cast<double>(k), static_cast<double>(n));
  if (dim_d > static_cast<double>(max_dimension)) {
    std::ostringstream msg;
    msg << "product basis dimension " << k << "^" << n << " exceeds the cap " << max_dimension
        << "; lower N, raise the population tail, or use the collective formula";
    fail(ErrorKind::regime, msg.str());
  }
  const auto dim = static_cast<std::size_t>(dim_d);
  std::vector<ComplexVector> coeff;
  for (std::size_t xi = 0; xi < n; ++xi) coeff.push_back(system.coefficients(spec.factor(xi)));

  // product amplitudes c_I and eigenvalue sums S_I over multi-indices
  std::vector<Complex> c_prod(dim);
  std::vector<double> s_sum(dim);
  std::vector<std::size_t> digits(n, 0);
  for (std::size_t idx = 0; idx < dim; ++idx) {
    Complex c = 1.0;
    double s = 0.0;
    for (std::size_t nu = 0; nu < n; ++nu) {
      c *= coeff[nu][static_cast<Eigen::Index>(digits[nu])];
      s += a[static_cast<Eigen::Index>(digits[nu])];
    }
    c_prod[idx] = c;
    s_sum[idx] = s;
    for (std::size_t nu = 0; nu < n; ++nu) {
      if (++digits[nu] < k) break;
      digits[nu] = 0;
    }
  }
  std::vector<std::size_t> stride(n, 1);
  for (std::size_t nu = 1; nu < n; ++nu) stride[nu] = stride[nu - 1] * k;

  const double nn = static_cast<double>(n);
  const bool projective = sigma_a == 0.0;
  const bool ideal = std::isinf(sigma_a);
  const double inv = ideal || projective ? 0.0 : 1.0 / (8.0 * sigma_a * sigma_a * nn * nn);
  const double tol = degeneracy_tol(system) * nn;
  Complex sum = 0.0;
  double mag = 0.0;
  for (std::size_t idx = 0; idx < dim; ++idx) {
    const Complex ci = c_prod[idx];
    if (ci == 0.0) continue;
    std::size_t rest = idx;
    for (std::size_t nu = 0; nu < n; ++nu) {
      const std::size_t inu = rest % k;
      rest /= k;
      const std::size_t base = idx - inu * stride[nu];
      for (std::size_t j = 0; j < k; ++j) {
        // J differs from I at most in slot nu; <J|B(tau)|I> = B_{j,i_nu} / N
        const std::size_t jdx = base + j * stride[nu];
        const double ds = s_sum[idx] - s_sum[jdx];
        double damp = 1.0;
        if (projective) damp = std::abs(ds) <= tol ? 1.0 : 0.0;
        else if (!ideal) damp = std::exp(-ds * ds * inv);
        const Complex bji = slice.heisenberg(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(inu)) / nn;
        const Complex term = 0.5 * (s_sum[idx] + s_sum[jdx]) / nn * std::conj(c_prod[jdx]) * damp * ci * bji;
        sum += term;
        mag += std::abs(term);
      }
    }
  }
  CorrelationResult r;
  r.value = sum.real();
  r.imag_residue = relative_imag(sum, mag);
  r.sigma_a = sigma_a;
  r.t = system.initial_state().time;
  r.tau = slice.tau;
  r.method = CorrelationMethod::many_body;
  r.truncation = system.truncation();
  return r;
}

double many_body_dense(const RealVector& a_single, std::size_t n, const ComplexVector& c,
                       const ComplexMatrix& heisenberg, double sigma_a) {
  const auto k = static_cast<std::size_t>(a_single.size());
  const auto dim = static_cast<Eigen::Index>(std::pow(static_cast<double>(k), static_cast<double>(n)) + 0.5);
  require(c.size() == dim && heisenberg.rows() == dim && heisenberg.cols() == dim,
          "many-body dimensions do not match k^N");
  RealVector s(dim);
  for (Eigen::Index idx = 0; idx < dim; ++idx) {
    auto rest = static_cast<std::size_t>(idx);
    double sum = 0.0;
    for (std::size_t nu = 0; nu < n; ++nu) {
      sum += a_single[static_cast<Eigen::Index>(rest % k)];
      rest /= k;
    }
    s[idx] = sum;
  }
  const double nn = static_cast<double>(n);
  RealMatrix g(dim, dim);
  for (Eigen::Index j = 0; j < dim; ++j)
    for (Eigen::Index i = 0; i < dim; ++i) {
      const double d = s[i] - s[j];
      g(i, j) = std::isinf(sigma_a) ? 1.0 : std::exp(-d * d / (8.0 * sigma_a * sigma_a * nn * nn));
    }
  Complex total = 0.0;
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = 0; j < dim; ++j)
      total += s[i] / nn * std::conj(c[j]) * g(i, j) * c[i] * heisenberg(j, i);
  return total.real();
}

CorrelationResult correlation_collective(const TwoTimeSystem& system, const DelaySlice& slice,
                                         double sigma_a, double n, std::size_t state) {
  require(n >= 1 && std::isfinite(n), "particle number must be finite and >= 1");
  require(sigma_a >= 0, "sigma_a must be non-negative");
  check_slice(system, slice);
  const RealVector& a = system.a_values();
  const double mean = system.mean_a(state);
  const RealMatrix g = kernels::dephasing_kernel(a, sigma_a * n, degeneracy_tol(system));
  const RealVector w = (a.array() + (n - 1.0) * mean).matrix();
  double mag = 0.0;
  const Complex sum = weighted_trace(w, system.coefficients(state), g, slice.heisenberg, &mag);
  CorrelationResult r;
  r.value = sum.real() / n;
  r.imag_residue = relative_imag(sum, mag);
  r.sigma_a = sigma_a;
  r.t = system.initial_state(state).time;
  r.tau = slice.tau;
  r.method = CorrelationMethod::collective;
  r.truncation = system.truncation();
  return r;
}

EffectiveDimension effective_dimension(const QuantumState& state, const HermitianObservable& a,
                                       double occupation_threshold) {
  require(occupation_threshold > 0 && occupation_threshold < 1,
          "occupation threshold must lie in (0, 1)");
  require(state.basis == a.basis(), "state and observable bases differ");
  const RealVector pop = a.to_eigenbasis(state.amplitudes).cwiseAbs2();
  const RealVector& values = a.eigenvalues();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(pop.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) { return pop[x] > pop[y]; });
  const double target = (1.0 - occupation_threshold) * pop.sum();
  double cum = 0.0;
  EffectiveDimension d;
  d.occupation_threshold = occupation_threshold;
  d.lower = std::numeric_limits<double>::infinity();
  d.upper = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i : order) {
    d.lower = std::min(d.lower, values[i]);
    d.upper = std::max(d.upper, values[i]);
    cum += pop[i];
    if (cum >= target) break;
  }
  d.value = d.upper - d.lower;
  return d;
}

std::string to_string(ExpansionVariant variant) {
  switch (variant) {
    case ExpansionVariant::as_printed: return "as_printed";
    case ExpansionVariant::roles_swapped: return "roles_swapped";
    case ExpansionVariant::derived: return "derived";
  }
  return "unknown";
}

const BackactionCheck& BackactionReport::variant(ExpansionVariant v) const {
  for (const auto& c : checks)
    if (c.variant == v) return c;
  fail(ErrorKind::invalid_argument, "expansion variant not evaluated");
}

namespace {

// 1 - |<e|x>|^2 / (|e|^2 |x|^2) from the perpendicular residual, free of cancellation.
double fidelity_deficit(const ComplexVector& e, const ComplexVector& x) {
  const ComplexVector eh = e.normalized();
  const ComplexVector xh = x.normalized();
  const ComplexVector perp = xh - eh * eh.dot(xh);
  return perp.squaredNorm();
}

}  // namespace

BackactionReport backaction_first_order(const QuantumState& state, const MeasurementModel& model_a,
                                        const Propagator& prop, const MeasurementModel& model_b,
                                        double y_a, double y_b, double min_ratio) {
  BackactionReport rep;
  const auto& a = *model_a.observable;
  const auto& b = *model_b.observable;
  rep.d_eff = effective_dimension(state, a).value;
  const double sa = model_a.sigma, sb = model_b.sigma;
  if (sa < min_ratio * rep.d_eff || sb < min_ratio * rep.d_eff) {
    std::ostringstream msg;
    msg << "first-order expansion needs sigma_A, sigma_B >= " << min_ratio << " d_eff = "
        << min_ratio * rep.d_eff << " (got " << sa << ", " << sb << ")";
    fail(ErrorKind::regime, msg.str());
  }
  rep.exact = two_time_state(state, model_a, prop, model_b, y_a, y_b).amplitudes;
  const double pref = kraus_amplitude(y_a, 0.0, sa) * kraus_amplitude(y_b, 0.0, sb);
  const ComplexVector v = prop.apply(state.amplitudes);               // |psi(tau)>
  const ComplexVector w = prop.apply(a.apply(state.amplitudes));      // U A |psi>
  auto make = [&](ExpansionVariant var) {
    ComplexVector inner, out;
    switch (var) {
      case ExpansionVariant::derived:
        inner = v + (y_a / (2.0 * sa * sa)) * w;
        out = inner + (y_b / (2.0 * sb * sb)) * b.apply(inner);
        break;
      case ExpansionVariant::as_printed:
        inner = v - (y_b / (sb * sb)) * w;
        out = inner - (y_a / (sa * sa)) * b.apply(inner);
        break;
      case ExpansionVariant::roles_swapped:
        inner = v - (y_a / (sa * sa)) * w;
        out = inner - (y_b / (sb * sb)) * b.apply(inner);
        break;
    }
    BackactionCheck c;
    c.variant = var;
    c.approximant = pref * out;
    c.deficit = fidelity_deficit(rep.exact, c.approximant);
    c.fidelity = 1.0 - c.deficit;
    return c;
  };
  rep.checks = {make(ExpansionVariant::as_printed), make(ExpansionVariant::roles_swapped),
                make(ExpansionVariant::derived)};
  return rep;
}

double intensive_variance(const std::vector<QuantumState>& factors, const HermitianObservable& a,
                          std::size_t n) {
  require(n >= 1, "particle number must be at least 1");
  require(factors.size() == 1 || factors.size() == n,
          "intensive variance needs one shared factor or one per particle");
  const RealVector& values = a.eigenvalues();
  double sum = 0.0;
  for (std::size_t xi = 0; xi < n; ++xi) {
    const QuantumState& f = factors.size() == 1 ? factors[0] : factors[xi];
    require(std::abs(f.norm_squared() - 1.0) < 1e-8, "factor state is not normalized");
    const RealVector pop = a.to_eigenbasis(f.amplitudes).cwiseAbs2();
    const double m = pop.dot(values);
    sum += pop.dot((values.array() - m).square().matrix());
    if (factors.size() == 1) {
      sum *= static_cast<double>(n);
      break;
    }
  }
  const double nn = static_cast<double>(n);
  return sum / (nn * nn);
}

}  // namespace macroreal
