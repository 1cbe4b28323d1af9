#include "macroreal/system.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>
#include <variant>

#include "macroreal/kernels.hpp"

namespace macroreal {
namespace {

template <typename S>
using Mat = kernels::Matrix<S>;
template <typename S>
using Vec = kernels::Vector<S>;

constexpr double kNormTolerance = 1e-8;

template <typename S>
Mat<S> eigenvectors_as(const HermitianObservable& o) {
  if constexpr (std::is_same_v<S, double>) {
    const auto& s = o.spectrum();
    if (o.is_diagonal()) {
      const auto n = static_cast<Eigen::Index>(o.dimension());
      RealMatrix v = RealMatrix::Zero(n, n);
      for (Eigen::Index k = 0; k < n; ++k) v(static_cast<Eigen::Index>(s.order[k]), k) = 1.0;
      return v;
    }
    return s.real_vectors;
  } else {
    return o.eigenvector_matrix();
  }
}

template <typename S>
Vec<S> cast_state(const ComplexVector& v) {
  if constexpr (std::is_same_v<S, double>) {
    return v.real();
  } else {
    return v;
  }
}

// <n|t_k> for the energy eigenbasis n and the target eigenvectors listed in cols.
template <typename S>
Mat<S> basis_change(const Mat<S>& vh, const HermitianObservable& target,
                    const std::vector<std::size_t>& cols) {
  if (target.is_diagonal()) {
    const auto& order = target.spectrum().order;
    std::vector<Eigen::Index> rows(cols.size());
    for (std::size_t k = 0; k < cols.size(); ++k) rows[k] = static_cast<Eigen::Index>(order[cols[k]]);
    return vh(rows, Eigen::all).adjoint();
  }
  const Mat<S> w = eigenvectors_as<S>(target);
  std::vector<Eigen::Index> idx(cols.begin(), cols.end());
  return vh.adjoint() * w(Eigen::all, idx);
}

// Indices kept after dropping the smallest weights while their sum stays <= tail.
std::vector<std::size_t> retain_by_weight(const RealVector& w, double tail, double* dropped) {
  const auto n = static_cast<std::size_t>(w.size());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return w[static_cast<Eigen::Index>(x)] < w[static_cast<Eigen::Index>(y)];
  });
  double sum = 0.0;
  std::size_t cut = 0;
  while (cut < n && sum + w[static_cast<Eigen::Index>(order[cut])] <= tail) {
    sum += w[static_cast<Eigen::Index>(order[cut])];
    ++cut;
  }
  if (cut == n) {
    // keep at least the heaviest entry
    --cut;
    sum -= w[static_cast<Eigen::Index>(order[cut])];
  }
  std::vector<std::size_t> kept(order.begin() + static_cast<std::ptrdiff_t>(cut), order.end());
  std::sort(kept.begin(), kept.end());
  if (dropped) *dropped = std::max(sum, 0.0);
  return kept;
}

template <typename S>
struct Frame {
  RealVector a_values;
  std::vector<std::size_t> a_indices;
  std::vector<Vec<S>> c;
  double a_tail = 0.0;
  std::vector<double> mean_a, mean_a2;
  RealVector energies;
  Mat<S> t;  // n_E x K_A
  Mat<S> q;  // n_B x n_E
  RealVector b_values;
  double degeneracy_tol = 0.0;

  mutable std::once_flag be_once;
  mutable Mat<S> be;  // n_E x n_E

  const Mat<S>& b_energy() const {
    std::call_once(be_once, [this] { be = q.adjoint() * b_values.asDiagonal() * q; });
    return be;
  }
};

template <typename S>
std::unique_ptr<Frame<S>> build_frame(const HermitianObservable& h, const HermitianObservable& a,
                                      const HermitianObservable& b,
                                      const std::vector<QuantumState>& states,
                                      const SystemOptions& options) {
  auto f = std::make_unique<Frame<S>>();
  const auto n = a.dimension();
  const auto nn = static_cast<Eigen::Index>(n);

  // full A coordinates and populations
  std::vector<ComplexVector> full;
  RealVector weight = RealVector::Zero(nn);
  for (const auto& s : states) {
    full.push_back(a.to_eigenbasis(s.amplitudes));
    weight = weight.cwiseMax(full.back().cwiseAbs2());
  }
  f->a_indices = retain_by_weight(weight, options.population_tail, nullptr);
  const auto k = static_cast<Eigen::Index>(f->a_indices.size());
  f->a_values.resize(k);
  for (Eigen::Index i = 0; i < k; ++i) f->a_values[i] = a.eigenvalues()[static_cast<Eigen::Index>(f->a_indices[static_cast<std::size_t>(i)])];
  for (const auto& cf : full) {
    Vec<S> c(k);
    const ComplexVector ck = cf(std::vector<Eigen::Index>(f->a_indices.begin(), f->a_indices.end()));
    c = cast_state<S>(ck);
    f->c.push_back(std::move(c));
    const RealVector pop = cf.cwiseAbs2();
    f->a_tail = std::max(f->a_tail, pop.sum() - ck.cwiseAbs2().sum());
    double m1 = 0.0, m2 = 0.0;
    for (Eigen::Index i = 0; i < nn; ++i) {
      m1 += pop[i] * a.eigenvalues()[i];
      m2 += pop[i] * a.eigenvalues()[i] * a.eigenvalues()[i];
    }
    f->mean_a.push_back(m1);
    f->mean_a2.push_back(m2);
  }
  f->degeneracy_tol = a.spectrum().degeneracy_tolerance;

  f->energies = h.eigenvalues();
  const Mat<S> vh = eigenvectors_as<S>(h);
  f->t = basis_change<S>(vh, a, f->a_indices);
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  f->q = basis_change<S>(vh, b, all).adjoint();
  f->b_values = b.eigenvalues();
  return f;
}

bool state_is_real(const QuantumState& s) {
  return s.amplitudes.imag().cwiseAbs().maxCoeff() == 0.0;
}

}  // namespace

struct TwoTimeSystem::Impl {
  std::shared_ptr<const HermitianObservable> h, a, b;
  std::vector<QuantumState> states;
  SystemOptions options;
  std::variant<std::unique_ptr<Frame<double>>, std::unique_ptr<Frame<Complex>>> frame;

  template <typename F>
  decltype(auto) visit(F&& fn) const {
    return std::visit([&](const auto& p) -> decltype(auto) { return fn(*p); }, frame);
  }
};

TwoTimeSystem::TwoTimeSystem(std::shared_ptr<const HermitianObservable> hamiltonian,
                             std::shared_ptr<const HermitianObservable> a,
                             std::shared_ptr<const HermitianObservable> b, const QuantumState& initial,
                             SystemOptions options)
    : TwoTimeSystem(std::move(hamiltonian), std::move(a), std::move(b),
                    std::vector<QuantumState>{initial}, options) {}

TwoTimeSystem::TwoTimeSystem(std::shared_ptr<const HermitianObservable> hamiltonian,
                             std::shared_ptr<const HermitianObservable> a,
                             std::shared_ptr<const HermitianObservable> b,
                             std::vector<QuantumState> initial_states, SystemOptions options)
    : impl_(std::make_unique<Impl>()) {
  require(hamiltonian && a && b, "two-time system needs H, A and B");
  require(hamiltonian->has_spectrum() && a->has_spectrum() && b->has_spectrum(),
          "H, A and B must be diagonalized");
  require(!initial_states.empty(), "two-time system needs an initial state");
  const auto& basis = hamiltonian->basis();
  if (a->basis() != basis || b->basis() != basis) {
    fail(ErrorKind::invalid_argument, "H, A and B are not expressed in a common basis");
  }
  require(a->dimension() == hamiltonian->dimension() && b->dimension() == hamiltonian->dimension(),
          "H, A and B dimensions differ");
  require(options.population_tail >= 0 && options.energy_tail >= 0 && options.pointer_tail >= 0,
          "truncation tails must be non-negative");
  bool real = hamiltonian->real_eigenvectors() && a->real_eigenvectors() && b->real_eigenvectors();
  for (const auto& s : initial_states) {
    if (s.basis != basis) {
      fail(ErrorKind::invalid_argument, "initial state basis '" + s.basis +
                                            "' differs from the Hamiltonian basis '" + basis + "'");
    }
    require(static_cast<std::size_t>(s.amplitudes.size()) == hamiltonian->dimension(),
            "initial state dimension mismatch");
    require(std::abs(s.norm_squared() - 1.0) < kNormTolerance, "initial state is not normalized");
    real = real && state_is_real(s);
  }
  impl_->h = std::move(hamiltonian);
  impl_->a = std::move(a);
  impl_->b = std::move(b);
  impl_->states = std::move(initial_states);
  impl_->options = options;
  if (real) {
    impl_->frame = build_frame<double>(*impl_->h, *impl_->a, *impl_->b, impl_->states, options);
  } else {
    impl_->frame = build_frame<Complex>(*impl_->h, *impl_->a, *impl_->b, impl_->states, options);
  }
}

TwoTimeSystem::~TwoTimeSystem() = default;
TwoTimeSystem::TwoTimeSystem(TwoTimeSystem&&) noexcept = default;
TwoTimeSystem& TwoTimeSystem::operator=(TwoTimeSystem&&) noexcept = default;

bool TwoTimeSystem::is_real() const { return impl_->frame.index() == 0; }
const SystemOptions& TwoTimeSystem::options() const { return impl_->options; }
std::size_t TwoTimeSystem::dimension() const { return impl_->h->dimension(); }
std::size_t TwoTimeSystem::state_count() const { return impl_->states.size(); }
const HermitianObservable& TwoTimeSystem::hamiltonian() const { return *impl_->h; }
std::shared_ptr<const HermitianObservable> TwoTimeSystem::hamiltonian_ptr() const { return impl_->h; }
const HermitianObservable& TwoTimeSystem::a() const { return *impl_->a; }
const HermitianObservable& TwoTimeSystem::b() const { return *impl_->b; }

const QuantumState& TwoTimeSystem::initial_state(std::size_t k) const {
  require(k < impl_->states.size(), "initial state index out of range");
  return impl_->states[k];
}

const RealVector& TwoTimeSystem::a_values() const {
  return impl_->visit([](const auto& f) -> const RealVector& { return f.a_values; });
}

const std::vector<std::size_t>& TwoTimeSystem::a_indices() const {
  return impl_->visit([](const auto& f) -> const std::vector<std::size_t>& { return f.a_indices; });
}

ComplexVector TwoTimeSystem::coefficients(std::size_t k) const {
  require(k < impl_->states.size(), "initial state index out of range");
  return impl_->visit([&](const auto& f) -> ComplexVector { return f.c[k].template cast<Complex>(); });
}

TruncationReport TwoTimeSystem::truncation() const {
  TruncationReport r;
  impl_->visit([&](const auto& f) {
    r.a_retained = f.a_indices.size();
    r.a_total = dimension();
    r.a_tail = f.a_tail;
    r.energy_retained = static_cast<std::size_t>(f.energies.size());
    r.energy_total = r.energy_retained;
  });
  return r;
}

double TwoTimeSystem::mean_a(std::size_t k) const {
  require(k < impl_->states.size(), "initial state index out of range");
  return impl_->visit([&](const auto& f) { return f.mean_a[k]; });
}

double TwoTimeSystem::mean_a2(std::size_t k) const {
  require(k < impl_->states.size(), "initial state index out of range");
  return impl_->visit([&](const auto& f) { return f.mean_a2[k]; });
}

Transition TwoTimeSystem::transition(double tau) const {
  require(std::isfinite(tau), "delay must be finite");
  Transition tr;
  tr.tau = tau;
  impl_->visit([&](const auto& f) {
    using S = typename std::decay_t<decltype(f.t)>::Scalar;
    const Eigen::Index ne = f.energies.size();
    if constexpr (std::is_same_v<S, double>) {
      RealVector cs(ne), sn(ne);
      for (Eigen::Index n = 0; n < ne; ++n) {
        cs[n] = std::cos(f.energies[n] * tau);
        sn[n] = std::sin(f.energies[n] * tau);
      }
      tr.full.resize(f.q.rows(), f.t.cols());
      tr.full.real() = f.q * (cs.asDiagonal() * f.t);
      tr.full.imag() = -(f.q * (sn.asDiagonal() * f.t));
    } else {
      ComplexVector phase(ne);
      for (Eigen::Index n = 0; n < ne; ++n) phase[n] = std::polar(1.0, -f.energies[n] * tau);
      tr.full = f.q * (phase.asDiagonal() * f.t);
    }
    RealVector bound = RealVector::Zero(tr.full.rows());
    const RealMatrix mag = tr.full.cwiseAbs();
    for (const auto& c : f.c) {
      const RealVector amp = mag * c.cwiseAbs();
      bound = bound.cwiseMax(amp.cwiseAbs2());
    }
    tr.rows = retain_by_weight(bound, impl_->options.pointer_tail, &tr.dropped_bound);
    std::vector<Eigen::Index> idx(tr.rows.begin(), tr.rows.end());
    tr.b = f.b_values(idx);
    tr.occupied = tr.full(idx, Eigen::all);
  });
  return tr;
}

DelaySlice TwoTimeSystem::delay_slice(const Transition& tr) const {
  DelaySlice d;
  d.tau = tr.tau;
  impl_->visit([&](const auto& f) {
    require(tr.full.rows() == f.b_values.size() && tr.full.cols() == f.t.cols(),
            "transition does not belong to this system");
    d.heisenberg = tr.full.adjoint() * f.b_values.asDiagonal() * tr.full;
  });
  return d;
}

DelaySlice TwoTimeSystem::delay_slice(double tau) const { return delay_slice(transition(tau)); }

RealVector TwoTimeSystem::b_populations(const Transition& tr, double sigma, std::size_t k) const {
  require(k < impl_->states.size(), "initial state index out of range");
  return impl_->visit([&](const auto& f) {
    const RealMatrix g = kernels::dephasing_kernel(f.a_values, sigma, f.degeneracy_tol);
    return kernels::parallel::dephased_populations(tr.occupied, f.c[k].template cast<Complex>(), g);
  });
}

RealVector TwoTimeSystem::kicked_b_populations(const Transition& tr, double kappa,
                                               std::size_t k) const {
  require(k < impl_->states.size(), "initial state index out of range");
  return impl_->visit([&](const auto& f) -> RealVector {
    ComplexVector kicked = f.c[k].template cast<Complex>();
    for (Eigen::Index i = 0; i < kicked.size(); ++i) kicked[i] *= std::polar(1.0, kappa * f.a_values[i]);
    return (tr.occupied * kicked).cwiseAbs2();
  });
}

RealVector TwoTimeSystem::correlation_trace(double sigma, std::span<const double> taus,
                                            TruncationReport* report) const {
  return impl_->visit([&](const auto& f) -> RealVector {
    using S = typename std::decay_t<decltype(f.t)>::Scalar;
    const Vec<S>& c = f.c[0];
    const RealMatrix g = kernels::dephasing_kernel(f.a_values, sigma, f.degeneracy_tol);
    const Vec<S> ac = f.a_values.template cast<S>().cwiseProduct(c);
    const Mat<S> y = f.t * ac.asDiagonal();
    const Mat<S> y2 = f.t * c.asDiagonal();
    const Mat<S> yg = y * g;
    const Mat<S> y2g = y2 * g;
    const RealVector p = yg.cwiseProduct(y.conjugate()).real().rowwise().sum();
    const RealVector p2 = y2g.cwiseProduct(y2.conjugate()).real().rowwise().sum();
    const double norm_a = std::max(p.sum(), std::numeric_limits<double>::min());
    const double norm = std::max(p2.sum(), std::numeric_limits<double>::min());
    const RealVector weight = (p / norm_a + p2 / norm).cwiseMax(0.0);
    double dropped = 0.0;
    const auto kept = retain_by_weight(weight, impl_->options.energy_tail, &dropped);
    std::vector<Eigen::Index> idx(kept.begin(), kept.end());
    const Mat<S> m = yg(idx, Eigen::all) * y2(idx, Eigen::all).adjoint();
    const Mat<S>& be = f.b_energy();
    const Mat<S> w = m.transpose().cwiseProduct(be(idx, idx));
    const RealVector e = f.energies(idx);
    if (report) {
      *report = truncation();
      report->energy_retained = kept.size();
      report->energy_tail = dropped;
    }
    return kernels::parallel::correlation_trace<S>(w, e, taus);
  });
}

}  // namespace macroreal
