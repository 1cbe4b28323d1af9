#include "macroreal/observable.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <lapacke.h>

namespace macroreal {
namespace {

constexpr double kHermiticityTolerance = 1e-10;
constexpr double kDegeneracyScale = 1e-9;

void symmetric_eigensolve(RealMatrix& a, RealVector& w) {
  const auto n = static_cast<lapack_int>(a.rows());
  w.resize(a.rows());
  const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, a.data(), n, w.data());
  if (info != 0) {
    std::ostringstream msg;
    msg << "dsyevd failed with info = " << info;
    fail(ErrorKind::numerical, msg.str());
  }
}

void hermitian_eigensolve(ComplexMatrix& a, RealVector& w) {
  const auto n = static_cast<lapack_int>(a.rows());
  w.resize(a.rows());
  const lapack_int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'L', n,
                                         reinterpret_cast<lapack_complex_double*>(a.data()), n,
                                         w.data());
  if (info != 0) {
    std::ostringstream msg;
    msg << "zheevd failed with info = " << info;
    fail(ErrorKind::numerical, msg.str());
  }
}

// Largest-magnitude component made real positive.
template <typename Vec>
void fix_phase(Vec&& v) {
  Eigen::Index best = 0;
  double best_abs = -1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double m = std::abs(v[i]);
    if (m > best_abs * (1.0 + 1e-12)) {
      best_abs = m;
      best = i;
    }
  }
  if (best_abs <= 0.0) return;
  using Scalar = std::decay_t<decltype(v[0])>;
  const Scalar phase = v[best] / best_abs;
  if constexpr (std::is_same_v<Scalar, double>) {
    if (phase < 0) v *= -1.0;
  } else {
    v *= std::conj(phase);
  }
}

void group_degeneracies(Spectrum& s) {
  const auto n = s.eigenvalues.size();
  const double width = n > 0 ? s.eigenvalues[n - 1] - s.eigenvalues[0] : 0.0;
  const double scale = width > 0 ? width : std::max(1.0, n > 0 ? std::abs(s.eigenvalues[0]) : 1.0);
  s.degeneracy_tolerance = kDegeneracyScale * scale;
  s.group_start.clear();
  for (Eigen::Index k = 0; k < n; ++k) {
    if (k == 0 || s.eigenvalues[k] - s.eigenvalues[k - 1] > s.degeneracy_tolerance) {
      s.group_start.push_back(static_cast<std::size_t>(k));
    }
  }
}

Spectrum parity_sector_solve(const RealMatrix& h) {
  const Eigen::Index n = h.rows();
  const Eigen::Index half = n / 2;
  Spectrum s;
  RealVector values[2];
  RealMatrix vectors[2];
  for (int sector = 0; sector < 2; ++sector) {
    const double sign = sector == 0 ? 1.0 : -1.0;
    RealMatrix block(half, half);
    for (Eigen::Index l = 0; l < half; ++l) {
      for (Eigen::Index k = 0; k < half; ++k) {
        block(k, l) = h(half + k, half + l) + sign * h(half + k, half - 1 - l);
      }
    }
    symmetric_eigensolve(block, values[sector]);
    vectors[sector] = std::move(block);
  }
  // merge both sectors by ascending eigenvalue
  s.eigenvalues.resize(n);
  s.real_vectors.resize(n, n);
  s.parity.resize(static_cast<std::size_t>(n));
  Eigen::Index ie = 0, io = 0;
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (Eigen::Index k = 0; k < n; ++k) {
    const bool take_even = io >= half || (ie < half && values[0][ie] <= values[1][io]);
    const int sector = take_even ? 0 : 1;
    const Eigen::Index idx = take_even ? ie++ : io++;
    const double sign = take_even ? 1.0 : -1.0;
    s.eigenvalues[k] = values[sector][idx];
    s.parity[static_cast<std::size_t>(k)] = take_even ? 1 : -1;
    auto col = s.real_vectors.col(k);
    for (Eigen::Index j = 0; j < half; ++j) {
      const double u = vectors[sector](j, idx) * inv_sqrt2;
      col[half + j] = u;
      col[half - 1 - j] = sign * u;
    }
    fix_phase(col);
  }
  return s;
}

}  // namespace

HermitianObservable HermitianObservable::dense(std::string name, std::string basis,
                                               ComplexMatrix matrix) {
  require(matrix.rows() == matrix.cols() && matrix.rows() > 0,
          "observable matrix must be square and non-empty");
  const double defect = hermiticity_defect(matrix);
  const double scale = std::max(1.0, matrix.cwiseAbs().maxCoeff());
  if (!(defect < kHermiticityTolerance * scale)) {
    std::ostringstream msg;
    msg << "observable '" << name << "' is not Hermitian (max |M - M^dagger| = " << defect << ")";
    fail(ErrorKind::invalid_argument, msg.str());
  }
  HermitianObservable obs;
  obs.name_ = std::move(name);
  obs.basis_ = std::move(basis);
  obs.dimension_ = static_cast<std::size_t>(matrix.rows());
  // exact Hermitian part
  obs.matrix_ = std::move(matrix);
  obs.matrix_ = (0.5 * (obs.matrix_ + obs.matrix_.adjoint())).eval();
  return obs;
}

HermitianObservable HermitianObservable::diagonal(std::string name, std::string basis,
                                                  RealVector entries) {
  require(entries.size() > 0, "diagonal observable must be non-empty");
  require(entries.allFinite(), "diagonal observable entries must be finite");
  HermitianObservable obs;
  obs.name_ = std::move(name);
  obs.basis_ = std::move(basis);
  obs.dimension_ = static_cast<std::size_t>(entries.size());
  obs.diagonal_ = std::move(entries);
  return obs;
}

bool HermitianObservable::is_real() const {
  return is_diagonal() || matrix_.imag().isZero(0.0);
}

ComplexMatrix HermitianObservable::dense_matrix() const {
  if (is_diagonal()) return diagonal_->cast<Complex>().asDiagonal();
  return matrix_;
}

const ComplexMatrix& HermitianObservable::matrix() const {
  require(!is_diagonal(), "observable '" + name_ + "' is stored as a diagonal");
  return matrix_;
}

const RealVector& HermitianObservable::diagonal_entries() const {
  require(is_diagonal(), "observable '" + name_ + "' is not diagonal");
  return *diagonal_;
}

const Spectrum& HermitianObservable::spectrum() const {
  if (!spectrum_) fail(ErrorKind::invalid_argument, "observable '" + name_ + "' is not diagonalized");
  return *spectrum_;
}

bool HermitianObservable::real_eigenvectors() const {
  const auto& s = spectrum();
  return is_diagonal() || s.real_vectors.size() > 0;
}

ComplexMatrix HermitianObservable::eigenvector_matrix() const {
  const auto& s = spectrum();
  const auto n = static_cast<Eigen::Index>(dimension_);
  if (is_diagonal()) {
    ComplexMatrix v = ComplexMatrix::Zero(n, n);
    for (Eigen::Index k = 0; k < n; ++k) v(static_cast<Eigen::Index>(s.order[k]), k) = 1.0;
    return v;
  }
  if (s.real_vectors.size() > 0) return s.real_vectors.cast<Complex>();
  return s.complex_vectors;
}

ComplexVector HermitianObservable::eigenvector(std::size_t k) const {
  const auto& s = spectrum();
  const auto n = static_cast<Eigen::Index>(dimension_);
  const auto kk = static_cast<Eigen::Index>(k);
  if (is_diagonal()) {
    ComplexVector v = ComplexVector::Zero(n);
    v[static_cast<Eigen::Index>(s.order[k])] = 1.0;
    return v;
  }
  if (s.real_vectors.size() > 0) return s.real_vectors.col(kk).cast<Complex>();
  return s.complex_vectors.col(kk);
}

ComplexVector HermitianObservable::to_eigenbasis(const ComplexVector& v) const {
  require(static_cast<std::size_t>(v.size()) == dimension_, "vector dimension mismatch");
  const auto& s = spectrum();
  if (is_diagonal()) {
    ComplexVector c(v.size());
    for (Eigen::Index k = 0; k < v.size(); ++k) c[k] = v[static_cast<Eigen::Index>(s.order[k])];
    return c;
  }
  if (s.real_vectors.size() > 0) {
    ComplexVector c(v.size());
    c.real() = s.real_vectors.transpose() * v.real();
    c.imag() = s.real_vectors.transpose() * v.imag();
    return c;
  }
  return s.complex_vectors.adjoint() * v;
}

ComplexVector HermitianObservable::from_eigenbasis(const ComplexVector& c) const {
  require(static_cast<std::size_t>(c.size()) == dimension_, "vector dimension mismatch");
  const auto& s = spectrum();
  if (is_diagonal()) {
    ComplexVector v(c.size());
    for (Eigen::Index k = 0; k < c.size(); ++k) v[static_cast<Eigen::Index>(s.order[k])] = c[k];
    return v;
  }
  if (s.real_vectors.size() > 0) {
    ComplexVector v(c.size());
    v.real() = s.real_vectors * c.real();
    v.imag() = s.real_vectors * c.imag();
    return v;
  }
  return s.complex_vectors * c;
}

ComplexVector HermitianObservable::apply(const ComplexVector& v) const {
  require(static_cast<std::size_t>(v.size()) == dimension_, "vector dimension mismatch");
  if (is_diagonal()) return diagonal_->cast<Complex>().cwiseProduct(v);
  return matrix_ * v;
}

double HermitianObservable::expectation(const ComplexVector& v) const {
  return v.dot(apply(v)).real();
}

double hermiticity_defect(const ComplexMatrix& m) {
  if (m.rows() != m.cols()) return std::numeric_limits<double>::infinity();
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

HermitianObservable diagonalize(HermitianObservable obs) {
  if (obs.spectrum_) return obs;
  Spectrum s;
  const auto n = static_cast<Eigen::Index>(obs.dimension_);
  if (obs.is_diagonal()) {
    const RealVector& d = *obs.diagonal_;
    s.order.resize(obs.dimension_);
    std::iota(s.order.begin(), s.order.end(), std::size_t{0});
    std::stable_sort(s.order.begin(), s.order.end(),
                     [&](std::size_t a, std::size_t b) { return d[static_cast<Eigen::Index>(a)] < d[static_cast<Eigen::Index>(b)]; });
    s.eigenvalues.resize(n);
    for (Eigen::Index k = 0; k < n; ++k) s.eigenvalues[k] = d[static_cast<Eigen::Index>(s.order[k])];
  } else if (obs.is_real()) {
    const RealMatrix re = obs.matrix_.real();
    if (obs.parity_symmetric_ && n % 2 == 0) {
      s = parity_sector_solve(re);
    } else {
      RealMatrix v = re;
      symmetric_eigensolve(v, s.eigenvalues);
      for (Eigen::Index k = 0; k < n; ++k) fix_phase(v.col(k));
      s.real_vectors = std::move(v);
    }
  } else {
    ComplexMatrix v = obs.matrix_;
    hermitian_eigensolve(v, s.eigenvalues);
    for (Eigen::Index k = 0; k < n; ++k) fix_phase(v.col(k));
    s.complex_vectors = std::move(v);
  }
  group_degeneracies(s);
  obs.spectrum_ = std::move(s);
  return obs;
}

ComplexVector ground_state(const HermitianObservable& h) {
  const auto& s = h.spectrum();
  std::size_t pick = 0;
  if (!s.parity.empty()) {
    const std::size_t group_end = s.group_start.size() > 1 ? s.group_start[1] : h.dimension();
    for (std::size_t k = 0; k < group_end; ++k) {
      if (s.parity[k] == 1) {
        pick = k;
        break;
      }
    }
  }
  return h.eigenvector(pick);
}

double reconstruction_error(const HermitianObservable& h) {
  const ComplexMatrix v = h.eigenvector_matrix();
  const ComplexMatrix rebuilt = v * h.eigenvalues().cast<Complex>().asDiagonal() * v.adjoint();
  const ComplexMatrix m = h.dense_matrix();
  const double scale = std::max(m.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  return (rebuilt - m).cwiseAbs().maxCoeff() / scale;
}

double unitarity_defect(const HermitianObservable& h) {
  const ComplexMatrix v = h.eigenvector_matrix();
  const auto n = v.cols();
  return (v.adjoint() * v - ComplexMatrix::Identity(n, n)).cwiseAbs().maxCoeff();
}

}  // namespace macroreal
