#include "macroreal/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <omp.h>

namespace macroreal::kernels {
namespace {

constexpr Eigen::Index kTauBlock = 16;
constexpr Eigen::Index kRowBlock = 64;

Eigen::Index block_count(Eigen::Index n, Eigen::Index block) { return (n + block - 1) / block; }

}  // namespace

void set_worker_count(int workers) {
  if (workers > 0) omp_set_num_threads(workers);
}

int worker_count() { return omp_get_max_threads(); }

RealMatrix dephasing_kernel(const RealVector& a, double sigma, double tol) {
  require(sigma >= 0, "dephasing width must be non-negative");
  const Eigen::Index k = a.size();
  RealMatrix g(k, k);
  if (std::isinf(sigma)) {
    g.setOnes();
    return g;
  }
  if (sigma == 0.0) {
    for (Eigen::Index l = 0; l < k; ++l)
      for (Eigen::Index i = 0; i < k; ++i) g(i, l) = std::abs(a[i] - a[l]) <= tol ? 1.0 : 0.0;
    return g;
  }
  const double inv = 1.0 / (8.0 * sigma * sigma);
  for (Eigen::Index l = 0; l < k; ++l) {
    for (Eigen::Index i = 0; i < k; ++i) {
      const double d = a[i] - a[l];
      g(i, l) = std::exp(-d * d * inv);
    }
  }
  return g;
}

double pointer_density(double y, double b, double sigma) {
  const double u = (y - b) / sigma;
  return std::exp(-0.5 * u * u) / (std::sqrt(2.0 * std::numbers::pi) * sigma);
}

namespace serial {

template <typename S>
RealVector correlation_trace(const Matrix<S>& w, const RealVector& energies,
                             std::span<const double> taus) {
  require(w.rows() == w.cols() && w.rows() == energies.size(), "trace kernel shape mismatch");
  const Eigen::Index k = w.rows();
  RealVector out(static_cast<Eigen::Index>(taus.size()));
  for (std::size_t t = 0; t < taus.size(); ++t) {
    const double tau = taus[t];
    double sum = 0.0;
    for (Eigen::Index n = 0; n < k; ++n) {
      for (Eigen::Index m = 0; m < k; ++m) {
        const double phase = (energies[m] - energies[n]) * tau;
        if constexpr (std::is_same_v<S, double>) {
          sum += w(m, n) * std::cos(phase);
        } else {
          sum += w(m, n).real() * std::cos(phase) - w(m, n).imag() * std::sin(phase);
        }
      }
    }
    out[static_cast<Eigen::Index>(t)] = sum;
  }
  return out;
}

RealVector dephased_populations(const ComplexMatrix& t, const ComplexVector& c, const RealMatrix& g) {
  require(t.cols() == c.size() && g.rows() == c.size() && g.cols() == c.size(),
          "population kernel shape mismatch");
  const Eigen::Index k = c.size();
  RealVector p(t.rows());
  ComplexVector f(k);
  for (Eigen::Index j = 0; j < t.rows(); ++j) {
    for (Eigen::Index i = 0; i < k; ++i) f[i] = t(j, i) * c[i];
    double sum = 0.0;
    for (Eigen::Index l = 0; l < k; ++l) {
      Complex inner = 0.0;
      for (Eigen::Index i = 0; i < k; ++i) inner += std::conj(f[i]) * g(i, l);
      sum += (inner * f[l]).real();
    }
    p[j] = sum;
  }
  return p;
}

RealVector gaussian_mixture(const RealVector& p, const RealVector& b, double sigma,
                            const RealVector& y) {
  require(p.size() == b.size(), "mixture weights and centres differ in length");
  require(sigma > 0, "mixture width must be positive");
  RealVector out(y.size());
  for (Eigen::Index k = 0; k < y.size(); ++k) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < p.size(); ++j) sum += p[j] * pointer_density(y[k], b[j], sigma);
    out[k] = sum;
  }
  return out;
}

RealMatrix joint_density(const ComplexMatrix& phi, const RealVector& b, double sigma_b,
                         const RealVector& y_b) {
  require(phi.rows() == b.size(), "joint kernel shape mismatch");
  require(sigma_b > 0, "pointer width must be positive");
  RealMatrix out(phi.cols(), y_b.size());
  for (Eigen::Index ka = 0; ka < phi.cols(); ++ka) {
    for (Eigen::Index kb = 0; kb < y_b.size(); ++kb) {
      double sum = 0.0;
      for (Eigen::Index j = 0; j < phi.rows(); ++j)
        sum += std::norm(phi(j, ka)) * pointer_density(y_b[kb], b[j], sigma_b);
      out(ka, kb) = sum;
    }
  }
  return out;
}

}  // namespace serial

namespace parallel {

template <typename S>
RealVector correlation_trace(const Matrix<S>& w, const RealVector& energies,
                             std::span<const double> taus) {
  require(w.rows() == w.cols() && w.rows() == energies.size(), "trace kernel shape mismatch");
  const Eigen::Index k = w.rows();
  const auto nt = static_cast<Eigen::Index>(taus.size());
  RealVector out(nt);
  RealMatrix wr, wi;
  if constexpr (std::is_same_v<S, double>) {
    wr = w;
  } else {
    wr = w.real();
    wi = w.imag();
  }
  const Eigen::Index blocks = block_count(nt, kTauBlock);
#pragma omp parallel for schedule(dynamic)
  for (Eigen::Index blk = 0; blk < blocks; ++blk) {
    const Eigen::Index t0 = blk * kTauBlock;
    const Eigen::Index bt = std::min(kTauBlock, nt - t0);
    RealMatrix cs(k, bt), sn(k, bt);
    for (Eigen::Index t = 0; t < bt; ++t) {
      const double tau = taus[static_cast<std::size_t>(t0 + t)];
      for (Eigen::Index m = 0; m < k; ++m) {
        cs(m, t) = std::cos(energies[m] * tau);
        sn(m, t) = std::sin(energies[m] * tau);
      }
    }
    const RealMatrix wc = wr * cs;
    const RealMatrix ws = wr * sn;
    RealVector acc = (cs.cwiseProduct(wc) + sn.cwiseProduct(ws)).colwise().sum().transpose();
    if constexpr (!std::is_same_v<S, double>) {
      const RealMatrix ic = wi * cs;
      const RealMatrix is = wi * sn;
      acc += (cs.cwiseProduct(is) - sn.cwiseProduct(ic)).colwise().sum().transpose();
    }
    out.segment(t0, bt) = acc;
  }
  return out;
}

RealVector dephased_populations(const ComplexMatrix& t, const ComplexVector& c, const RealMatrix& g) {
  require(t.cols() == c.size() && g.rows() == c.size() && g.cols() == c.size(),
          "population kernel shape mismatch");
  const Eigen::Index rows = t.rows();
  RealVector p(rows);
  const Eigen::Index blocks = block_count(rows, kRowBlock);
#pragma omp parallel for schedule(dynamic)
  for (Eigen::Index blk = 0; blk < blocks; ++blk) {
    const Eigen::Index r0 = blk * kRowBlock;
    const Eigen::Index br = std::min(kRowBlock, rows - r0);
    const ComplexMatrix f = t.middleRows(r0, br) * c.asDiagonal();
    const RealMatrix fr = f.real(), fi = f.imag();
    const RealMatrix hr = fr * g, hi = fi * g;
    p.segment(r0, br) = (hr.cwiseProduct(fr) + hi.cwiseProduct(fi)).rowwise().sum();
  }
  return p;
}

RealVector gaussian_mixture(const RealVector& p, const RealVector& b, double sigma,
                            const RealVector& y) {
  require(p.size() == b.size(), "mixture weights and centres differ in length");
  require(sigma > 0, "mixture width must be positive");
  RealVector out(y.size());
#pragma omp parallel for schedule(static)
  for (Eigen::Index k = 0; k < y.size(); ++k) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < p.size(); ++j) sum += p[j] * pointer_density(y[k], b[j], sigma);
    out[k] = sum;
  }
  return out;
}

RealMatrix joint_density(const ComplexMatrix& phi, const RealVector& b, double sigma_b,
                         const RealVector& y_b) {
  require(phi.rows() == b.size(), "joint kernel shape mismatch");
  require(sigma_b > 0, "pointer width must be positive");
  RealMatrix gb(b.size(), y_b.size());
  for (Eigen::Index kb = 0; kb < y_b.size(); ++kb)
    for (Eigen::Index j = 0; j < b.size(); ++j) gb(j, kb) = pointer_density(y_b[kb], b[j], sigma_b);
  const RealMatrix weights = phi.cwiseAbs2().transpose();
  RealMatrix out(phi.cols(), y_b.size());
  const Eigen::Index rows = out.rows();
  const Eigen::Index blocks = block_count(rows, kRowBlock);
#pragma omp parallel for schedule(dynamic)
  for (Eigen::Index blk = 0; blk < blocks; ++blk) {
    const Eigen::Index r0 = blk * kRowBlock;
    const Eigen::Index br = std::min(kRowBlock, rows - r0);
    out.middleRows(r0, br).noalias() = weights.middleRows(r0, br) * gb;
  }
  return out;
}

}  // namespace parallel

template RealVector serial::correlation_trace<double>(const Matrix<double>&, const RealVector&,
                                                      std::span<const double>);
template RealVector serial::correlation_trace<Complex>(const Matrix<Complex>&, const RealVector&,
                                                       std::span<const double>);
template RealVector parallel::correlation_trace<double>(const Matrix<double>&, const RealVector&,
                                                        std::span<const double>);
template RealVector parallel::correlation_trace<Complex>(const Matrix<Complex>&, const RealVector&,
                                                         std::span<const double>);

}  // namespace macroreal::kernels
