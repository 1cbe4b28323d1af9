#pragma once

// Hot loops of the correlation and distribution code. Each kernel exists as a
// plain serial reference and an OpenMP version; both produce the same values
// up to summation rounding and the parallel one is independent of the thread
// count (every output element is owned by one thread).

#include <span>

#include "macroreal/types.hpp"

namespace macroreal::kernels {

template <typename S>
using Matrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using Vector = Eigen::Matrix<S, Eigen::Dynamic, 1>;

/// Number of OpenMP threads used by the parallel kernels (<= 0 keeps the default).
void set_worker_count(int workers);
int worker_count();

/// Gaussian dephasing factors G_il = exp(-(a_i - a_l)^2 / (8 sigma^2)).
/// sigma == 0 keeps only pairs inside one degeneracy group (|a_i - a_l| <= tol),
/// sigma == +inf gives all ones.
RealMatrix dephasing_kernel(const RealVector& a, double sigma, double tol = 0.0);

/// Overlap of two pointer wavepackets, i.e. the density of a unit-weight
/// Gaussian of width sigma: (2 pi sigma^2)^(-1/2) exp(-(y - b)^2 / (2 sigma^2)).
double pointer_density(double y, double b, double sigma);

namespace serial {

/// C(tau) = Re sum_{m,n} W_mn exp(i (E_m - E_n) tau), evaluated term by term.
template <typename S>
RealVector correlation_trace(const Matrix<S>& w, const RealVector& energies,
                             std::span<const double> taus);

/// p_j = sum_{i,l} T_ji c_i G_il conj(c_l) conj(T_jl).
RealVector dephased_populations(const ComplexMatrix& t, const ComplexVector& c, const RealMatrix& g);

/// R(y) = sum_j p_j pointer_density(y, b_j, sigma).
RealVector gaussian_mixture(const RealVector& p, const RealVector& b, double sigma,
                            const RealVector& y);

/// P(yA_k, yB_l) = sum_j |phi_jk|^2 pointer_density(yB_l, b_j, sigma_b).
RealMatrix joint_density(const ComplexMatrix& phi, const RealVector& b, double sigma_b,
                         const RealVector& y_b);

}  // namespace serial

namespace parallel {

/// Same as serial::correlation_trace, via blocked products with cos/sin
/// phase vectors; tau blocks are distributed over threads.
template <typename S>
RealVector correlation_trace(const Matrix<S>& w, const RealVector& energies,
                             std::span<const double> taus);

RealVector dephased_populations(const ComplexMatrix& t, const ComplexVector& c, const RealMatrix& g);

RealVector gaussian_mixture(const RealVector& p, const RealVector& b, double sigma,
                            const RealVector& y);

RealMatrix joint_density(const ComplexMatrix& phi, const RealVector& b, double sigma_b,
                         const RealVector& y_b);

}  // namespace parallel

}  // namespace macroreal::kernels
