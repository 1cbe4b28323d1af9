#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "macroreal/types.hpp"

namespace macroreal {

/// Spectral cache of a Hermitian operator. Eigenvalues ascending; eigenvector
/// columns expressed in the operator's matrix basis.
struct Spectrum {
  RealVector eigenvalues;
  // Exactly one of the two is populated unless the operator is diagonal,
  // in which case eigenvector k is the unit vector e_{order[k]}.
  RealMatrix real_vectors;
  ComplexMatrix complex_vectors;
  std::vector<std::size_t> order;
  // First index of each degenerate group.
  std::vector<std::size_t> group_start;
  double degeneracy_tolerance = 0.0;
  // +1/-1 per eigenvector when diagonalized by parity sectors, else empty.
  std::vector<int> parity;
};

/// Hermitian matrix in a named basis, optionally with its spectral cache.
///
/// Diagonal operators (grid position, projectors in their own basis) are
/// stored by their diagonal only; their eigenvectors are permuted unit
/// vectors and never materialized.
class HermitianObservable {
 public:
  static HermitianObservable dense(std::string name, std::string basis, ComplexMatrix matrix);
  static HermitianObservable diagonal(std::string name, std::string basis, RealVector entries);

  const std::string& name() const { return name_; }
  const std::string& basis() const { return basis_; }
  std::size_t dimension() const { return dimension_; }
  bool is_diagonal() const { return diagonal_.has_value(); }
  bool is_real() const;

  /// Dense form; builds it for diagonal operators.
  ComplexMatrix dense_matrix() const;
  const ComplexMatrix& matrix() const;
  const RealVector& diagonal_entries() const;

  /// Set by builders whose operator commutes with the reflection i -> n-1-i.
  bool parity_symmetric() const { return parity_symmetric_; }
  void set_parity_symmetric(bool value) { parity_symmetric_ = value; }

  bool has_spectrum() const { return spectrum_.has_value(); }
  const Spectrum& spectrum() const;
  const RealVector& eigenvalues() const { return spectrum().eigenvalues; }
  bool real_eigenvectors() const;

  /// Eigenvector matrix V (columns) as a complex matrix. Identity-like for diagonal.
  ComplexMatrix eigenvector_matrix() const;
  ComplexVector eigenvector(std::size_t k) const;

  /// Coordinates in the eigenbasis, V† v, and back, V c.
  ComplexVector to_eigenbasis(const ComplexVector& v) const;
  ComplexVector from_eigenbasis(const ComplexVector& c) const;

  ComplexVector apply(const ComplexVector& v) const;
  double expectation(const ComplexVector& v) const;

 private:
  HermitianObservable() = default;
  friend HermitianObservable diagonalize(HermitianObservable obs);

  std::string name_;
  std::string basis_;
  std::size_t dimension_ = 0;
  ComplexMatrix matrix_;
  std::optional<RealVector> diagonal_;
  bool parity_symmetric_ = false;
  std::optional<Spectrum> spectrum_;
};

/// max |M - M†|.
double hermiticity_defect(const ComplexMatrix& m);

/// Fills the spectral cache. Real symmetric input goes through LAPACK dsyevd,
/// complex through zheevd; parity-symmetric real operators are solved per
/// reflection sector so that every eigenvector has definite parity.
HermitianObservable diagonalize(HermitianObservable obs);

/// Lowest eigenvector; among a degenerate lowest group the even-parity member
/// is chosen when parities are known.
ComplexVector ground_state(const HermitianObservable& diagonalized);

/// max |V D V† - M| / max |M|.
double reconstruction_error(const HermitianObservable& diagonalized);

/// max |V† V - I|.
double unitarity_defect(const HermitianObservable& diagonalized);

}  // namespace macroreal
