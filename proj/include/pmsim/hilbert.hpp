#pragma once

// Finite-dimensional Hilbert-space primitives: states, Hermitian operators,
// tensor products, partial traces and the discretized pointer coordinate.
//
// Composite bases are ordered with the first factor most significant:
// amplitude index of |i> (x) |j> is i * d_B + j.

#include <complex>
#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace pmsim {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;

/// Largest composite dimension accepted by tensor products.
inline constexpr std::size_t kMaxCompositeDim = std::size_t{1} << 18;

class StateVector {
 public:
  /// Normalizes `amplitudes`. `dims` defaults to a single factor.
  explicit StateVector(CVector amplitudes, std::vector<std::size_t> dims = {},
                       std::vector<std::string> labels = {});

  /// Computational basis vector |index> of a composite space.
  static StateVector basis(std::vector<std::size_t> dims, std::size_t index);

  const CVector& amplitudes() const noexcept { return amplitudes_; }
  const std::vector<std::size_t>& dims() const noexcept { return dims_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(amplitudes_.size()); }
  std::size_t factor_count() const noexcept { return dims_.size(); }
  cplx operator[](std::size_t i) const { return amplitudes_[static_cast<Eigen::Index>(i)]; }

 private:
  CVector amplitudes_;
  std::vector<std::size_t> dims_;
  std::vector<std::string> labels_;
};

struct Spectrum {
  RVector values;   // ascending
  CMatrix vectors;  // orthonormal columns, vectors.col(k) <-> values[k]
};

namespace detail {
struct SpectrumCache;
}

/// Immutable dense Hermitian matrix. The eigendecomposition is computed on
/// first use and shared between copies; concurrent readers are safe.
class HermitianOperator {
 public:
  /// Throws ValidationError unless `matrix` is square and Hermitian to 1e-12
  /// (relative to its largest entry). The stored matrix is symmetrized.
  explicit HermitianOperator(const CMatrix& matrix);

  /// Builds V diag(values) V^dagger and seeds the spectrum cache, so no
  /// numerical diagonalization is ever run for this operator.
  static HermitianOperator from_spectrum(const RVector& values, const CMatrix& vectors);
  static HermitianOperator zero(std::size_t dim);
  static HermitianOperator identity(std::size_t dim);
  static HermitianOperator diagonal(const RVector& values);

  std::size_t dim() const noexcept { return static_cast<std::size_t>(matrix_.rows()); }
  const CMatrix& matrix() const noexcept { return matrix_; }
  const Spectrum& spectrum() const;
  /// max |eigenvalue|
  double spectral_radius() const;
  /// max eigenvalue - min eigenvalue
  double spectral_range() const;

 private:
  HermitianOperator(CMatrix matrix, std::shared_ptr<detail::SpectrumCache> cache);

  CMatrix matrix_;
  std::shared_ptr<detail::SpectrumCache> cache_;
};

/// Density matrix over a (possibly composite) space.
class DensityOperator {
 public:
  /// Validates Hermiticity (1e-12), unit trace (1e-10) and eigenvalues >= -1e-10.
  explicit DensityOperator(const CMatrix& matrix, std::vector<std::size_t> dims = {});
  static DensityOperator from_pure(const StateVector& state);

  const CMatrix& matrix() const noexcept { return matrix_; }
  const std::vector<std::size_t>& dims() const noexcept { return dims_; }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(matrix_.rows()); }
  double purity() const;
  /// Eigenvector with the largest eigenvalue, as a normalized state.
  StateVector dominant_state() const;

 private:
  CMatrix matrix_;
  std::vector<std::size_t> dims_;
};

/// Discretized periodic pointer coordinate r on [r_min, r_max) with hbar = 1.
class PointerGrid {
 public:
  PointerGrid(std::size_t n_points, double r_min, double r_max);

  std::size_t n_points() const noexcept { return n_points_; }
  double r_min() const noexcept { return r_min_; }
  double r_max() const noexcept { return r_max_; }
  double length() const noexcept { return r_max_ - r_min_; }
  double spacing() const noexcept { return length() / static_cast<double>(n_points_); }
  double hbar() const noexcept { return 1.0; }
  const RVector& r_values() const noexcept { return r_values_; }

  /// Eigenvalues of the translation generator, ascending: 2*pi*q/L for
  /// q = -N/2 .. N/2-1.
  RVector conjugate_values() const;
  /// Conjugate value carried by FFT bin m (standard FFT ordering).
  double fft_conjugate_value(std::size_t m) const;

  bool operator==(const PointerGrid& other) const {
    return n_points_ == other.n_points_ && r_min_ == other.r_min_ && r_max_ == other.r_max_;
  }

 private:
  std::size_t n_points_;
  double r_min_;
  double r_max_;
  RVector r_values_;
};

struct BornOutcome {
  double eigenvalue;
  double probability;
};

/// Eigenvalues of `op` grouped into eigenspaces; values closer than
/// 1e-9 * spectral range are merged.
struct Eigenspace {
  double eigenvalue;
  std::vector<Eigen::Index> columns;  // columns of op.spectrum().vectors
};
std::vector<Eigenspace> eigenspaces(const HermitianOperator& op);

CMatrix kron(const CMatrix& a, const CMatrix& b);
StateVector tensor_product(const StateVector& a, const StateVector& b);
HermitianOperator tensor_product(const HermitianOperator& a, const HermitianOperator& b);

const Spectrum& eigendecompose(const HermitianOperator& op);

/// <psi|op|psi>; the imaginary residual is dropped.
double expectation(const StateVector& state, const HermitianOperator& op);
std::vector<BornOutcome> born_weights(const StateVector& state, const HermitianOperator& op);

DensityOperator partial_trace(const StateVector& state, std::size_t keep);
DensityOperator partial_trace(const DensityOperator& rho, std::size_t keep);
/// Diagonal of the reduced density matrix of factor `keep`, without forming it.
RVector marginal_probabilities(const StateVector& state, std::size_t keep);

/// -sum lambda ln lambda in nats.
double von_neumann_entropy(const DensityOperator& rho);
double fidelity_pure(const DensityOperator& rho, const StateVector& target);

/// Gaussian pointer packet with |phi(r)|^2 of RMS width `sigma` centred at r0.
/// Requires 4 * spacing <= sigma <= length / 8.
StateVector gaussian_packet(const PointerGrid& grid, double r0, double sigma);
/// Q_A: generator of translations of the pointer coordinate,
/// exp(-i s Q_A) phi(r) = phi(r - s).
HermitianOperator translation_generator(const PointerGrid& grid);
/// R_A: diagonal pointer coordinate.
HermitianOperator position_operator(const PointerGrid& grid);

/// Centroid and RMS width of a probability distribution on the grid points.
struct Moments {
  double mean;
  double width;
};
Moments moments(const RVector& coordinates, const RVector& probabilities);

}  // namespace pmsim
