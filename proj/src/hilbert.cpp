#include "pmsim/hilbert.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>
#include <sstream>

#include "pmsim/errors.hpp"

namespace pmsim {

namespace detail {
struct SpectrumCache {
  std::once_flag once;
  Spectrum spectrum;
};
}  // namespace detail

namespace {

std::size_t product(const std::vector<std::size_t>& dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

double max_abs(const CMatrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

std::string dims_string(const std::vector<std::size_t>& dims) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < dims.size(); ++i) os << (i ? "," : "") << dims[i];
  os << "]";
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// StateVector

StateVector::StateVector(CVector amplitudes, std::vector<std::size_t> dims,
                         std::vector<std::string> labels)
    : amplitudes_(std::move(amplitudes)), dims_(std::move(dims)), labels_(std::move(labels)) {
  if (amplitudes_.size() == 0) throw ValidationError("state vector must not be empty");
  if (dims_.empty()) dims_.push_back(static_cast<std::size_t>(amplitudes_.size()));
  if (product(dims_) != static_cast<std::size_t>(amplitudes_.size())) {
    throw ValidationError("basis dims " + dims_string(dims_) + " do not multiply to " +
                          std::to_string(amplitudes_.size()));
  }
  if (!labels_.empty() && labels_.size() != dims_.size()) {
    throw ValidationError("one label per factor required");
  }
  const double norm = amplitudes_.norm();
  if (!std::isfinite(norm) || norm == 0.0) throw ValidationError("state vector has zero or non-finite norm");
  amplitudes_ /= norm;
}

StateVector StateVector::basis(std::vector<std::size_t> dims, std::size_t index) {
  const std::size_t d = product(dims);
  if (index >= d) throw ValidationError("basis index out of range");
  CVector v = CVector::Zero(static_cast<Eigen::Index>(d));
  v[static_cast<Eigen::Index>(index)] = 1.0;
  return StateVector(std::move(v), std::move(dims));
}

// ---------------------------------------------------------------------------
// HermitianOperator

HermitianOperator::HermitianOperator(const CMatrix& matrix)
    : cache_(std::make_shared<detail::SpectrumCache>()) {
  if (matrix.rows() != matrix.cols() || matrix.rows() == 0) {
    throw ValidationError("Hermitian operator must be a non-empty square matrix");
  }
  const double scale = std::max(1.0, max_abs(matrix));
  const double asym = max_abs(matrix - matrix.adjoint());
  if (!(asym <= 1e-12 * scale)) {
    std::ostringstream os;
    os << "matrix is not Hermitian (max |A - A^dagger| = " << asym << ")";
    throw ValidationError(os.str());
  }
  matrix_ = 0.5 * (matrix + matrix.adjoint());
}

HermitianOperator::HermitianOperator(CMatrix matrix, std::shared_ptr<detail::SpectrumCache> cache)
    : matrix_(std::move(matrix)), cache_(std::move(cache)) {}

HermitianOperator HermitianOperator::from_spectrum(const RVector& values, const CMatrix& vectors) {
  if (vectors.rows() != vectors.cols() || vectors.cols() != values.size() || values.size() == 0) {
    throw ValidationError("spectrum dimensions are inconsistent");
  }
  const Eigen::Index n = values.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return values[a] < values[b]; });
  auto cache = std::make_shared<detail::SpectrumCache>();
  Spectrum s;
  s.values.resize(n);
  s.vectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    s.values[k] = values[order[static_cast<std::size_t>(k)]];
    s.vectors.col(k) = vectors.col(order[static_cast<std::size_t>(k)]);
  }
  CMatrix m = s.vectors * s.values.cast<cplx>().asDiagonal() * s.vectors.adjoint();
  m = 0.5 * (m + m.adjoint()).eval();
  std::call_once(cache->once, [&] { cache->spectrum = std::move(s); });
  return HermitianOperator(std::move(m), std::move(cache));
}

HermitianOperator HermitianOperator::zero(std::size_t dim) {
  const auto n = static_cast<Eigen::Index>(dim);
  return from_spectrum(RVector::Zero(n), CMatrix::Identity(n, n));
}

HermitianOperator HermitianOperator::identity(std::size_t dim) {
  const auto n = static_cast<Eigen::Index>(dim);
  return from_spectrum(RVector::Ones(n), CMatrix::Identity(n, n));
}

HermitianOperator HermitianOperator::diagonal(const RVector& values) {
  const auto n = values.size();
  return from_spectrum(values, CMatrix::Identity(n, n));
}

const Spectrum& HermitianOperator::spectrum() const {
  std::call_once(cache_->once, [this] {
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(matrix_);
    if (solver.info() != Eigen::Success) throw ValidationError("eigendecomposition failed");
    cache_->spectrum.values = solver.eigenvalues();
    cache_->spectrum.vectors = solver.eigenvectors();
  });
  return cache_->spectrum;
}

double HermitianOperator::spectral_radius() const {
  return spectrum().values.cwiseAbs().maxCoeff();
}

double HermitianOperator::spectral_range() const {
  const auto& v = spectrum().values;
  return v[v.size() - 1] - v[0];
}

const Spectrum& eigendecompose(const HermitianOperator& op) { return op.spectrum(); }

// ---------------------------------------------------------------------------
// DensityOperator

DensityOperator::DensityOperator(const CMatrix& matrix, std::vector<std::size_t> dims)
    : dims_(std::move(dims)) {
  if (matrix.rows() != matrix.cols() || matrix.rows() == 0) {
    throw ValidationError("density operator must be a non-empty square matrix");
  }
  if (dims_.empty()) dims_.push_back(static_cast<std::size_t>(matrix.rows()));
  if (product(dims_) != static_cast<std::size_t>(matrix.rows())) {
    throw ValidationError("density operator dims " + dims_string(dims_) + " do not match matrix size");
  }
  if (max_abs(matrix - matrix.adjoint()) > 1e-12) throw ValidationError("density operator is not Hermitian");
  matrix_ = 0.5 * (matrix + matrix.adjoint());
  const double tr = matrix_.trace().real();
  if (std::abs(tr - 1.0) > 1e-10) {
    std::ostringstream os;
    os << "density operator trace is " << tr << ", expected 1";
    throw ValidationError(os.str());
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(matrix_, Eigen::EigenvaluesOnly);
  if (solver.eigenvalues().minCoeff() < -1e-10) {
    throw ValidationError("density operator has a negative eigenvalue");
  }
}

DensityOperator DensityOperator::from_pure(const StateVector& state) {
  const CVector& a = state.amplitudes();
  return DensityOperator(a * a.adjoint(), state.dims());
}

double DensityOperator::purity() const { return (matrix_ * matrix_).trace().real(); }

StateVector DensityOperator::dominant_state() const {
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(matrix_);
  return StateVector(solver.eigenvectors().col(matrix_.rows() - 1), dims_);
}

// ---------------------------------------------------------------------------
// PointerGrid

PointerGrid::PointerGrid(std::size_t n_points, double r_min, double r_max)
    : n_points_(n_points), r_min_(r_min), r_max_(r_max) {
  if (n_points < 4 || (n_points & (n_points - 1)) != 0) {
    throw SizingError("pointer grid n_points must be a power of two >= 4, got " + std::to_string(n_points));
  }
  if (!(r_max > r_min) || !std::isfinite(r_min) || !std::isfinite(r_max)) {
    throw SizingError("pointer grid requires finite r_min < r_max");
  }
  r_values_.resize(static_cast<Eigen::Index>(n_points));
  const double dr = spacing();
  for (std::size_t j = 0; j < n_points; ++j) {
    r_values_[static_cast<Eigen::Index>(j)] = r_min + dr * static_cast<double>(j);
  }
}

RVector PointerGrid::conjugate_values() const {
  const auto n = static_cast<Eigen::Index>(n_points_);
  RVector k(n);
  const double dk = 2.0 * M_PI / length();
  for (Eigen::Index m = 0; m < n; ++m) k[m] = dk * static_cast<double>(m - n / 2);
  return k;
}

double PointerGrid::fft_conjugate_value(std::size_t m) const {
  const auto n = static_cast<long>(n_points_);
  long q = static_cast<long>(m);
  if (q >= n / 2) q -= n;
  return 2.0 * M_PI / length() * static_cast<double>(q);
}

// ---------------------------------------------------------------------------
// Operations

std::vector<Eigenspace> eigenspaces(const HermitianOperator& op) {
  const Spectrum& s = op.spectrum();
  const double tol = 1e-9 * std::max(op.spectral_range(), 0.0);
  std::vector<Eigenspace> out;
  for (Eigen::Index k = 0; k < s.values.size(); ++k) {
    if (!out.empty() && s.values[k] - s.values[out.back().columns.back()] <= tol) {
      out.back().columns.push_back(k);
    } else {
      out.push_back({s.values[k], {k}});
    }
  }
  for (auto& e : out) {
    double sum = 0.0;
    for (auto c : e.columns) sum += s.values[c];
    e.eigenvalue = sum / static_cast<double>(e.columns.size());
  }
  return out;
}

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index k = 0; k < a.cols(); ++k) {
      out.block(i * b.rows(), k * b.cols(), b.rows(), b.cols()) = a(i, k) * b;
    }
  }
  return out;
}

StateVector tensor_product(const StateVector& a, const StateVector& b) {
  if (a.dim() * b.dim() > kMaxCompositeDim) {
    throw SizingError("composite dimension " + std::to_string(a.dim() * b.dim()) +
                      " exceeds the maximum of " + std::to_string(kMaxCompositeDim));
  }
  CVector out(static_cast<Eigen::Index>(a.dim() * b.dim()));
  const auto db = static_cast<Eigen::Index>(b.dim());
  for (Eigen::Index i = 0; i < a.amplitudes().size(); ++i) {
    out.segment(i * db, db) = a.amplitudes()[i] * b.amplitudes();
  }
  std::vector<std::size_t> dims = a.dims();
  dims.insert(dims.end(), b.dims().begin(), b.dims().end());
  std::vector<std::string> labels;
  if (!a.labels().empty() && !b.labels().empty()) {
    labels = a.labels();
    labels.insert(labels.end(), b.labels().begin(), b.labels().end());
  }
  return StateVector(std::move(out), std::move(dims), std::move(labels));
}

HermitianOperator tensor_product(const HermitianOperator& a, const HermitianOperator& b) {
  if (a.dim() * b.dim() > kMaxCompositeDim) {
    throw SizingError("composite dimension " + std::to_string(a.dim() * b.dim()) +
                      " exceeds the maximum of " + std::to_string(kMaxCompositeDim));
  }
  return HermitianOperator(kron(a.matrix(), b.matrix()));
}

double expectation(const StateVector& state, const HermitianOperator& op) {
  if (state.dim() != op.dim()) {
    throw ValidationError("expectation: state dim " + std::to_string(state.dim()) +
                          " does not match operator dim " + std::to_string(op.dim()));
  }
  const cplx v = state.amplitudes().dot(op.matrix() * state.amplitudes());
  return v.real();
}

std::vector<BornOutcome> born_weights(const StateVector& state, const HermitianOperator& op) {
  if (state.dim() != op.dim()) throw ValidationError("born_weights: dimension mismatch");
  const Spectrum& s = op.spectrum();
  const CVector coeffs = s.vectors.adjoint() * state.amplitudes();
  std::vector<BornOutcome> out;
  for (const auto& space : eigenspaces(op)) {
    double p = 0.0;
    for (auto c : space.columns) p += std::norm(coeffs[c]);
    out.push_back({space.eigenvalue, p});
  }
  return out;
}

namespace {

void check_keep(const std::vector<std::size_t>& dims, std::size_t keep) {
  if (dims.size() < 2) throw ValidationError("partial trace needs a composite state with >= 2 factors");
  if (keep >= dims.size()) {
    throw ValidationError("partial trace: factor index " + std::to_string(keep) + " out of range");
  }
}

struct Split {
  Eigen::Index left, mid, right;
};

Split split_dims(const std::vector<std::size_t>& dims, std::size_t keep) {
  Split s{1, static_cast<Eigen::Index>(dims[keep]), 1};
  for (std::size_t i = 0; i < keep; ++i) s.left *= static_cast<Eigen::Index>(dims[i]);
  for (std::size_t i = keep + 1; i < dims.size(); ++i) s.right *= static_cast<Eigen::Index>(dims[i]);
  return s;
}

using RowMajorCMatrix = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace

DensityOperator partial_trace(const StateVector& state, std::size_t keep) {
  check_keep(state.dims(), keep);
  const Split s = split_dims(state.dims(), keep);
  CMatrix rho = CMatrix::Zero(s.mid, s.mid);
  for (Eigen::Index l = 0; l < s.left; ++l) {
    Eigen::Map<const RowMajorCMatrix> block(state.amplitudes().data() + l * s.mid * s.right, s.mid, s.right);
    rho.noalias() += block * block.adjoint();
  }
  rho /= rho.trace().real();
  return DensityOperator(rho);
}

DensityOperator partial_trace(const DensityOperator& rho, std::size_t keep) {
  check_keep(rho.dims(), keep);
  const Split s = split_dims(rho.dims(), keep);
  CMatrix out = CMatrix::Zero(s.mid, s.mid);
  const CMatrix& m = rho.matrix();
  for (Eigen::Index l = 0; l < s.left; ++l) {
    for (Eigen::Index a = 0; a < s.mid; ++a) {
      for (Eigen::Index b = 0; b < s.mid; ++b) {
        cplx acc = 0.0;
        for (Eigen::Index r = 0; r < s.right; ++r) {
          acc += m((l * s.mid + a) * s.right + r, (l * s.mid + b) * s.right + r);
        }
        out(a, b) += acc;
      }
    }
  }
  out /= out.trace().real();
  return DensityOperator(out);
}

RVector marginal_probabilities(const StateVector& state, std::size_t keep) {
  check_keep(state.dims(), keep);
  const Split s = split_dims(state.dims(), keep);
  RVector p = RVector::Zero(s.mid);
  const CVector& a = state.amplitudes();
  for (Eigen::Index l = 0; l < s.left; ++l) {
    for (Eigen::Index m = 0; m < s.mid; ++m) {
      p[m] += a.segment((l * s.mid + m) * s.right, s.right).squaredNorm();
    }
  }
  return p;
}

double von_neumann_entropy(const DensityOperator& rho) {
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(rho.matrix(), Eigen::EigenvaluesOnly);
  double s = 0.0;
  for (Eigen::Index k = 0; k < solver.eigenvalues().size(); ++k) {
    const double l = std::clamp(solver.eigenvalues()[k], 0.0, 1.0);
    if (l > 0.0) s -= l * std::log(l);
  }
  return std::max(s, 0.0);
}

double fidelity_pure(const DensityOperator& rho, const StateVector& target) {
  if (rho.dim() != target.dim()) throw ValidationError("fidelity_pure: dimension mismatch");
  const cplx f = target.amplitudes().dot(rho.matrix() * target.amplitudes());
  return std::clamp(f.real(), 0.0, 1.0);
}

StateVector gaussian_packet(const PointerGrid& grid, double r0, double sigma) {
  const double dr = grid.spacing();
  if (!(sigma >= 4.0 * dr * (1.0 - 1e-12)) || !(sigma <= grid.length() / 8.0 * (1.0 + 1e-12))) {
    std::ostringstream os;
    os << "packet width " << sigma << " outside resolvable band [4*spacing, length/8] = [" << 4.0 * dr
       << ", " << grid.length() / 8.0 << "]";
    throw SizingError(os.str());
  }
  const RVector& r = grid.r_values();
  CVector amp(r.size());
  for (Eigen::Index j = 0; j < r.size(); ++j) {
    const double x = r[j] - r0;
    amp[j] = std::exp(-x * x / (4.0 * sigma * sigma));
  }
  return StateVector(std::move(amp), {grid.n_points()}, {"pointer"});
}

HermitianOperator translation_generator(const PointerGrid& grid) {
  const auto n = static_cast<Eigen::Index>(grid.n_points());
  const RVector k = grid.conjugate_values();
  const RVector& r = grid.r_values();
  const double norm = 1.0 / std::sqrt(static_cast<double>(n));
  CMatrix f(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index m = 0; m < n; ++m) f(j, m) = std::polar(norm, k[m] * r[j]);
  }
  return HermitianOperator::from_spectrum(k, f);
}

HermitianOperator position_operator(const PointerGrid& grid) {
  return HermitianOperator::diagonal(grid.r_values());
}

Moments moments(const RVector& coordinates, const RVector& probabilities) {
  const double total = probabilities.sum();
  if (!(total > 0.0)) throw ValidationError("moments: distribution has no mass");
  const double mean = coordinates.dot(probabilities) / total;
  const double var = (coordinates.array() - mean).square().matrix().dot(probabilities) / total;
  return {mean, std::sqrt(std::max(var, 0.0))};
}

}  // namespace pmsim
