#include "pmsim/dynamics.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <sstream>
#include <unordered_map>
#include <utility>
#include <vector>

#include "fourier.hpp"
#include "pmsim/errors.hpp"

namespace pmsim {

// ---------------------------------------------------------------------------
// CouplingProfile

CouplingProfile::CouplingProfile(double total_time, ProfileShape shape, double ramp_fraction)
    : total_time_(total_time), shape_(shape), ramp_fraction_(ramp_fraction), plateau_(0.0) {
  if (!(total_time > 0.0) || !std::isfinite(total_time)) {
    throw DomainError("coupling profile needs a finite total time T > 0");
  }
  if (shape == ProfileShape::rectangular) {
    ramp_fraction_ = 0.0;
    plateau_ = 1.0 / total_time;
  } else {
    if (!(ramp_fraction > 0.0 && ramp_fraction < 0.5)) {
      throw DomainError("ramp fraction must lie in (0, 0.5)");
    }
    plateau_ = 1.0 / (total_time * (1.0 - ramp_fraction));
  }
}

double CouplingProfile::operator()(double t) const {
  if (!(t >= 0.0 && t <= total_time_)) {
    std::ostringstream os;
    os << "profile evaluated at t = " << t << " outside [0, " << total_time_ << "]";
    throw DomainError(os.str());
  }
  if (shape_ == ProfileShape::rectangular) return plateau_;
  const double ramp = ramp_fraction_ * total_time_;
  const double edge = std::min(t, total_time_ - t);
  if (edge >= ramp) return plateau_;
  const double s = std::sin(M_PI * edge / (2.0 * ramp));
  return plateau_ * s * s;
}

double CouplingProfile::integral(double t) const {
  t = std::clamp(t, 0.0, total_time_);
  if (shape_ == ProfileShape::rectangular) return t / total_time_;
  const double ramp = ramp_fraction_ * total_time_;
  const auto ramp_area = [&](double x) {
    return plateau_ * (0.5 * x - ramp / (2.0 * M_PI) * std::sin(M_PI * x / ramp));
  };
  if (t <= ramp) return ramp_area(t);
  if (t <= total_time_ - ramp) return ramp_area(ramp) + plateau_ * (t - ramp);
  return 1.0 - ramp_area(total_time_ - t);
}

double CouplingProfile::average(double t0, double t1) const {
  if (!(t1 > t0)) throw DomainError("profile average needs t1 > t0");
  if (shape_ == ProfileShape::rectangular) return plateau_;
  const double ramp = ramp_fraction_ * total_time_;
  if (t0 >= ramp && t1 <= total_time_ - ramp) return plateau_;
  return (integral(t1) - integral(t0)) / (t1 - t0);
}

double evaluate_profile(const CouplingProfile& profile, double t) { return profile(t); }

// ---------------------------------------------------------------------------
// CompositeHamiltonian

CompositeHamiltonian::CompositeHamiltonian(HermitianOperator h_system, HermitianOperator h_apparatus,
                                           HermitianOperator q_system, HermitianOperator q_apparatus,
                                           CouplingProfile profile)
    : h_system_(std::move(h_system)),
      h_apparatus_(std::move(h_apparatus)),
      q_system_(std::move(q_system)),
      q_apparatus_(std::move(q_apparatus)),
      profile_(profile) {
  if (q_system_.dim() != h_system_.dim()) {
    throw ValidationError("Q_S dim " + std::to_string(q_system_.dim()) + " does not match H_S dim " +
                          std::to_string(h_system_.dim()));
  }
  if (q_apparatus_.dim() != h_apparatus_.dim()) {
    throw ValidationError("Q_A dim " + std::to_string(q_apparatus_.dim()) + " does not match H_A dim " +
                          std::to_string(h_apparatus_.dim()));
  }
  if (dim() > kMaxCompositeDim) throw SizingError("composite dimension exceeds the supported maximum");
}

CompositeHamiltonian CompositeHamiltonian::with_profile(CouplingProfile profile) const {
  return CompositeHamiltonian(h_system_, h_apparatus_, q_system_, q_apparatus_, profile);
}

HermitianOperator assemble_with_coupling(const CompositeHamiltonian& h, double g) {
  const auto ds = static_cast<Eigen::Index>(h.system_dim());
  const auto da = static_cast<Eigen::Index>(h.apparatus_dim());
  CMatrix m = kron(h.h_system().matrix(), CMatrix::Identity(da, da)) +
              kron(CMatrix::Identity(ds, ds), h.h_apparatus().matrix());
  if (g != 0.0) m += g * kron(h.q_system().matrix(), h.q_apparatus().matrix());
  return HermitianOperator(m);
}

HermitianOperator assemble(const CompositeHamiltonian& h, double t) {
  return assemble_with_coupling(h, h.profile()(t));
}

bool commute(const HermitianOperator& a, const HermitianOperator& b, double rel_tol) {
  if (a.dim() != b.dim()) throw ValidationError("commute: dimension mismatch");
  const CMatrix c = a.matrix() * b.matrix() - b.matrix() * a.matrix();
  return c.norm() <= rel_tol * a.matrix().norm() * b.matrix().norm();
}

namespace {

constexpr std::size_t kCacheBudgetBytes = std::size_t{256} << 20;

long long coupling_key(double g) { return std::llround(g * 1e12); }

void check_initial(const StateVector& initial, std::size_t ds, std::size_t da) {
  if (initial.dim() != ds * da) {
    throw ValidationError("initial state dim " + std::to_string(initial.dim()) +
                          " does not match composite dim " + std::to_string(ds * da));
  }
}

/// Spectra keyed by coupling value, bounded by a memory budget. Entries that
/// do not fit are computed and discarded.
template <class Entry>
class CouplingCache {
 public:
  explicit CouplingCache(std::size_t entry_bytes)
      : capacity_(std::max<std::size_t>(1, kCacheBudgetBytes / std::max<std::size_t>(entry_bytes, 1))) {}

  template <class Make>
  std::shared_ptr<const Entry> get(double g, Make&& make) {
    const long long key = coupling_key(g);
    if (auto it = map_.find(key); it != map_.end()) return it->second;
    auto entry = std::make_shared<const Entry>(make(g));
    if (map_.size() < capacity_) map_.emplace(key, entry);
    return entry;
  }

 private:
  std::size_t capacity_;
  std::unordered_map<long long, std::shared_ptr<const Entry>> map_;
};

Spectrum diagonalize(const CMatrix& m) {
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(m);
  if (solver.info() != Eigen::Success) throw ValidationError("step Hamiltonian diagonalization failed");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

/// x <- exp(-i H dt) x with H = V diag(values) V^dagger.
template <class Vec>
void apply_exponential(const Spectrum& s, double dt, Vec&& x, CVector& scratch) {
  scratch.noalias() = s.vectors.adjoint() * x;
  for (Eigen::Index k = 0; k < scratch.size(); ++k) scratch[k] *= std::polar(1.0, -s.values[k] * dt);
  x.noalias() = s.vectors * scratch;
}

class DenseStepper {
 public:
  explicit DenseStepper(const CompositeHamiltonian& h)
      : h_(h), cache_(static_cast<std::size_t>(h.dim() * h.dim()) * sizeof(cplx)) {
    if (h.dim() > 4096) throw SizingError("dense propagation is limited to composite dim 4096");
    const auto ds = static_cast<Eigen::Index>(h.system_dim());
    const auto da = static_cast<Eigen::Index>(h.apparatus_dim());
    free_ = kron(h.h_system().matrix(), CMatrix::Identity(da, da)) +
            kron(CMatrix::Identity(ds, ds), h.h_apparatus().matrix());
    coupling_ = kron(h.q_system().matrix(), h.q_apparatus().matrix());
  }

  CVector run(const StateVector& initial, long n) {
    const double dt = h_.profile().total_time() / static_cast<double>(n);
    CVector psi = initial.amplitudes();
    CVector scratch(psi.size());
    for (long k = 0; k < n; ++k) {
      const double g = h_.profile().average(dt * static_cast<double>(k), dt * static_cast<double>(k + 1));
      auto s = cache_.get(g, [&](double gv) {
        CMatrix m = free_ + gv * coupling_;
        return diagonalize(0.5 * (m + m.adjoint()));
      });
      apply_exponential(*s, dt, psi, scratch);
    }
    return psi;
  }

 private:
  const CompositeHamiltonian& h_;
  CMatrix free_;
  CMatrix coupling_;
  CouplingCache<Spectrum> cache_;
};

struct JointBasis {
  CMatrix vectors;  // columns: common eigenvectors of Q_A and H_A
  RVector q;        // Q_A eigenvalues
  RVector e;        // H_A eigenvalues
};

std::optional<JointBasis> joint_eigenbasis(const HermitianOperator& q_apparatus,
                                           const HermitianOperator& h_apparatus) {
  if (!commute(q_apparatus, h_apparatus)) return std::nullopt;
  const Spectrum& sq = q_apparatus.spectrum();
  JointBasis basis{sq.vectors, sq.values, RVector::Zero(sq.values.size())};
  const double h_scale = h_apparatus.matrix().cwiseAbs().maxCoeff();
  if (h_scale == 0.0) return basis;

  CMatrix projected = basis.vectors.adjoint() * h_apparatus.matrix() * basis.vectors;
  bool rotated = false;
  for (const auto& space : eigenspaces(q_apparatus)) {
    if (space.columns.size() < 2) continue;
    const auto m = static_cast<Eigen::Index>(space.columns.size());
    CMatrix sub(m, m);
    CMatrix cols(basis.vectors.rows(), m);
    for (Eigen::Index a = 0; a < m; ++a) {
      cols.col(a) = basis.vectors.col(space.columns[static_cast<std::size_t>(a)]);
      for (Eigen::Index b = 0; b < m; ++b) {
        sub(a, b) = projected(space.columns[static_cast<std::size_t>(a)], space.columns[static_cast<std::size_t>(b)]);
      }
    }
    const Spectrum local = diagonalize(0.5 * (sub + sub.adjoint()));
    const CMatrix rotated_cols = cols * local.vectors;
    for (Eigen::Index a = 0; a < m; ++a) {
      basis.vectors.col(space.columns[static_cast<std::size_t>(a)]) = rotated_cols.col(a);
    }
    rotated = true;
  }
  if (rotated) projected = basis.vectors.adjoint() * h_apparatus.matrix() * basis.vectors;
  basis.e = projected.diagonal().real();
  projected.diagonal().setZero();
  if (projected.cwiseAbs().maxCoeff() > 1e-8 * std::max(1.0, h_scale)) return std::nullopt;
  return basis;
}

struct BlockSpectra {
  std::vector<Spectrum> blocks;
};

/// exp(-i H_b dt) for every block, stored row-major and contiguous.
struct BlockPropagators {
  Eigen::Index dim = 0;
  std::vector<cplx> u;

  BlockPropagators(const BlockSpectra& s, double dt) : dim(s.blocks.front().values.size()) {
    u.resize(s.blocks.size() * static_cast<std::size_t>(dim * dim));
    CVector phase(dim);
    for (std::size_t b = 0; b < s.blocks.size(); ++b) {
      const Spectrum& sp = s.blocks[b];
      for (Eigen::Index k = 0; k < dim; ++k) phase[k] = std::polar(1.0, -sp.values[k] * dt);
      const CMatrix m = sp.vectors * phase.asDiagonal() * sp.vectors.adjoint();
      cplx* out = u.data() + b * static_cast<std::size_t>(dim * dim);
      for (Eigen::Index r = 0; r < dim; ++r) {
        for (Eigen::Index c = 0; c < dim; ++c) out[r * dim + c] = m(r, c);
      }
    }
  }

  /// x[i * stride] <- sum_j U_b(i, j) x[j * stride]
  void apply(std::size_t b, cplx* x, Eigen::Index stride) const {
    const cplx* m = u.data() + b * static_cast<std::size_t>(dim * dim);
    if (dim == 2) {
      const cplx a = x[0], c = x[stride];
      x[0] = m[0] * a + m[1] * c;
      x[stride] = m[2] * a + m[3] * c;
      return;
    }
    cplx tmp[64];
    std::vector<cplx> heap;
    cplx* y = tmp;
    if (dim > 64) {
      heap.resize(static_cast<std::size_t>(dim));
      y = heap.data();
    }
    for (Eigen::Index i = 0; i < dim; ++i) {
      cplx acc = 0.0;
      for (Eigen::Index j = 0; j < dim; ++j) acc += m[i * dim + j] * x[j * stride];
      y[i] = acc;
    }
    for (Eigen::Index i = 0; i < dim; ++i) x[i * stride] = y[i];
  }
};

/// Propagation in the common eigenbasis of Q_A and H_A, where H(t) is block
/// diagonal with one d_S x d_S block per apparatus eigenvector.
class BlockStepper {
 public:
  BlockStepper(const CompositeHamiltonian& h, JointBasis basis)
      : h_(h),
        basis_(std::move(basis)),
        entry_bytes_(static_cast<std::size_t>(basis_.q.size()) * h.system_dim() * (h.system_dim() + 1) * sizeof(cplx)),
        cache_(entry_bytes_) {}

  CVector run(const StateVector& initial, long n) {
    const auto ds = static_cast<Eigen::Index>(h_.system_dim());
    const auto da = static_cast<Eigen::Index>(h_.apparatus_dim());
    using RowMajor = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<const RowMajor> m(initial.amplitudes().data(), ds, da);
    CMatrix blocks = m * basis_.vectors.conjugate();
    const double dt = h_.profile().total_time() / static_cast<double>(n);
    CouplingCache<BlockPropagators> steps(entry_bytes_);
    for (long k = 0; k < n; ++k) {
      const double g = h_.profile().average(dt * static_cast<double>(k), dt * static_cast<double>(k + 1));
      auto u = steps.get(g, [&](double gv) { return BlockPropagators(*cache_.get(gv, [&](double x) { return make(x); }), dt); });
      for (Eigen::Index j = 0; j < da; ++j) u->apply(static_cast<std::size_t>(j), blocks.col(j).data(), 1);
    }
    RowMajor out = blocks * basis_.vectors.transpose();
    return Eigen::Map<const CVector>(out.data(), ds * da);
  }

 private:
  BlockSpectra make(double g) const {
    BlockSpectra s;
    s.blocks.reserve(static_cast<std::size_t>(basis_.q.size()));
    const CMatrix& hs = h_.h_system().matrix();
    const CMatrix& qs = h_.q_system().matrix();
    for (Eigen::Index j = 0; j < basis_.q.size(); ++j) {
      CMatrix block = hs + (g * basis_.q[j]) * qs;
      Spectrum local = diagonalize(0.5 * (block + block.adjoint()));
      local.values.array() += basis_.e[j];
      s.blocks.push_back(std::move(local));
    }
    return s;
  }

  const CompositeHamiltonian& h_;
  JointBasis basis_;
  std::size_t entry_bytes_;
  CouplingCache<BlockSpectra> cache_;
};

template <class Runner>
Propagation richardson(Runner&& run, const StateVector& initial, long n_steps, double total_time,
                       const PropagateOptions& options, PropagationMethod method) {
  if (n_steps < 16) throw ValidationError("propagate needs n_steps >= 16, got " + std::to_string(n_steps));
  if (n_steps > options.max_steps) throw ValidationError("n_steps exceeds the configured step cap");
  long n = n_steps;
  CVector coarse = run(n / 2);
  while (true) {
    CVector fine = run(n);
    const double estimate = (fine - coarse).cwiseAbs().maxCoeff() / 3.0;
    if (estimate <= options.tolerance || !options.refine) {
      PropagationReport report;
      report.n_steps = n;
      report.step_size = total_time / static_cast<double>(n);
      report.richardson_error_estimate = estimate;
      report.norm_drift = std::abs(fine.norm() - 1.0);
      report.method = method;
      if (report.norm_drift > 1e-8) {
        throw ConvergenceError("norm drift " + std::to_string(report.norm_drift) + " exceeds 1e-8", estimate, n);
      }
      return {StateVector(std::move(fine), initial.dims(), initial.labels()), report};
    }
    if (2 * n > options.max_steps) {
      std::ostringstream os;
      os << "propagation did not converge: Richardson estimate " << estimate << " > tolerance "
         << options.tolerance << " at " << n << " steps";
      throw ConvergenceError(os.str(), estimate, n);
    }
    coarse = std::move(fine);
    n *= 2;
  }
}

}  // namespace

Propagation propagate(const CompositeHamiltonian& h, const StateVector& initial, long n_steps,
                      const PropagateOptions& options) {
  check_initial(initial, h.system_dim(), h.apparatus_dim());
  const double total_time = h.profile().total_time();
  if (!options.force_dense) {
    if (auto basis = joint_eigenbasis(h.q_apparatus(), h.h_apparatus())) {
      BlockStepper stepper(h, std::move(*basis));
      return richardson([&](long n) { return stepper.run(initial, n); }, initial, n_steps, total_time, options,
                        PropagationMethod::apparatus_blocks);
    }
  }
  DenseStepper stepper(h);
  return richardson([&](long n) { return stepper.run(initial, n); }, initial, n_steps, total_time, options,
                    PropagationMethod::dense);
}

StateVector time_ordered_product(const CompositeHamiltonian& h, const StateVector& initial, long n_steps,
                                 bool force_dense) {
  check_initial(initial, h.system_dim(), h.apparatus_dim());
  if (n_steps < 1) throw ValidationError("time_ordered_product needs n_steps >= 1");
  if (!force_dense) {
    if (auto basis = joint_eigenbasis(h.q_apparatus(), h.h_apparatus())) {
      BlockStepper stepper(h, std::move(*basis));
      return StateVector(stepper.run(initial, n_steps), initial.dims(), initial.labels());
    }
  }
  DenseStepper stepper(h);
  return StateVector(stepper.run(initial, n_steps), initial.dims(), initial.labels());
}

// ---------------------------------------------------------------------------
// Split-operator propagation on a pointer grid

namespace {

class SplitStepper {
 public:
  explicit SplitStepper(const GridHamiltonian& h)
      : h_(h),
        ds_(static_cast<Eigen::Index>(h.h_system.dim())),
        n_(static_cast<Eigen::Index>(h.grid.n_points())),
        fft_(h.grid.n_points()),
        entry_bytes_(static_cast<std::size_t>(n_) * static_cast<std::size_t>(ds_ * (ds_ + 1)) * sizeof(cplx)),
        cache_(entry_bytes_) {
    if (h.q_system.dim() != h.h_system.dim()) throw ValidationError("Q_S and H_S dims differ");
    if (h.apparatus_potential.size() != n_) {
      throw ValidationError("apparatus potential must have one value per grid point");
    }
  }

  CVector run(const StateVector& initial, long steps) {
    const double dt = h_.profile.total_time() / static_cast<double>(steps);
    CVector half(n_);
    for (Eigen::Index j = 0; j < n_; ++j) half[j] = std::polar(1.0, -0.5 * dt * h_.apparatus_potential[j]);
    CVector psi = initial.amplitudes();
    CouplingCache<BlockPropagators> props(entry_bytes_);
    for (long k = 0; k < steps; ++k) {
      const double g = h_.profile.average(dt * static_cast<double>(k), dt * static_cast<double>(k + 1));
      auto u = props.get(g, [&](double gv) { return BlockPropagators(*cache_.get(gv, [&](double x) { return make(x); }), dt); });
      kinetic(psi, half);
      for (Eigen::Index i = 0; i < ds_; ++i) fft_.forward(psi.data() + i * n_, psi.data() + i * n_);
      for (Eigen::Index m = 0; m < n_; ++m) u->apply(static_cast<std::size_t>(m), psi.data() + m, n_);
      for (Eigen::Index i = 0; i < ds_; ++i) fft_.inverse(psi.data() + i * n_, psi.data() + i * n_);
      kinetic(psi, half);
    }
    return psi;
  }

 private:
  void kinetic(CVector& psi, const CVector& half) const {
    for (Eigen::Index i = 0; i < ds_; ++i) psi.segment(i * n_, n_).array() *= half.array();
  }

  BlockSpectra make(double g) const {
    BlockSpectra s;
    s.blocks.reserve(static_cast<std::size_t>(n_));
    const CMatrix& hs = h_.h_system.matrix();
    const CMatrix& qs = h_.q_system.matrix();
    for (Eigen::Index m = 0; m < n_; ++m) {
      const double k = h_.grid.fft_conjugate_value(static_cast<std::size_t>(m));
      CMatrix block = hs + (g * k) * qs;
      s.blocks.push_back(diagonalize(0.5 * (block + block.adjoint())));
    }
    return s;
  }

  const GridHamiltonian& h_;
  Eigen::Index ds_;
  Eigen::Index n_;
  detail::UnitaryFft fft_;
  std::size_t entry_bytes_;
  CouplingCache<BlockSpectra> cache_;
};

}  // namespace

Propagation propagate_split(const GridHamiltonian& h, const StateVector& initial, long n_steps,
                            const PropagateOptions& options) {
  check_initial(initial, h.h_system.dim(), h.grid.n_points());
  SplitStepper stepper(h);
  return richardson([&](long n) { return stepper.run(initial, n); }, initial, n_steps, h.profile.total_time(),
                    options, PropagationMethod::split_operator);
}

StateVector split_product(const GridHamiltonian& h, const StateVector& initial, long n_steps) {
  check_initial(initial, h.h_system.dim(), h.grid.n_points());
  if (n_steps < 1) throw ValidationError("split_product needs n_steps >= 1");
  SplitStepper stepper(h);
  return StateVector(stepper.run(initial, n_steps), initial.dims(), initial.labels());
}

// ---------------------------------------------------------------------------
// Impulsive limit

StateVector impulsive_propagator(const HermitianOperator& q_system, const PointerGrid& grid,
                                 const StateVector& initial, double coupling) {
  const auto ds = static_cast<Eigen::Index>(q_system.dim());
  const auto n = static_cast<Eigen::Index>(grid.n_points());
  check_initial(initial, q_system.dim(), grid.n_points());
  const Spectrum& s = q_system.spectrum();
  detail::UnitaryFft fft(grid.n_points());
  CVector out = CVector::Zero(ds * n);
  CVector branch(n);
  const RVector& r = grid.r_values();
  for (Eigen::Index i = 0; i < ds; ++i) {
    branch.setZero();
    for (Eigen::Index a = 0; a < ds; ++a) {
      branch += std::conj(s.vectors(a, i)) * initial.amplitudes().segment(a * n, n);
    }
    const double weight = branch.squaredNorm();
    if (weight < 1e-14) continue;
    const double shift = coupling * s.values[i];
    const Moments mom = moments(r, branch.cwiseAbs2());
    const double margin = 4.0 * mom.width;
    const double centre = mom.mean + shift;
    if (centre - margin < grid.r_min() || centre + margin > grid.r_max()) {
      std::ostringstream os;
      os << "branch with Q_S eigenvalue " << s.values[i] << " would be translated to r = " << centre
         << ", within 4 widths of the pointer box [" << grid.r_min() << ", " << grid.r_max() << ")";
      throw SizingError(os.str());
    }
    fft.forward(branch.data(), branch.data());
    for (Eigen::Index m = 0; m < n; ++m) {
      branch[m] *= std::polar(1.0, -shift * grid.fft_conjugate_value(static_cast<std::size_t>(m)));
    }
    fft.inverse(branch.data(), branch.data());
    for (Eigen::Index a = 0; a < ds; ++a) out.segment(a * n, n) += s.vectors(a, i) * branch;
  }
  return StateVector(std::move(out), initial.dims(), initial.labels());
}

// ---------------------------------------------------------------------------
// First-order protective prediction

StateVector nondegenerate_eigenstate(const HermitianOperator& h, std::size_t index) {
  const Spectrum& s = h.spectrum();
  const auto d = static_cast<std::size_t>(s.values.size());
  if (index >= d) {
    throw ValidationError("eigenstate index " + std::to_string(index) + " out of range for dim " +
                          std::to_string(d));
  }
  const double tol = 1e-9 * h.spectral_range();
  for (std::size_t k = 0; k < d; ++k) {
    if (k == index) continue;
    const double gap = std::abs(s.values[static_cast<Eigen::Index>(k)] - s.values[static_cast<Eigen::Index>(index)]);
    if (gap <= tol) {
      throw PreconditionError("eigenstate " + std::to_string(index) +
                              " of H_S is degenerate; protective measurement needs a non-degenerate eigenstate");
    }
  }
  return StateVector(s.vectors.col(static_cast<Eigen::Index>(index)));
}

double adiabatic_validity(const HermitianOperator& h_system, const HermitianOperator& q_system,
                          std::size_t nu_index, double q_apparatus_max, double total_time) {
  const Spectrum& s = h_system.spectrum();
  const auto nu = static_cast<Eigen::Index>(nu_index);
  const CVector q_nu = q_system.matrix() * s.vectors.col(nu);
  double worst = 0.0;
  for (Eigen::Index mu = 0; mu < s.values.size(); ++mu) {
    if (mu == nu) continue;
    const double element = std::abs(s.vectors.col(mu).dot(q_nu));
    const double gap = std::abs(s.values[mu] - s.values[nu]);
    worst = std::max(worst, element * q_apparatus_max / (total_time * gap));
  }
  return worst;
}

FirstOrderPrediction first_order_prediction(const CompositeHamiltonian& h, std::size_t nu_index) {
  const StateVector nu = nondegenerate_eigenstate(h.h_system(), nu_index);
  const double total_time = h.profile().total_time();
  FirstOrderPrediction p{};
  p.shift = expectation(nu, h.q_system());
  p.final_phase = h.h_system().spectrum().values[static_cast<Eigen::Index>(nu_index)] * total_time;
  p.validity = adiabatic_validity(h.h_system(), h.q_system(), nu_index, h.q_apparatus().spectral_radius(),
                                  total_time);
  return p;
}

}  // namespace pmsim
