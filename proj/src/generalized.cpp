#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "pmsim/errors.hpp"
#include "pmsim/measurement.hpp"

namespace pmsim {

namespace {

constexpr std::size_t kMaxGeneralizedDim = 64;

void require_nondegenerate(const HermitianOperator& h_apparatus) {
  const RVector& e = h_apparatus.spectrum().values;
  const double tol = 1e-9 * h_apparatus.spectral_range();
  for (Eigen::Index k = 1; k < e.size(); ++k) {
    if (e[k] - e[k - 1] <= tol) {
      std::ostringstream os;
      os << "H_A is degenerate near E = " << e[k] << "; the Y operator needs a non-degenerate H_A";
      throw PreconditionError(os.str());
    }
  }
}

RVector diagonal_expectations(const CMatrix& vectors, const CMatrix& op) {
  RVector y(vectors.cols());
  for (Eigen::Index j = 0; j < vectors.cols(); ++j) y[j] = vectors.col(j).dot(op * vectors.col(j)).real();
  return y;
}

}  // namespace

HermitianOperator construct_y_operator(const HermitianOperator& q_apparatus, const HermitianOperator& h_apparatus) {
  if (q_apparatus.dim() != h_apparatus.dim()) throw ValidationError("Q_A and H_A dims differ");
  require_nondegenerate(h_apparatus);
  const CMatrix& v = h_apparatus.spectrum().vectors;
  return HermitianOperator::from_spectrum(diagonal_expectations(v, q_apparatus.matrix()), v);
}

ConjugateCoordinate conjugate_coordinate(const HermitianOperator& q_apparatus, const HermitianOperator& h_apparatus) {
  const std::size_t n = h_apparatus.dim();
  if (n > kMaxGeneralizedDim) {
    throw SizingError("generalized mode supports apparatus dims up to " + std::to_string(kMaxGeneralizedDim));
  }
  if (n < 4 || (n & (n - 1)) != 0) throw SizingError("generalized mode needs a power-of-two apparatus dim >= 4");
  if (q_apparatus.dim() != n) throw ValidationError("Q_A and H_A dims differ");
  require_nondegenerate(h_apparatus);

  const Spectrum& s = h_apparatus.spectrum();
  const RVector y = diagonal_expectations(s.vectors, q_apparatus.matrix());
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return y[a] < y[b]; });

  const auto ni = static_cast<Eigen::Index>(n);
  ConjugateCoordinate cc{PointerGrid(n, -1.0, 1.0), CMatrix(ni, ni), RVector(ni), CMatrix(ni, ni), RVector(ni)};
  for (Eigen::Index j = 0; j < ni; ++j) {
    cc.y_vectors.col(j) = s.vectors.col(order[static_cast<std::size_t>(j)]);
    cc.y_values[j] = y[order[static_cast<std::size_t>(j)]];
    cc.apparatus_energies[j] = s.values[order[static_cast<std::size_t>(j)]];
  }
  const double delta = (cc.y_values[ni - 1] - cc.y_values[0]) / static_cast<double>(n - 1);
  const double scale = std::max(1.0, cc.y_values.cwiseAbs().maxCoeff());
  if (!(delta > 1e-12 * scale)) {
    throw SetupError("Y spectrum is degenerate; no conjugate pointer coordinate can be resolved");
  }
  const double dr = 2.0 * M_PI / (static_cast<double>(n) * delta);
  cc.grid = PointerGrid(n, -0.5 * static_cast<double>(n) * dr, 0.5 * static_cast<double>(n) * dr);
  const RVector& r = cc.grid.r_values();
  CMatrix fourier(ni, ni);
  const double norm = 1.0 / std::sqrt(static_cast<double>(n));
  for (Eigen::Index j = 0; j < ni; ++j) {
    const double label = static_cast<double>(j) - 0.5 * static_cast<double>(n);
    for (Eigen::Index m = 0; m < ni; ++m) fourier(j, m) = std::polar(norm, -label * delta * r[m]);
  }
  cc.to_apparatus = cc.y_vectors * fourier;
  return cc;
}

RunResult run_generalized(const MeasurementConfig& config) {
  if (config.mode != Mode::generalized) throw ModeError("run_generalized needs mode = generalized");
  if (!(config.T > 0.0) || !std::isfinite(config.T)) throw ValidationError("T must be positive");
  if (config.n_steps != 0 && config.n_steps < 16) throw ValidationError("n_steps must be >= 16 (or 0 for automatic)");
  const std::size_t da = config.apparatus_dim != 0 ? config.apparatus_dim : config.pointer.n_points;
  if (da > kMaxGeneralizedDim) {
    throw SizingError("generalized mode supports apparatus dims up to " + std::to_string(kMaxGeneralizedDim));
  }
  std::optional<PointerGrid> grid;
  if (config.pointer.n_points == da) grid.emplace(da, config.pointer.r_min, config.pointer.r_max);
  const PointerGrid* gp = grid ? &*grid : nullptr;

  const HermitianOperator hs = build_operator(config.h_system, config.system_dim, nullptr, "h_system");
  const HermitianOperator qs = build_operator(config.q_system, config.system_dim, nullptr, "q_system");
  const HermitianOperator ha = build_operator(config.h_apparatus, da, gp, "h_apparatus");
  const HermitianOperator qa = build_operator(config.q_apparatus, da, gp, "q_apparatus");
  const ConjugateCoordinate cc = conjugate_coordinate(qa, ha);

  const CouplingProfile profile = config.profile.shape == ProfileShape::rectangular
                                      ? CouplingProfile::rectangular(config.T)
                                      : CouplingProfile(config.T, config.profile.shape, config.profile.ramp_fraction);
  const CompositeHamiltonian h(hs, ha, qs, qa, profile);
  const FirstOrderPrediction prediction = first_order_prediction(h, config.nu_index);
  StateVector sys = nondegenerate_eigenstate(hs, config.nu_index);
  if (config.initial_system) {
    if (config.initial_system->size() != config.system_dim) throw ValidationError("initial_system has the wrong size");
    sys = StateVector(Eigen::Map<const CVector>(config.initial_system->data(),
                                                static_cast<Eigen::Index>(config.system_dim)));
  }

  // Pointer packet in the coordinate conjugate to Y.
  const double dr = cc.grid.spacing();
  const double sigma = config.packet.sigma;
  if (sigma < 0.5 * dr || sigma > cc.grid.length() / 4.0) {
    std::ostringstream os;
    os << "packet sigma " << sigma << " outside the resolvable band [" << 0.5 * dr << ", " << cc.grid.length() / 4.0
       << "] of the Y-conjugate coordinate";
    throw SizingError(os.str());
  }
  const RVector& r = cc.grid.r_values();
  CVector packet_r(r.size());
  for (Eigen::Index m = 0; m < r.size(); ++m) {
    const double x = r[m] - config.packet.r0;
    packet_r[m] = std::exp(-x * x / (4.0 * sigma * sigma));
  }
  packet_r.normalize();
  const StateVector apparatus(cc.to_apparatus * packet_r);
  const double initial_centroid = moments(r, packet_r.cwiseAbs2()).mean;

  const long n = config.n_steps > 0 ? config.n_steps : automatic_steps(config);
  PropagateOptions options;
  options.tolerance = config.tolerance;
  const Propagation p = propagate(h, tensor_product(sys, apparatus), n, options);

  // Read out in the interaction picture of H_A, then in the R basis.
  const auto ni = static_cast<Eigen::Index>(da);
  const auto ds = static_cast<Eigen::Index>(config.system_dim);
  CVector phases(ni);
  for (Eigen::Index j = 0; j < ni; ++j) phases[j] = std::polar(1.0, cc.apparatus_energies[j] * config.T);
  const CMatrix to_r = cc.to_apparatus.adjoint() * cc.y_vectors * phases.asDiagonal() * cc.y_vectors.adjoint();
  CVector in_r(ds * ni);
  for (Eigen::Index i = 0; i < ds; ++i) in_r.segment(i * ni, ni) = to_r * p.state.amplitudes().segment(i * ni, ni);
  const StateVector final_r(in_r, {config.system_dim, da});
  const PointerReadout pointer = readout(final_r, cc.grid, 1.0);

  // Apparatus-side adiabaticity: Q_A mixing between H_A levels.
  const CMatrix x = cc.y_vectors.adjoint() * qa.matrix() * cc.y_vectors;
  double apparatus_validity = 0.0;
  for (Eigen::Index j = 0; j < ni; ++j) {
    for (Eigen::Index k = 0; k < ni; ++k) {
      if (j == k) continue;
      const double gap = std::abs(cc.apparatus_energies[j] - cc.apparatus_energies[k]);
      apparatus_validity = std::max(apparatus_validity, std::abs(x(j, k)) * qs.spectral_radius() / (config.T * gap));
    }
  }

  RunResult out;
  out.mode = Mode::generalized;
  out.T = config.T;
  out.r0 = config.packet.r0;
  out.initial_centroid = initial_centroid;
  out.pointer_centroid = pointer.centroid;
  out.pointer_width = pointer.width;
  out.predicted_shift = expectation(sys, qs);
  out.reduced_system_state = partial_trace(p.state, 0);
  out.disturbance = std::clamp(1.0 - fidelity_pure(out.reduced_system_state, sys), 0.0, 1.0);
  out.entanglement_entropy = von_neumann_entropy(out.reduced_system_state);
  out.validity = std::max(prediction.validity, apparatus_validity);
  out.validity_flag = out.validity >= kValidityThreshold;
  out.report = p.report;
  out.seed = config.rng_seed;
  return out;
}

}  // namespace pmsim
