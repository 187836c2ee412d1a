#include "pmsim/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pmsim/errors.hpp"

namespace pmsim {

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::strong: return "strong";
    case Mode::protective: return "protective";
    case Mode::generalized: return "generalized";
  }
  return "unknown";
}

Mode mode_from_string(const std::string& name) {
  if (name == "strong") return Mode::strong;
  if (name == "protective") return Mode::protective;
  if (name == "generalized") return Mode::generalized;
  throw ValidationError("unknown mode '" + name + "' (expected strong, protective or generalized)");
}

namespace {

CMatrix pauli(char axis) {
  CMatrix m = CMatrix::Zero(2, 2);
  const cplx i(0.0, 1.0);
  switch (axis) {
    case 'i': m(0, 0) = 1.0; m(1, 1) = 1.0; break;
    case 'x': m(0, 1) = 1.0; m(1, 0) = 1.0; break;
    case 'y': m(0, 1) = -i; m(1, 0) = i; break;
    case 'z': m(0, 0) = 1.0; m(1, 1) = -1.0; break;
    default: throw ValidationError(std::string("unknown Pauli axis '") + axis + "'");
  }
  return m;
}

void need_dim(const std::string& field, std::size_t dim, std::size_t want, const char* kind) {
  if (dim != want) {
    throw ValidationError(field + ": " + kind + " operator has dim " + std::to_string(want) + ", expected " +
                          std::to_string(dim));
  }
}

const PointerGrid& need_grid(const std::string& field, std::size_t dim, const PointerGrid* grid) {
  if (grid == nullptr) throw ValidationError(field + ": grid operators need a pointer grid");
  need_dim(field, dim, grid->n_points(), "grid");
  return *grid;
}

struct OperatorBuilder {
  std::size_t dim;
  const PointerGrid* grid;
  const std::string& field;

  HermitianOperator operator()(const op::Zero&) const { return HermitianOperator::zero(dim); }
  HermitianOperator operator()(const op::Pauli& p) const {
    need_dim(field, dim, 2, "Pauli");
    return HermitianOperator(p.scale * pauli(p.axis));
  }
  HermitianOperator operator()(const op::SpinAxis& s) const {
    need_dim(field, dim, 2, "spin-axis");
    const CMatrix m = std::sin(s.theta) * std::cos(s.phi) * pauli('x') +
                      std::sin(s.theta) * std::sin(s.phi) * pauli('y') + std::cos(s.theta) * pauli('z');
    return HermitianOperator(s.scale * m);
  }
  HermitianOperator operator()(const op::Diagonal& d) const {
    need_dim(field, dim, d.values.size(), "diagonal");
    return HermitianOperator::diagonal(Eigen::Map<const RVector>(d.values.data(), static_cast<Eigen::Index>(dim)));
  }
  HermitianOperator operator()(const op::Matrix& m) const {
    need_dim(field, dim, m.real.size(), "matrix");
    if (!m.imag.empty() && m.imag.size() != dim) throw ValidationError(field + ": imag part has the wrong row count");
    CMatrix out(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (std::size_t r = 0; r < dim; ++r) {
      if (m.real[r].size() != dim || (!m.imag.empty() && m.imag[r].size() != dim)) {
        throw ValidationError(field + ": row " + std::to_string(r) + " has the wrong length");
      }
      for (std::size_t c = 0; c < dim; ++c) {
        out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            cplx(m.real[r][c], m.imag.empty() ? 0.0 : m.imag[r][c]);
      }
    }
    try {
      return HermitianOperator(out);
    } catch (const ValidationError& e) {
      throw ValidationError(field + ": " + e.what());
    }
  }
  HermitianOperator operator()(const op::GridGenerator& g) const {
    const HermitianOperator generator = translation_generator(need_grid(field, dim, grid));
    const Spectrum& s = generator.spectrum();
    return HermitianOperator::from_spectrum(g.scale * s.values, s.vectors);
  }
  HermitianOperator operator()(const op::FreeParticle& f) const {
    if (!(f.mass > 0.0)) throw ValidationError(field + ": mass must be positive");
    const HermitianOperator generator = translation_generator(need_grid(field, dim, grid));
    const Spectrum& s = generator.spectrum();
    return HermitianOperator::from_spectrum(s.values.array().square() / (2.0 * f.mass), s.vectors);
  }
};

CouplingProfile make_profile(const MeasurementConfig& c) {
  if (c.profile.shape == ProfileShape::rectangular) return CouplingProfile::rectangular(c.T);
  return CouplingProfile(c.T, c.profile.shape, c.profile.ramp_fraction);
}

StateVector initial_system_state(const MeasurementConfig& c, const HermitianOperator& h_system, bool check_degeneracy) {
  if (c.initial_system) {
    if (c.initial_system->size() != c.system_dim) {
      throw ValidationError("initial_system has " + std::to_string(c.initial_system->size()) +
                            " amplitudes, expected " + std::to_string(c.system_dim));
    }
    CVector v = Eigen::Map<const CVector>(c.initial_system->data(), static_cast<Eigen::Index>(c.system_dim));
    if (v.norm() == 0.0) throw ValidationError("initial_system is the zero vector");
    return StateVector(v);
  }
  if (check_degeneracy) return nondegenerate_eigenstate(h_system, c.nu_index);
  if (c.nu_index >= c.system_dim) throw ValidationError("nu_index out of range");
  return StateVector(h_system.spectrum().vectors.col(static_cast<Eigen::Index>(c.nu_index)));
}

PropagateOptions options_for(const MeasurementConfig& c) {
  PropagateOptions o;
  o.tolerance = c.tolerance;
  return o;
}

void check_common(const MeasurementConfig& c) {
  if (!(c.T > 0.0) || !std::isfinite(c.T)) throw ValidationError("T must be positive");
  if (c.system_dim < 2) throw ValidationError("system_dim must be at least 2");
  if (c.n_steps != 0 && c.n_steps < 16) throw ValidationError("n_steps must be >= 16 (or 0 for automatic)");
  if (!(c.tolerance > 0.0)) throw ValidationError("tolerance must be positive");
}

}  // namespace

HermitianOperator build_operator(const OperatorSpec& spec, std::size_t dim, const PointerGrid* grid,
                                 const std::string& field) {
  return std::visit(OperatorBuilder{dim, grid, field}, spec);
}

bool operator==(const RunResult& a, const RunResult& b) {
  return a.mode == b.mode && a.T == b.T && a.r0 == b.r0 && a.initial_centroid == b.initial_centroid &&
         a.pointer_centroid == b.pointer_centroid && a.pointer_width == b.pointer_width &&
         a.predicted_shift == b.predicted_shift && a.reduced_system_state.dims() == b.reduced_system_state.dims() &&
         a.reduced_system_state.matrix() == b.reduced_system_state.matrix() && a.disturbance == b.disturbance &&
         a.entanglement_entropy == b.entanglement_entropy && a.validity == b.validity &&
         a.validity_flag == b.validity_flag && a.report == b.report && a.seed == b.seed;
}

// ---------------------------------------------------------------------------
// Readout

PointerReadout readout_distribution(const RVector& coordinates, const RVector& probabilities, double r_min,
                                    double r_max, double edge_band_widths) {
  const Moments m = moments(coordinates, probabilities);
  const double total = probabilities.sum();
  const double band = edge_band_widths * m.width;
  double edge = 0.0;
  for (Eigen::Index j = 0; j < coordinates.size(); ++j) {
    if (coordinates[j] < r_min + band || coordinates[j] > r_max - band) edge += probabilities[j];
  }
  edge /= total;
  if (edge > 0.01) {
    std::ostringstream os;
    os << "pointer marginal has " << edge * 100.0 << "% of its mass within " << edge_band_widths
       << " widths of the box edge; enlarge the pointer box";
    throw WraparoundError(os.str(), edge);
  }
  return {m.mean, m.width, edge};
}

PointerReadout readout(const StateVector& final_state, const PointerGrid& grid, double edge_band_widths) {
  if (final_state.factor_count() < 2 || final_state.dims()[1] != grid.n_points()) {
    throw ValidationError("readout needs a composite state whose factor 1 lives on the pointer grid");
  }
  return readout_distribution(grid.r_values(), marginal_probabilities(final_state, 1), grid.r_min(), grid.r_max(),
                              edge_band_widths);
}

namespace {

struct Summary {
  Mode mode;
  double T;
  double r0;
  double initial_centroid;
  double predicted_shift;
  double validity;
  PropagationReport report;
  std::uint64_t seed;
};

RunResult finish(const Summary& s, const StateVector& final_state, const PointerReadout& pointer,
                 const StateVector& reference) {
  RunResult r;
  r.mode = s.mode;
  r.T = s.T;
  r.r0 = s.r0;
  r.initial_centroid = s.initial_centroid;
  r.pointer_centroid = pointer.centroid;
  r.pointer_width = pointer.width;
  r.predicted_shift = s.predicted_shift;
  r.reduced_system_state = partial_trace(final_state, 0);
  r.disturbance = std::clamp(1.0 - fidelity_pure(r.reduced_system_state, reference), 0.0, 1.0);
  r.entanglement_entropy = von_neumann_entropy(r.reduced_system_state);
  r.validity = s.validity;
  r.validity_flag = s.validity >= kValidityThreshold;
  r.report = s.report;
  r.seed = s.seed;
  return r;
}

double packet_centroid(const PointerGrid& grid, const StateVector& packet) {
  return moments(grid.r_values(), packet.amplitudes().cwiseAbs2()).mean;
}

}  // namespace

// ---------------------------------------------------------------------------
// Strong measurement

StrongResult run_strong(const MeasurementConfig& config) {
  if (config.mode != Mode::strong) throw ModeError("run_strong needs mode = strong");
  check_common(config);
  const PointerGrid grid(config.pointer.n_points, config.pointer.r_min, config.pointer.r_max);
  const HermitianOperator hs = build_operator(config.h_system, config.system_dim, nullptr, "h_system");
  const HermitianOperator qs = build_operator(config.q_system, config.system_dim, nullptr, "q_system");
  const StateVector sys = initial_system_state(config, hs, false);
  const StateVector packet = gaussian_packet(grid, config.packet.r0, config.packet.sigma);
  StateVector entangled = impulsive_propagator(qs, grid, tensor_product(sys, packet));
  return {std::move(entangled), born_weights(sys, qs), grid};
}

double uniform01(std::mt19937_64& engine) { return static_cast<double>(engine() >> 11) * 0x1.0p-53; }

CollapseSampler::CollapseSampler(const StateVector& entangled, const HermitianOperator& q_system)
    : entangled_(entangled), system_vectors_(q_system.spectrum().vectors), spaces_(eigenspaces(q_system)) {
  if (entangled.factor_count() < 2 || entangled.dims()[0] != q_system.dim()) {
    throw ValidationError("collapse sampling needs a composite state whose factor 0 matches Q_S");
  }
  double total = 0.0;
  for (std::size_t b = 0; b < spaces_.size(); ++b) {
    const double w = project(b).squaredNorm();
    branches_.push_back({spaces_[b].eigenvalue, w});
    total += w;
  }
  double running = 0.0;
  for (auto& branch : branches_) {
    branch.probability /= total;
    running += branch.probability;
    cumulative_.push_back(running);
  }
  cumulative_.back() = 1.0;
}

// Unnormalized (P_b (x) 1) |entangled>.
CVector CollapseSampler::project(std::size_t branch) const {
  const auto ds = static_cast<Eigen::Index>(entangled_.dims()[0]);
  const auto rest = static_cast<Eigen::Index>(entangled_.dim()) / ds;
  using RowMajor = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const RowMajor> m(entangled_.amplitudes().data(), ds, rest);
  CMatrix vectors(ds, static_cast<Eigen::Index>(spaces_[branch].columns.size()));
  for (std::size_t k = 0; k < spaces_[branch].columns.size(); ++k) {
    vectors.col(static_cast<Eigen::Index>(k)) = system_vectors_.col(spaces_[branch].columns[k]);
  }
  const RowMajor projected = vectors * (vectors.adjoint() * m);
  return Eigen::Map<const CVector>(projected.data(), ds * rest);
}

std::size_t CollapseSampler::sample_index(std::mt19937_64& engine) const {
  const double u = uniform01(engine);
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), branches_.size() - 1);
}

CollapseOutcome CollapseSampler::sample(std::mt19937_64& engine) const {
  const std::size_t b = sample_index(engine);
  return {branches_[b].eigenvalue, StateVector(project(b), entangled_.dims(), entangled_.labels()),
          branches_[b].probability};
}

CollapseOutcome collapse_sample(const StateVector& entangled, const HermitianOperator& q_system,
                                std::uint64_t rng_seed) {
  std::mt19937_64 engine(rng_seed);
  return CollapseSampler(entangled, q_system).sample(engine);
}

std::vector<long> collapse_counts(const StateVector& entangled, const HermitianOperator& q_system,
                                  std::uint64_t rng_seed, long samples) {
  const CollapseSampler sampler(entangled, q_system);
  std::mt19937_64 engine(rng_seed);
  std::vector<long> counts(sampler.branches().size(), 0);
  for (long k = 0; k < samples; ++k) ++counts[sampler.sample_index(engine)];
  return counts;
}

// ---------------------------------------------------------------------------
// Protective measurement

long automatic_steps(const MeasurementConfig&) { return 64; }

RunResult run_protective(const MeasurementConfig& config) {
  if (config.mode != Mode::protective) throw ModeError("run_protective needs mode = protective");
  check_common(config);
  const PointerGrid grid(config.pointer.n_points, config.pointer.r_min, config.pointer.r_max);
  const HermitianOperator hs = build_operator(config.h_system, config.system_dim, nullptr, "h_system");
  const HermitianOperator qs = build_operator(config.q_system, config.system_dim, nullptr, "q_system");
  const HermitianOperator ha = build_operator(config.h_apparatus, grid.n_points(), &grid, "h_apparatus");
  const HermitianOperator qa = build_operator(config.q_apparatus, grid.n_points(), &grid, "q_apparatus");
  if (!commute(qa, ha)) {
    throw ModeError("Q_A does not commute with H_A; protective mode needs [Q_A, H_A] = 0, use generalized mode");
  }
  const CompositeHamiltonian h(hs, ha, qs, qa, make_profile(config));
  const FirstOrderPrediction prediction = first_order_prediction(h, config.nu_index);
  const StateVector sys = initial_system_state(config, hs, true);
  const StateVector packet = gaussian_packet(grid, config.packet.r0, config.packet.sigma);
  const long n = config.n_steps > 0 ? config.n_steps : automatic_steps(config);
  const Propagation p = propagate(h, tensor_product(sys, packet), n, options_for(config));

  Summary s{Mode::protective, config.T, config.packet.r0, packet_centroid(grid, packet),
            expectation(sys, qs), prediction.validity, p.report, config.rng_seed};
  return finish(s, p.state, readout(p.state, grid), sys);
}

GridRun run_protective_grid(const GridHamiltonian& h, std::size_t nu_index, const PacketSpec& packet_spec,
                            long n_steps, const PropagateOptions& options) {
  const StateVector nu = nondegenerate_eigenstate(h.h_system, nu_index);
  const StateVector packet = gaussian_packet(h.grid, packet_spec.r0, packet_spec.sigma);
  Propagation p = propagate_split(h, tensor_product(nu, packet), n_steps, options);
  const double q_max = M_PI / h.grid.spacing();
  Summary s{Mode::protective, h.profile.total_time(), packet_spec.r0, packet_centroid(h.grid, packet),
            expectation(nu, h.q_system),
            adiabatic_validity(h.h_system, h.q_system, nu_index, q_max, h.profile.total_time()), p.report, 0};
  RunResult r = finish(s, p.state, readout(p.state, h.grid), nu);
  return {std::move(r), std::move(p.state)};
}

RunResult run(const MeasurementConfig& config) {
  switch (config.mode) {
    case Mode::protective: return run_protective(config);
    case Mode::generalized: return run_generalized(config);
    case Mode::strong: {
      const StrongResult sr = run_strong(config);
      const HermitianOperator hs = build_operator(config.h_system, config.system_dim, nullptr, "h_system");
      const HermitianOperator qs = build_operator(config.q_system, config.system_dim, nullptr, "q_system");
      const StateVector sys = initial_system_state(config, hs, false);
      const StateVector packet = gaussian_packet(sr.grid, config.packet.r0, config.packet.sigma);
      Summary s{Mode::strong, config.T, config.packet.r0, packet_centroid(sr.grid, packet), expectation(sys, qs),
                0.0, PropagationReport{}, config.rng_seed};
      return finish(s, sr.entangled, readout(sr.entangled, sr.grid), sys);
    }
  }
  throw ModeError("unknown mode");
}

}  // namespace pmsim
