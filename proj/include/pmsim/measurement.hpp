#pragma once

// Measurement pipelines: strong (impulsive) measurement with Born sampling,
// protective measurement, its generalized form through the Y operator, and
// pointer readout.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "pmsim/dynamics.hpp"
#include "pmsim/hilbert.hpp"

namespace pmsim {

enum class Mode { strong, protective, generalized };

std::string to_string(Mode mode);
Mode mode_from_string(const std::string& name);

// Operator specifications. Apparatus operators in strong and protective
// modes live on the pointer grid; in generalized mode they are explicit
// matrices of dimension `apparatus_dim`.
namespace op {
struct Zero {
  bool operator==(const Zero&) const = default;
};
/// scale * sigma_axis, axis in {i, x, y, z}
struct Pauli {
  char axis = 'z';
  double scale = 1.0;
  bool operator==(const Pauli&) const = default;
};
/// scale * sigma . n(theta, phi)
struct SpinAxis {
  double theta = 0.0;
  double phi = 0.0;
  double scale = 1.0;
  bool operator==(const SpinAxis&) const = default;
};
struct Diagonal {
  std::vector<double> values;
  bool operator==(const Diagonal&) const = default;
};
struct Matrix {
  std::vector<std::vector<double>> real;
  std::vector<std::vector<double>> imag;  // empty means zero
  bool operator==(const Matrix&) const = default;
};
/// scale * translation generator of the pointer grid
struct GridGenerator {
  double scale = 1.0;
  bool operator==(const GridGenerator&) const = default;
};
/// Q_A^2 / (2 mass) with Q_A the grid translation generator
struct FreeParticle {
  double mass = 1.0;
  bool operator==(const FreeParticle&) const = default;
};
}  // namespace op

using OperatorSpec = std::variant<op::Zero, op::Pauli, op::SpinAxis, op::Diagonal, op::Matrix, op::GridGenerator,
                                  op::FreeParticle>;

/// Builds the operator. `grid` is required for the grid-based kinds.
HermitianOperator build_operator(const OperatorSpec& spec, std::size_t dim, const PointerGrid* grid,
                                 const std::string& field);

struct ProfileSpec {
  ProfileShape shape = ProfileShape::sine_squared_ramp;
  double ramp_fraction = 0.1;
  bool operator==(const ProfileSpec&) const = default;
};

struct GridSpec {
  std::size_t n_points = 256;
  double r_min = -20.0;
  double r_max = 20.0;
  bool operator==(const GridSpec&) const = default;
};

struct PacketSpec {
  double r0 = 0.0;
  double sigma = 1.0;
  bool operator==(const PacketSpec&) const = default;
};

struct MeasurementConfig {
  Mode mode = Mode::protective;
  double T = 100.0;
  long n_steps = 0;  // 0 = automatic
  double tolerance = 1e-8;
  ProfileSpec profile;
  GridSpec pointer;
  PacketSpec packet;
  std::size_t system_dim = 2;
  std::size_t apparatus_dim = 0;  // generalized mode only
  OperatorSpec h_system = op::Zero{};
  OperatorSpec q_system = op::Pauli{'z', 1.0};
  OperatorSpec h_apparatus = op::Zero{};
  OperatorSpec q_apparatus = op::GridGenerator{};
  std::size_t nu_index = 0;
  /// Initial system state; defaults to eigenstate nu_index of H_S.
  std::optional<std::vector<cplx>> initial_system;
  std::uint64_t rng_seed = 0;

  bool operator==(const MeasurementConfig&) const = default;
};

/// Validity figure above which a run is flagged as outside the adiabatic regime.
inline constexpr double kValidityThreshold = 0.05;

struct RunResult {
  Mode mode = Mode::protective;
  double T = 0.0;
  double r0 = 0.0;
  double initial_centroid = 0.0;
  double pointer_centroid = 0.0;
  double pointer_width = 0.0;
  double predicted_shift = 0.0;
  DensityOperator reduced_system_state = DensityOperator(CMatrix::Identity(1, 1));
  double disturbance = 0.0;
  double entanglement_entropy = 0.0;
  double validity = 0.0;
  bool validity_flag = false;  // validity >= kValidityThreshold
  PropagationReport report;
  std::uint64_t seed = 0;
};

bool operator==(const RunResult& a, const RunResult& b);

struct PointerReadout {
  double centroid;
  double width;
  double edge_mass;
};

/// Centroid and RMS width of the pointer marginal (factor 1 of `final`).
/// Throws WraparoundError when more than 1% of the mass lies within
/// `edge_band_widths` widths of the box edge.
PointerReadout readout(const StateVector& final_state, const PointerGrid& grid, double edge_band_widths = 4.0);
PointerReadout readout_distribution(const RVector& coordinates, const RVector& probabilities, double r_min,
                                    double r_max, double edge_band_widths = 4.0);

struct CollapseOutcome {
  double eigenvalue;
  StateVector post_state;
  double probability;
};

struct StrongResult {
  StateVector entangled;
  std::vector<BornOutcome> outcomes;
  PointerGrid grid;
};

StrongResult run_strong(const MeasurementConfig& config);

/// Born sampling of the branches of `entangled` labelled by the eigenspaces
/// of `q_system` acting on factor 0.
class CollapseSampler {
 public:
  CollapseSampler(const StateVector& entangled, const HermitianOperator& q_system);

  CollapseOutcome sample(std::mt19937_64& engine) const;
  /// Index into branches() of a sampled branch.
  std::size_t sample_index(std::mt19937_64& engine) const;
  const std::vector<BornOutcome>& branches() const noexcept { return branches_; }

 private:
  CVector project(std::size_t branch) const;

  StateVector entangled_;
  CMatrix system_vectors_;
  std::vector<Eigenspace> spaces_;
  std::vector<BornOutcome> branches_;
  std::vector<double> cumulative_;
};

/// Uniform double in [0, 1) from the top 53 bits of one engine draw.
double uniform01(std::mt19937_64& engine);

CollapseOutcome collapse_sample(const StateVector& entangled, const HermitianOperator& q_system,
                                std::uint64_t rng_seed);
/// Counts per branch (ordered as CollapseSampler::branches) over `samples` draws.
std::vector<long> collapse_counts(const StateVector& entangled, const HermitianOperator& q_system,
                                  std::uint64_t rng_seed, long samples);

RunResult run_protective(const MeasurementConfig& config);

/// Protective run on a pointer grid propagated by the split-operator path
/// (H_A diagonal on the grid, Q_A the grid translation generator).
struct GridRun {
  RunResult result;
  StateVector final_state;
};
GridRun run_protective_grid(const GridHamiltonian& h, std::size_t nu_index, const PacketSpec& packet, long n_steps,
                            const PropagateOptions& options);

/// Y = sum_j <a_j|Q_A|a_j> |a_j><a_j| over the eigenstates of H_A.
HermitianOperator construct_y_operator(const HermitianOperator& q_apparatus, const HermitianOperator& h_apparatus);

/// Pointer coordinate conjugate to Y: discrete Fourier transform over the Y
/// eigenbasis ordered by eigenvalue.
struct ConjugateCoordinate {
  PointerGrid grid;        // R values, spacing 2 pi / (n delta)
  CMatrix to_apparatus;    // columns: |R_m> in the apparatus basis
  RVector apparatus_energies;  // H_A eigenvalue of each Y eigenvector, same order
  CMatrix y_vectors;           // Y eigenvectors (apparatus basis), ascending
  RVector y_values;
};
ConjugateCoordinate conjugate_coordinate(const HermitianOperator& q_apparatus, const HermitianOperator& h_apparatus);

RunResult run_generalized(const MeasurementConfig& config);

/// Dispatches on config.mode (strong runs report the impulsive pointer state).
RunResult run(const MeasurementConfig& config);

/// Number of starting steps used when config.n_steps is automatic.
long automatic_steps(const MeasurementConfig& config);

}  // namespace pmsim
