#pragma once

// Preset scenarios: the cold-atom Stern-Gerlach protective measurement and
// small benchmark instances for the protective and generalized modes.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "pmsim/analysis.hpp"
#include "pmsim/measurement.hpp"

namespace pmsim {

namespace si {
inline constexpr double hbar = 1.054571817e-34;        // J s
inline constexpr double bohr_magneton = 9.2740100783e-24;  // J/T
inline constexpr double rb87_mass = 1.443e-25;         // kg
}  // namespace si

using Vec3 = std::array<double, 3>;

/// SI parameters of the cold-atom proposal. The packet parameter epsilon is a
/// position-space length with |psi(x)|^2 proportional to exp(-x^2 / epsilon^2).
struct ColdAtomParams {
  double mass = si::rb87_mass;
  double magnetic_moment = si::bohr_magneton;
  double b0 = 1e-4;  // T
  /// Field gradient B_i (T/m). Absent: calibrated so that the drift
  /// displacement equals `calibration_displacement`.
  std::optional<double> b_gradient;
  Vec3 n0{0.0, 0.0, 1.0};
  Vec3 n{0.8660254037844386, 0.0, 0.5};
  double packet_width = 1e-3;       // epsilon, m
  double interaction_length = 0.3;  // L, m
  double velocity = 0.01;           // v, m/s
  double drift_time = 30.0;         // s
  double calibration_displacement = 0.02;  // m
  /// Richardson tolerance of the full-grid run.
  double tolerance = 1e-5;

  bool operator==(const ColdAtomParams&) const = default;
};

void validate(const ColdAtomParams& p);

/// Interaction time L / v in seconds.
double interaction_time(const ColdAtomParams& p);
double alignment(const ColdAtomParams& p);  // n0 . n

/// B_i = displacement * M / (mu * t_drift * (n0 . n) * 1 s). Throws
/// ValidationError when n0 . n vanishes.
double calibrated_gradient(const ColdAtomParams& p);
/// b_gradient if present, else the calibrated value.
double resolved_gradient(const ColdAtomParams& p);

/// Units with length epsilon, mass M and hbar = 1.
struct ReducedUnits {
  double length;    // m
  double mass;      // kg
  double time;      // s, M epsilon^2 / hbar
  double momentum;  // kg m/s, hbar / epsilon
  double energy;    // J, hbar / time
};
ReducedUnits reduced_units(const ColdAtomParams& p);

/// Cold-atom parameters in reduced units. `kick` multiplies sigma . n in Q_S
/// and equals the momentum transfer for a spin aligned with n; `zeeman` is
/// mu B0.
struct ReducedColdAtom {
  ReducedUnits units;
  double kick;
  double zeeman;
  double interaction_length;
  double velocity;
  double drift_time;
  double calibration_displacement;
  std::optional<double> b_gradient_si;
  Vec3 n0;
  Vec3 n;
  double magnetic_moment_si;
  double tolerance;

  double interaction_time() const { return interaction_length / velocity; }
};
ReducedColdAtom to_reduced(const ColdAtomParams& p);
ColdAtomParams from_reduced(const ReducedColdAtom& r);

enum class FidelityLevel { analytic, full };
std::string to_string(FidelityLevel level);
FidelityLevel level_from_string(const std::string& name);

struct ColdAtomSummary {
  double momentum_shift;    // kg m/s
  double momentum_spread;   // RMS, kg m/s
  double shift_to_spread;
  double final_width;       // sqrt(eps^2 + (hbar T / (M eps))^2) convention, m
  double drift_displacement;  // m
  bool visibility_warning;    // shift/spread < 1
};

struct ColdAtomResult {
  FidelityLevel level;
  double b_gradient;  // T/m actually used
  ColdAtomSummary si;
  std::optional<RunResult> run;  // full level only
  std::size_t grid_points = 0;
  std::vector<std::string> warnings;
};

ColdAtomSummary cold_atom_analytic(const ColdAtomParams& p);
/// Momentum grid (reduced units) for the full-level run. Throws SizingError
/// when the packet cannot be resolved within the dimension limit.
PointerGrid cold_atom_grid(const ColdAtomParams& p);
ColdAtomResult cold_atom_run(const ColdAtomParams& p, FidelityLevel level);

/// Tilted-qubit protective benchmark: H_S = -gap/2 sigma . n(theta),
/// Q_S = sigma_z, 256-point pointer grid on [-20, 20), sigma = 1,
/// rectangular switching.
MeasurementConfig qubit_benchmark_config(double theta, double gap = 2.0);
/// Sweep of the benchmark. The benchmark tolerance is 1e-12 so that the
/// adiabatic fit window is not cut off by the propagation tolerance.
SweepResult qubit_benchmark_run(double theta, const std::vector<double>& t_values, unsigned workers = 0);

/// Two-level system with a 16-level apparatus whose Q_A does not commute with
/// H_A: H_A = diag(0.3 j (1 + 0.05 j)), Q_A = diag((j - 7.5) delta) plus a
/// nearest-neighbour coupling, conjugate spacing 0.25.
MeasurementConfig generalized_benchmark_config(double T, double theta = M_PI / 3.0);

}  // namespace pmsim
