#pragma once

// Coupled system-apparatus dynamics
//
//   H(t) = H_S (x) 1 + 1 (x) H_A + g(t) Q_S (x) Q_A,   int_0^T g(t) dt = 1,
//
// propagated as a time-ordered product of step exponentials. Each step uses
// the exact average of g over the step, so the sliced coupling integrates to
// one for any step count and a rectangular profile is propagated exactly.

#include <cstddef>
#include <optional>

#include "pmsim/hilbert.hpp"

namespace pmsim {

enum class ProfileShape { sine_squared_ramp, rectangular };

/// Switching function g(t) on [0, T] normalized to unit integral.
///
/// The sine-squared shape ramps up over f*T as h*sin^2(pi t / (2 f T)), holds
/// the plateau h = 1 / (T (1 - f)) and ramps down symmetrically.
class CouplingProfile {
 public:
  explicit CouplingProfile(double total_time, ProfileShape shape = ProfileShape::sine_squared_ramp,
                           double ramp_fraction = 0.1);
  static CouplingProfile rectangular(double total_time) {
    return CouplingProfile(total_time, ProfileShape::rectangular, 0.0);
  }

  double total_time() const noexcept { return total_time_; }
  double ramp_fraction() const noexcept { return ramp_fraction_; }
  ProfileShape shape() const noexcept { return shape_; }
  double plateau_height() const noexcept { return plateau_; }

  /// g(t); throws DomainError outside [0, T].
  double operator()(double t) const;
  /// int_0^t g(s) ds, closed form.
  double integral(double t) const;
  /// Mean of g over [t0, t1].
  double average(double t0, double t1) const;

  bool operator==(const CouplingProfile&) const = default;

 private:
  double total_time_;
  ProfileShape shape_;
  double ramp_fraction_;
  double plateau_;
};

double evaluate_profile(const CouplingProfile& profile, double t);

class CompositeHamiltonian {
 public:
  CompositeHamiltonian(HermitianOperator h_system, HermitianOperator h_apparatus, HermitianOperator q_system,
                       HermitianOperator q_apparatus, CouplingProfile profile);

  const HermitianOperator& h_system() const noexcept { return h_system_; }
  const HermitianOperator& h_apparatus() const noexcept { return h_apparatus_; }
  const HermitianOperator& q_system() const noexcept { return q_system_; }
  const HermitianOperator& q_apparatus() const noexcept { return q_apparatus_; }
  const CouplingProfile& profile() const noexcept { return profile_; }
  std::size_t system_dim() const noexcept { return h_system_.dim(); }
  std::size_t apparatus_dim() const noexcept { return h_apparatus_.dim(); }
  std::size_t dim() const noexcept { return system_dim() * apparatus_dim(); }

  /// Same physics with a different profile.
  CompositeHamiltonian with_profile(CouplingProfile profile) const;

 private:
  HermitianOperator h_system_;
  HermitianOperator h_apparatus_;
  HermitianOperator q_system_;
  HermitianOperator q_apparatus_;
  CouplingProfile profile_;
};

/// H(t) as a dense operator on the composite space.
HermitianOperator assemble(const CompositeHamiltonian& h, double t);
/// H for an explicit coupling value g instead of g(t).
HermitianOperator assemble_with_coupling(const CompositeHamiltonian& h, double g);

enum class PropagationMethod { dense, apparatus_blocks, split_operator };

struct PropagationReport {
  long n_steps = 0;
  double step_size = 0.0;
  double richardson_error_estimate = 0.0;
  double norm_drift = 0.0;
  PropagationMethod method = PropagationMethod::dense;

  bool operator==(const PropagationReport&) const = default;
};

struct PropagateOptions {
  /// Accept when max |psi_N - psi_{N/2}| / 3 falls below this.
  double tolerance = 1e-8;
  /// Doubling cap.
  long max_steps = long{1} << 20;
  /// Double the step count until the tolerance is met; otherwise report only.
  bool refine = true;
  /// Skip the apparatus block decomposition even when [Q_A, H_A] = 0.
  bool force_dense = false;
};

struct Propagation {
  StateVector state;
  PropagationReport report;
};

/// Time-ordered propagation over [0, T] starting from `n_steps` slices
/// (n_steps >= 16), with a Richardson estimate from an n_steps/2 run.
/// Throws ConvergenceError when the doubling cap is reached.
Propagation propagate(const CompositeHamiltonian& h, const StateVector& initial, long n_steps,
                      const PropagateOptions& options = {});

/// The bare sliced product with a fixed step count (no error control).
StateVector time_ordered_product(const CompositeHamiltonian& h, const StateVector& initial, long n_steps,
                                 bool force_dense = false);

/// True when [a, b] vanishes to `rel_tol` relative to |a| |b|.
bool commute(const HermitianOperator& a, const HermitianOperator& b, double rel_tol = 1e-10);

/// Apparatus on a pointer grid with H_A diagonal in the grid coordinate and
/// Q_A the grid translation generator. Propagated by Strang splitting with FFTs,
/// so the grid may be far larger than a dense operator allows.
struct GridHamiltonian {
  HermitianOperator h_system;
  HermitianOperator q_system;
  PointerGrid grid;
  RVector apparatus_potential;  // H_A on the grid points
  CouplingProfile profile;
};

Propagation propagate_split(const GridHamiltonian& h, const StateVector& initial, long n_steps,
                            const PropagateOptions& options = {});
StateVector split_product(const GridHamiltonian& h, const StateVector& initial, long n_steps);

/// Strong impulsive coupling with free Hamiltonians neglected:
/// exp(-i coupling Q_S (x) Q_A) applied to `initial` (dims {d_S, N}).
/// Throws SizingError if a populated branch would be translated to within
/// four of its widths of the box edge.
StateVector impulsive_propagator(const HermitianOperator& q_system, const PointerGrid& grid,
                                 const StateVector& initial, double coupling = 1.0);

struct FirstOrderPrediction {
  double shift;        // <nu|Q_S|nu>
  double final_phase;  // E_nu * T
  double validity;     // max_mu |<mu|Q_S|nu>| q_A,max / (T |E_mu - E_nu|)
};

/// Throws PreconditionError when eigenstate `nu_index` of H_S is degenerate.
FirstOrderPrediction first_order_prediction(const CompositeHamiltonian& h, std::size_t nu_index);

/// Validity figure for explicit operators (q_apparatus_max = spectral radius of Q_A).
double adiabatic_validity(const HermitianOperator& h_system, const HermitianOperator& q_system,
                          std::size_t nu_index, double q_apparatus_max, double total_time);

/// Eigenvector `index` of `h` after checking it is non-degenerate.
StateVector nondegenerate_eigenstate(const HermitianOperator& h, std::size_t index);

}  // namespace pmsim
