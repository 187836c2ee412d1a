#pragma once

// Post-processing: T sweeps, log-log scaling fits, convergence order and
// comparison against the first-order prediction.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "pmsim/measurement.hpp"

namespace pmsim {

struct ScalingFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t window_begin = 0;  // [begin, end) into the fitted arrays
  std::size_t window_end = 0;
  double max_residual = 0.0;  // largest |ln y - fit| in the window

  bool operator==(const ScalingFit&) const = default;
};

/// Least squares on (ln x, ln y) over indices [begin, end).
/// Throws DomainError for non-positive values in the window and
/// ValidationError for fewer than four points.
ScalingFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y, std::size_t begin,
                         std::size_t end);
ScalingFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y);

struct SweepResult {
  std::vector<double> t_values;
  std::vector<double> disturbances;
  std::vector<double> entropies;
  std::vector<double> centroid_errors;
  std::vector<double> validities;
  std::vector<long> n_steps;
  std::vector<std::optional<RunResult>> runs;
  std::vector<std::string> errors;  // empty string where the run succeeded
  std::optional<ScalingFit> fit;    // absent when no adiabatic window exists
  /// Disturbance strictly decreasing over points with validity below threshold.
  bool monotone_decreasing = false;

  std::size_t size() const noexcept { return t_values.size(); }
  bool complete() const;
};

/// Worker count: explicit value if > 0, else PMSIM_WORKERS, else hardware threads.
unsigned resolve_workers(unsigned requested);

/// One run per T (seed taken from the base config). Points that fail carry
/// an error message and NaN metrics; results are ordered by T regardless of
/// scheduling.
SweepResult sweep_over_T(const MeasurementConfig& base, const std::vector<double>& t_values, unsigned workers = 0);

/// Indices [begin, end) of the longest contiguous run of points with
/// validity < kValidityThreshold and disturbance > 100 * tolerance.
std::optional<std::pair<std::size_t, std::size_t>> adiabatic_window(const SweepResult& sweep, double tolerance);

struct Discrepancy {
  double centroid_error;  // pointer_centroid - r0 - predicted_shift
  double relative_error;  // |centroid_error| / |predicted_shift|
  double validity;
  bool flagged;
};
Discrepancy compare_to_prediction(const RunResult& result);

/// Spearman rank correlation with average ranks for ties.
double rank_correlation(const std::vector<double>& a, const std::vector<double>& b);

/// Empirical order log2(|psi_n - psi_2n| / |psi_2n - psi_4n|) (max norms).
double step_doubling_order(const CVector& psi_n, const CVector& psi_2n, const CVector& psi_4n);

std::vector<double> log_spaced(double t_min, double t_max, std::size_t points);

/// Log-spaced targets snapped to T_m = (2m + 1) pi / gap, where sudden
/// switching leaves the maximum off-resonant leakage. Throws ValidationError
/// if snapping produces repeated values.
std::vector<double> rabi_aligned_times(double t_min, double t_max, std::size_t points, double gap);

}  // namespace pmsim
