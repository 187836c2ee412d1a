#include "pmsim/scenarios.hpp"

#include <cmath>
#include <sstream>

#include "fourier.hpp"
#include "pmsim/errors.hpp"

namespace pmsim {

namespace {

double norm3(const Vec3& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }
double dot3(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

CMatrix sigma_dot(const Vec3& n) {
  CMatrix m(2, 2);
  m(0, 0) = n[2];
  m(1, 1) = -n[2];
  m(0, 1) = cplx(n[0], -n[1]);
  m(1, 0) = cplx(n[0], n[1]);
  return m;
}

void positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError(std::string(name) + " must be a positive number");
}

std::size_t next_pow2(double x) {
  std::size_t n = 64;
  while (static_cast<double>(n) < x) n <<= 1;
  return n;
}

}  // namespace

void validate(const ColdAtomParams& p) {
  positive(p.mass, "mass");
  positive(p.magnetic_moment, "magnetic_moment");
  positive(p.b0, "b0");
  positive(p.packet_width, "packet_width");
  positive(p.interaction_length, "interaction_length");
  positive(p.velocity, "velocity");
  positive(p.drift_time, "drift_time");
  positive(p.calibration_displacement, "calibration_displacement");
  positive(p.tolerance, "tolerance");
  if (p.b_gradient) positive(*p.b_gradient, "b_gradient");
  if (std::abs(norm3(p.n0) - 1.0) > 1e-12) throw ValidationError("n0 must be a unit vector");
  if (std::abs(norm3(p.n) - 1.0) > 1e-12) throw ValidationError("n must be a unit vector");
}

double interaction_time(const ColdAtomParams& p) { return p.interaction_length / p.velocity; }
double alignment(const ColdAtomParams& p) { return dot3(p.n0, p.n); }

double calibrated_gradient(const ColdAtomParams& p) {
  const double c = alignment(p);
  if (std::abs(c) < 1e-12) {
    throw ValidationError("b_gradient cannot be calibrated when n0 . n = 0; set it explicitly");
  }
  // Momentum transfer mu B_i (n0 . n) x 1 s, drifting for drift_time.
  return p.calibration_displacement * p.mass / (p.magnetic_moment * p.drift_time * c * 1.0);
}

double resolved_gradient(const ColdAtomParams& p) { return p.b_gradient ? *p.b_gradient : calibrated_gradient(p); }

ReducedUnits reduced_units(const ColdAtomParams& p) {
  ReducedUnits u;
  u.length = p.packet_width;
  u.mass = p.mass;
  u.time = p.mass * p.packet_width * p.packet_width / si::hbar;
  u.momentum = si::hbar / p.packet_width;
  u.energy = si::hbar / u.time;
  return u;
}

ReducedColdAtom to_reduced(const ColdAtomParams& p) {
  validate(p);
  const ReducedUnits u = reduced_units(p);
  ReducedColdAtom r{u,
                    p.magnetic_moment * resolved_gradient(p) * 1.0 / u.momentum,
                    p.magnetic_moment * p.b0 / u.energy,
                    p.interaction_length / u.length,
                    p.velocity * u.time / u.length,
                    p.drift_time / u.time,
                    p.calibration_displacement / u.length,
                    p.b_gradient,
                    p.n0,
                    p.n,
                    p.magnetic_moment,
                    p.tolerance};
  return r;
}

ColdAtomParams from_reduced(const ReducedColdAtom& r) {
  ColdAtomParams p;
  p.mass = r.units.mass;
  p.magnetic_moment = r.magnetic_moment_si;
  p.b0 = r.zeeman * r.units.energy / r.magnetic_moment_si;
  p.b_gradient = r.b_gradient_si;
  p.n0 = r.n0;
  p.n = r.n;
  p.packet_width = r.units.length;
  p.interaction_length = r.interaction_length * r.units.length;
  p.velocity = r.velocity * r.units.length / r.units.time;
  p.drift_time = r.drift_time * r.units.time;
  p.calibration_displacement = r.calibration_displacement * r.units.length;
  p.tolerance = r.tolerance;
  return p;
}

std::string to_string(FidelityLevel level) { return level == FidelityLevel::analytic ? "analytic" : "full"; }

FidelityLevel level_from_string(const std::string& name) {
  if (name == "analytic") return FidelityLevel::analytic;
  if (name == "full") return FidelityLevel::full;
  throw ValidationError("unknown fidelity level '" + name + "' (expected analytic or full)");
}

ColdAtomSummary cold_atom_analytic(const ColdAtomParams& p) {
  validate(p);
  const double T = interaction_time(p);
  ColdAtomSummary s;
  s.momentum_shift = p.magnetic_moment * resolved_gradient(p) * alignment(p) * 1.0;
  s.momentum_spread = si::hbar / (std::sqrt(2.0) * p.packet_width);
  s.shift_to_spread = std::abs(s.momentum_shift) / s.momentum_spread;
  const double spread = si::hbar * T / (p.mass * p.packet_width);
  s.final_width = std::sqrt(p.packet_width * p.packet_width + spread * spread);
  s.drift_displacement = s.momentum_shift / p.mass * p.drift_time;
  s.visibility_warning = s.shift_to_spread < 1.0;
  return s;
}

PointerGrid cold_atom_grid(const ColdAtomParams& p) {
  const ReducedColdAtom r = to_reduced(p);
  const double T = r.interaction_time();
  const double shift = r.kick * alignment(p);
  const double sigma_p = 1.0 / std::sqrt(2.0);
  const double sigma_x = std::sqrt(0.5 * (1.0 + T * T));
  const double travel = std::abs(shift) * T / 2.0;
  // Conjugate (position) box holds the travelled packet; dp resolves sigma_p / 4.
  const double span_x = std::max(2.0 * (travel + 10.0 * sigma_x), 8.0 * M_PI / sigma_p);
  const double dp = 2.0 * M_PI / span_x;
  const double p_lo = std::min(0.0, shift) - 12.0 * sigma_p;
  const double p_hi = std::max(0.0, shift) + 12.0 * sigma_p;
  const double needed = (p_hi - p_lo) / dp;
  if (!(2.0 * needed <= static_cast<double>(kMaxCompositeDim))) {
    std::ostringstream os;
    os << "cold-atom momentum grid would need " << needed
       << " points (packet_width too small for the momentum kick); limit is " << kMaxCompositeDim / 2;
    throw SizingError(os.str());
  }
  const std::size_t n = next_pow2(needed);
  const double centre = 0.5 * (p_lo + p_hi);
  return PointerGrid(n, centre - 0.5 * static_cast<double>(n) * dp, centre + 0.5 * static_cast<double>(n) * dp);
}

ColdAtomResult cold_atom_run(const ColdAtomParams& p, FidelityLevel level) {
  ColdAtomResult out;
  out.level = level;
  out.b_gradient = resolved_gradient(p);
  out.si = cold_atom_analytic(p);
  if (level == FidelityLevel::analytic) {
    if (out.si.visibility_warning) out.warnings.push_back("momentum shift is smaller than the momentum spread");
    return out;
  }

  // Reduced units: epsilon = M = hbar = 1. The pointer is the momentum p;
  // Q_A generates momentum translations.
  const ReducedColdAtom r = to_reduced(p);
  const double T = r.interaction_time();
  const double sigma_p = 1.0 / std::sqrt(2.0);
  const PointerGrid grid = cold_atom_grid(p);
  const std::size_t n = grid.n_points();
  out.grid_points = n;

  const GridHamiltonian h{HermitianOperator(-r.zeeman * sigma_dot(p.n0)), HermitianOperator(r.kick * sigma_dot(p.n)),
                          grid, grid.r_values().array().square() / 2.0, CouplingProfile::rectangular(T)};
  PropagateOptions options;
  options.tolerance = p.tolerance;
  GridRun gr = run_protective_grid(h, 0, PacketSpec{0.0, sigma_p}, 1024, options);

  // Position-space width from the conjugate distribution.
  const auto ni = static_cast<Eigen::Index>(n);
  detail::UnitaryFft fft(n);
  RVector k(ni), prob = RVector::Zero(ni);
  CVector row(ni);
  for (Eigen::Index m = 0; m < ni; ++m) k[m] = grid.fft_conjugate_value(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < 2; ++i) {
    fft.forward(gr.final_state.amplitudes().data() + i * ni, row.data());
    prob += row.cwiseAbs2();
  }
  const double width_x = moments(k, prob).width;

  const RunResult& run = gr.result;
  ColdAtomSummary s;
  s.momentum_shift = (run.pointer_centroid - run.initial_centroid) * r.units.momentum;
  s.momentum_spread = run.pointer_width * r.units.momentum;
  s.shift_to_spread = std::abs(s.momentum_shift) / s.momentum_spread;
  s.final_width = std::sqrt(2.0) * width_x * r.units.length;
  s.drift_displacement = s.momentum_shift / p.mass * p.drift_time;
  s.visibility_warning = s.shift_to_spread < 1.0;
  out.si = s;
  out.run = run;
  if (s.visibility_warning) out.warnings.push_back("momentum shift is smaller than the momentum spread");
  if (run.validity_flag) out.warnings.push_back("validity figure above the adiabatic threshold");
  return out;
}

MeasurementConfig qubit_benchmark_config(double theta, double gap) {
  if (!(theta > 0.0 && theta < M_PI)) throw ValidationError("benchmark theta must lie in (0, pi)");
  MeasurementConfig c;
  c.mode = Mode::protective;
  c.h_system = op::SpinAxis{theta, 0.0, -0.5 * gap};
  c.q_system = op::Pauli{'z', 1.0};
  c.profile.shape = ProfileShape::rectangular;
  c.tolerance = 1e-12;
  return c;
}

SweepResult qubit_benchmark_run(double theta, const std::vector<double>& t_values, unsigned workers) {
  return sweep_over_T(qubit_benchmark_config(theta), t_values, workers);
}

MeasurementConfig generalized_benchmark_config(double T, double theta) {
  constexpr int n = 16;
  const double dr = 0.25;
  const double delta = 2.0 * M_PI / (n * dr);
  op::Matrix qa;
  qa.real.assign(n, std::vector<double>(n, 0.0));
  std::vector<double> energies(n);
  for (int j = 0; j < n; ++j) {
    qa.real[j][j] = (j - 7.5) * delta;
    if (j + 1 < n) qa.real[j][j + 1] = qa.real[j + 1][j] = 0.5;
    energies[j] = 0.3 * j * (1.0 + 0.05 * j);
  }
  MeasurementConfig c;
  c.mode = Mode::generalized;
  c.T = T;
  c.apparatus_dim = n;
  c.pointer.n_points = n;
  c.h_system = op::SpinAxis{theta, 0.0, -1.0};
  c.q_system = op::Pauli{'z', 1.0};
  c.h_apparatus = op::Diagonal{energies};
  c.q_apparatus = qa;
  c.profile.shape = ProfileShape::rectangular;
  c.packet.r0 = -0.25;
  c.packet.sigma = std::sqrt(n / (2.0 * M_PI)) * dr;
  return c;
}

}  // namespace pmsim
