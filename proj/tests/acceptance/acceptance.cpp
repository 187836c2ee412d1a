// Acceptance suite: one PASS/FAIL line per criterion; exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "pmsim/analysis.hpp"
#include "pmsim/config.hpp"
#include "pmsim/errors.hpp"
#include "pmsim/io.hpp"
#include "pmsim/scenarios.hpp"

using namespace pmsim;
namespace fs = std::filesystem;

namespace tol {
constexpr double kShiftRel = 0.01;          // 1
constexpr double kRuntimeSeconds = 60.0;    // 1
constexpr double kSlopeLo = -2.3;           // 2
constexpr double kSlopeHi = -1.7;           // 2
constexpr double kRSquared = 0.98;          // 2
constexpr double kFixedPoint = 1e-8;        // 3
constexpr double kImpulsive = 1e-8;         // 4
constexpr long kSamples = 10000;            // 5
constexpr double kBandSigmas = 3.0;         // 5
constexpr double kOrderLo = 1.8;            // 6
constexpr double kOrderHi = 2.2;            // 6
constexpr double kNormDrift = 1e-8;         // 6
constexpr double kColdAtomRel = 0.02;       // 7
constexpr double kDisplacementRel = 0.10;   // 7
constexpr double kGeneralizedRel = 0.05;    // 8
constexpr double kYReduction = 1e-10;       // 8
constexpr double kSequentialRel = 0.02;     // 9
}  // namespace tol

namespace {

constexpr double kGap = 2.0;
const double kTheta = M_PI / 3.0;

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

std::vector<double> benchmark_times() { return rabi_aligned_times(50.0 / kGap, 5000.0 / kGap, 12, kGap); }

// Shared between criteria 1 and 2.
SweepResult g_sweep;
double g_sweep_seconds = 0.0;

Outcome criterion1() {
  const auto start = std::chrono::steady_clock::now();
  g_sweep = qubit_benchmark_run(kTheta, benchmark_times());
  g_sweep_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!g_sweep.complete()) return {false, "sweep has failed points: " + g_sweep.errors.back()};
  const RunResult& last = *g_sweep.runs.back();
  const double shift = last.pointer_centroid - last.r0;
  const bool ok = rel(shift, 0.5) < tol::kShiftRel && g_sweep_seconds <= tol::kRuntimeSeconds;
  return {ok, fmt("T*gap=%.1f shift=%.8f rel.err=%.2e runtime=%.1fs", last.T * kGap, shift, rel(shift, 0.5),
                  g_sweep_seconds)};
}

Outcome criterion2() {
  if (!g_sweep.fit) return {false, "no adiabatic window"};
  const ScalingFit& f = *g_sweep.fit;
  const bool ok = f.slope >= tol::kSlopeLo && f.slope <= tol::kSlopeHi && f.r_squared > tol::kRSquared;
  return {ok, fmt("slope=%.4f r2=%.6f window=[%.0f,%.0f)", f.slope, f.r_squared, static_cast<double>(f.window_begin),
                  static_cast<double>(f.window_end))};
}

Outcome criterion3() {
  MeasurementConfig c;
  c.h_system = op::Pauli{'z', -1.0};
  c.q_system = op::Pauli{'z', 1.0};
  c.h_apparatus = op::FreeParticle{1e3};  // commutes with the grid generator; heavy so the packet stays in the box
  c.pointer = {256, -40, 40};
  c.packet = {0.0, 4.0};
  const SweepResult s = sweep_over_T(c, log_spaced(50.0 / kGap, 5000.0 / kGap, 8));
  if (!s.complete()) return {false, "sweep has failed points"};
  double worst_d = 0.0, worst_s = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    worst_d = std::max(worst_d, s.disturbances[i]);
    worst_s = std::max(worst_s, s.entropies[i]);
  }
  return {worst_d < tol::kFixedPoint && worst_s < tol::kFixedPoint,
          fmt("max disturbance=%.2e max entropy=%.2e over %.0f T values", worst_d, worst_s, static_cast<double>(s.size()))};
}

Outcome criterion4() {
  const PointerGrid grid(256, -20, 20);
  CVector psi(2);
  psi << std::sqrt(0.25), std::sqrt(0.75);
  const HermitianOperator qs = build_operator(op::Pauli{'z', 1.0}, 2, nullptr, "q");
  const StateVector init = tensor_product(StateVector(psi), gaussian_packet(grid, 0.0, 1.0));
  const StateVector closed = impulsive_propagator(qs, grid, init);
  const CompositeHamiltonian h(HermitianOperator::zero(2), HermitianOperator::zero(256), qs, translation_generator(grid),
                               CouplingProfile::rectangular(1.0));
  PropagateOptions o;
  o.force_dense = true;
  const Propagation generic = propagate(h, init, 16, o);
  const double dev = (closed.amplitudes() - generic.state.amplitudes()).cwiseAbs().maxCoeff();
  return {dev < tol::kImpulsive, fmt("max amplitude deviation=%.2e", dev)};
}

Outcome criterion5() {
  MeasurementConfig c;
  c.mode = Mode::strong;
  c.initial_system = std::vector<cplx>{std::sqrt(0.25), std::sqrt(0.75)};
  const StrongResult sr = run_strong(c);
  const HermitianOperator qs = build_operator(c.q_system, 2, nullptr, "q");
  const std::uint64_t seed = 20240611;
  const auto counts = collapse_counts(sr.entangled, qs, seed, tol::kSamples);
  const auto again = collapse_counts(sr.entangled, qs, seed, tol::kSamples);
  const CollapseSampler sampler(sr.entangled, qs);
  bool ok = counts == again;
  std::string detail;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double p = sampler.branches()[i].probability;
    const double mean = p * tol::kSamples, sd = std::sqrt(tol::kSamples * p * (1 - p));
    ok = ok && std::abs(counts[i] - mean) <= tol::kBandSigmas * sd;
    detail += fmt("s=%+.0f: %.0f (expected %.0f +- %.1f) ", sampler.branches()[i].eigenvalue,
                  static_cast<double>(counts[i]), mean, tol::kBandSigmas * sd);
  }
  return {ok, detail + (counts == again ? "deterministic" : "NOT deterministic")};
}

Outcome criterion6() {
  MeasurementConfig c = qubit_benchmark_config(kTheta, kGap);
  c.profile = {ProfileShape::sine_squared_ramp, 0.1};
  c.T = 50.0 / kGap;
  const PointerGrid grid(c.pointer.n_points, c.pointer.r_min, c.pointer.r_max);
  const CompositeHamiltonian h(build_operator(c.h_system, 2, nullptr, "h"), HermitianOperator::zero(grid.n_points()),
                               build_operator(c.q_system, 2, nullptr, "q"), translation_generator(grid),
                               CouplingProfile(c.T, c.profile.shape, c.profile.ramp_fraction));
  const StateVector init = tensor_product(nondegenerate_eigenstate(h.h_system(), 0), gaussian_packet(grid, 0.0, 1.0));
  const long n = 256;
  const CVector a = time_ordered_product(h, init, n).amplitudes();
  const CVector b = time_ordered_product(h, init, 2 * n).amplitudes();
  const CVector d = time_ordered_product(h, init, 4 * n).amplitudes();
  const double order = step_doubling_order(a, b, d);
  PropagateOptions o;
  o.tolerance = 1e-9;
  const Propagation p = propagate(h, init, 64, o);
  const bool ok = order >= tol::kOrderLo && order <= tol::kOrderHi && p.report.norm_drift < tol::kNormDrift;
  return {ok, fmt("order=%.4f (n=%.0f,2n,4n) norm drift=%.2e", order, static_cast<double>(n), p.report.norm_drift)};
}

Outcome criterion7() {
  const ColdAtomParams p;  // calibrated B_i
  const ColdAtomResult analytic = cold_atom_run(p, FidelityLevel::analytic);
  const ColdAtomResult full = cold_atom_run(p, FidelityLevel::full);
  const double e_shift = rel(full.si.momentum_shift, analytic.si.momentum_shift);
  const double e_width = rel(full.si.final_width, analytic.si.final_width);
  const double e_disp = rel(full.si.drift_displacement, 0.02);
  const bool ok = e_shift < tol::kColdAtomRel && e_width < tol::kColdAtomRel && e_disp < tol::kDisplacementRel;
  return {ok, fmt("shift rel.err=%.2e width rel.err=%.2e displacement=%.5f m (B_i=%.4e T/m)", e_shift, e_width,
                  full.si.drift_displacement, full.b_gradient)};
}

Outcome criterion8() {
  std::vector<double> ts;
  for (double k : {20.0, 100.0, 400.0, 2000.0}) ts.push_back(k * M_PI);
  double shift = 0.0, predicted = 0.0;
  for (double T : ts) {
    const RunResult r = run_generalized(generalized_benchmark_config(T));
    shift = r.pointer_centroid - r.initial_centroid;
    predicted = r.predicted_shift;
  }
  const double e = rel(shift, predicted);

  // Commuting apparatus: Y must reduce to Q_A.
  MeasurementConfig c = generalized_benchmark_config(ts.back());
  auto qa = std::get<op::Matrix>(c.q_apparatus);
  for (std::size_t j = 0; j + 1 < qa.real.size(); ++j) qa.real[j][j + 1] = qa.real[j + 1][j] = 0.0;
  const HermitianOperator q = build_operator(qa, 16, nullptr, "q");
  const HermitianOperator ha = build_operator(c.h_apparatus, 16, nullptr, "h");
  const double y_dev = (construct_y_operator(q, ha).matrix() - q.matrix()).cwiseAbs().maxCoeff();
  return {e < tol::kGeneralizedRel && y_dev < tol::kYReduction,
          fmt("T=%.1f shift=%.6f predicted=%.6f rel.err=%.2e", ts.back(), shift, predicted, e) +
              fmt("; commuting case max|Y - Q_A|=%.1e", y_dev)};
}

Outcome criterion9() {
  MeasurementConfig c = qubit_benchmark_config(kTheta, kGap);
  c.T = 2001 * M_PI / kGap;
  const RunResult first = run(c);
  const StateVector next = first.reduced_system_state.dominant_state();
  MeasurementConfig d = c;
  d.q_system = op::Pauli{'x', 1.0};
  d.initial_system = std::vector<cplx>(next.amplitudes().data(), next.amplitudes().data() + 2);
  const RunResult second = run(d);
  const double sz = first.pointer_centroid - first.r0, sx = second.pointer_centroid - second.r0;
  const double ez = rel(sz, std::cos(kTheta)), ex = rel(sx, std::sin(kTheta));
  return {ez < tol::kSequentialRel && ex < tol::kSequentialRel,
          fmt("<sz>: %.6f (rel.err %.2e), then <sx>: %.6f (rel.err %.2e)", sz, ez, sx, ex)};
}

Outcome criterion10() {
  const fs::path root = fs::temp_directory_path() / "pmsim_acceptance_io";
  fs::remove_all(root);
  MeasurementConfig c = qubit_benchmark_config(kTheta, kGap);
  c.rng_seed = 12345;
  const auto ts = rabi_aligned_times(25.0, 1000.0, 5, kGap);
  for (const char* dir : {"a", "b"}) {
    const SweepResult s = sweep_over_T(c, ts);
    emit_results(s, OutputFormat::csv, root / dir, RunManifest{c, code_version(), c.rng_seed, utc_timestamp(), "", {}});
  }
  const bool same_csv = read_text_file(root / "a" / "results.csv") == read_text_file(root / "b" / "results.csv");

  c.T = ts[2];
  const RunResult r = run(c);
  emit_results(r, OutputFormat::json, root / "json", RunManifest{c, code_version(), c.rng_seed, utc_timestamp(), "", {}});
  const bool json_rt = run_result_from_json(read_text_file(root / "json" / "results.json")) == r;
  const RunManifest m = manifest_from_json(read_text_file(root / "json" / "manifest.json"));
  const bool manifest_rt = manifest_from_json(manifest_to_json(m)) == m && std::get<MeasurementConfig>(m.config) == c;

  const bool config_rt = std::get<MeasurementConfig>(parse_config_text(config_to_json(c)).config) == c &&
                         std::get<ColdAtomParams>(parse_config_text(config_to_json(ColdAtomParams{})).config) ==
                             ColdAtomParams{};
  const auto yes = [](bool b) { return b ? "yes" : "no"; };
  return {same_csv && json_rt && manifest_rt && config_rt,
          std::string("byte-identical CSV: ") + yes(same_csv) + ", JSON round trip: " + yes(json_rt) +
              ", manifest round trip: " + yes(manifest_rt) + ", config round trip: " + yes(config_rt)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"1 protective shift law", criterion1},
      {"2 disturbance scaling 1/T^2", criterion2},
      {"3 exact fixed point", criterion3},
      {"4 strong-measurement oracle", criterion4},
      {"5 Born statistics", criterion5},
      {"6 propagator order", criterion6},
      {"7 cold-atom closed forms", criterion7},
      {"8 generalized mode", criterion8},
      {"9 sequential protective measurements", criterion9},
      {"10 determinism and I/O", criterion10},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s criterion %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
