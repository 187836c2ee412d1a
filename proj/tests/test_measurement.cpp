#include <cmath>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "pmsim/errors.hpp"
#include "pmsim/measurement.hpp"
#include "pmsim/scenarios.hpp"

using namespace pmsim;
using namespace testing;

namespace {

MeasurementConfig strong_config(std::vector<cplx> amps) {
  MeasurementConfig c;
  c.mode = Mode::strong;
  c.initial_system = std::move(amps);
  return c;
}

MeasurementConfig commuting_config(double T) {
  MeasurementConfig c;
  c.T = T;
  c.h_system = op::Pauli{'z', -1.0};
  c.q_system = op::Pauli{'z', 1.0};
  c.pointer = {128, -16, 16};
  return c;
}

}  // namespace

TEST_CASE("mode names") {
  for (Mode m : {Mode::strong, Mode::protective, Mode::generalized}) CHECK(mode_from_string(to_string(m)) == m);
  CHECK_THROWS_AS(mode_from_string("weak"), ValidationError);
}

TEST_CASE("build_operator") {
  const HermitianOperator s = build_operator(op::SpinAxis{M_PI / 2, 0.0, 2.0}, 2, nullptr, "x");
  CHECK(max_abs(s.matrix() - 2.0 * pauli('x')) < 1e-15);
  CHECK_THROWS_AS(build_operator(op::Pauli{'z', 1.0}, 3, nullptr, "system.Q"), ValidationError);
  CHECK_THROWS_AS(build_operator(op::GridGenerator{}, 8, nullptr, "apparatus.Q"), ValidationError);
  op::Matrix m;
  m.real = {{1, 2}, {2, 1}};
  m.imag = {{0, 1}, {-1, 0}};
  const HermitianOperator a = build_operator(m, 2, nullptr, "m");
  CHECK(a.matrix()(0, 1) == cplx(2, 1));
  m.imag = {{0, 1}, {1, 0}};
  CHECK_THROWS_AS(build_operator(m, 2, nullptr, "m"), ValidationError);
  const PointerGrid grid(16, -4, 4);
  const HermitianOperator kin = build_operator(op::FreeParticle{2.0}, 16, &grid, "apparatus.H");
  const CMatrix q = translation_generator(grid).matrix();
  CHECK(max_abs(kin.matrix() - q * q / 4.0) < 1e-12);
}

TEST_CASE("strong measurement: eigenstate input has a single outcome") {
  const StrongResult r = run_strong(strong_config({0.0, 1.0}));
  double total = 0.0;
  for (const auto& o : r.outcomes) {
    if (o.eigenvalue < 0) CHECK(o.probability == doctest::Approx(1.0));
    total += o.probability;
  }
  CHECK(total == doctest::Approx(1.0));
}

TEST_CASE("strong measurement: Born weights and marginal mixture") {
  const MeasurementConfig c = strong_config({std::sqrt(0.25), std::sqrt(0.75)});
  const StrongResult r = run_strong(c);
  const auto oracle = born_weights(qubit(0.5, std::sqrt(0.75)), pop('z'));
  REQUIRE(r.outcomes.size() == oracle.size());
  for (std::size_t i = 0; i < oracle.size(); ++i) {
    CHECK(r.outcomes[i].eigenvalue == doctest::Approx(oracle[i].eigenvalue));
    CHECK(r.outcomes[i].probability == doctest::Approx(oracle[i].probability).epsilon(1e-12));
  }
  // marginal: 0.25 |phi(r - 1)|^2 + 0.75 |phi(r + 1)|^2
  const RVector marg = marginal_probabilities(r.entangled, 1);
  const StateVector up = gaussian_packet(r.grid, 1.0, 1.0), down = gaussian_packet(r.grid, -1.0, 1.0);
  const RVector mix = 0.25 * up.amplitudes().cwiseAbs2() + 0.75 * down.amplitudes().cwiseAbs2();
  CHECK((marg - mix).cwiseAbs().maxCoeff() < 1e-10);
  // the entangled state equals the impulsive propagator output
  const StateVector ref = impulsive_propagator(pop('z'), r.grid, tensor_product(qubit(0.5, std::sqrt(0.75)),
                                                                                gaussian_packet(r.grid, 0.0, 1.0)));
  CHECK(max_abs(ref.amplitudes() - r.entangled.amplitudes()) < 1e-12);
}

TEST_CASE("collapse sampling") {
  const StrongResult single = run_strong(strong_config({1.0, 0.0}));
  const CollapseOutcome o = collapse_sample(single.entangled, pop('z'), 3);
  CHECK(o.eigenvalue == doctest::Approx(1.0));
  CHECK(o.probability == doctest::Approx(1.0));

  const StrongResult r = run_strong(strong_config({std::sqrt(0.25), std::sqrt(0.75)}));
  const CollapseOutcome a = collapse_sample(r.entangled, pop('z'), 42);
  const CollapseOutcome b = collapse_sample(r.entangled, pop('z'), 42);
  CHECK(a.eigenvalue == b.eigenvalue);
  CHECK(max_abs(a.post_state.amplitudes() - b.post_state.amplitudes()) == 0.0);
  // post state is the normalized branch |s_i> (x) phi(r0 + s_i)
  const std::size_t k = a.eigenvalue > 0 ? 0 : 1;
  const StateVector branch = tensor_product(StateVector::basis({2}, k), gaussian_packet(r.grid, a.eigenvalue, 1.0));
  CHECK(std::abs(std::abs(branch.amplitudes().dot(a.post_state.amplitudes())) - 1.0) < 1e-10);
  const double expected = a.eigenvalue > 0 ? 0.25 : 0.75;
  CHECK(a.probability == doctest::Approx(expected).epsilon(1e-10));

  const long n = 10000;
  const auto counts = collapse_counts(r.entangled, pop('z'), 2024, n);
  CollapseSampler sampler(r.entangled, pop('z'));
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double p = sampler.branches()[i].probability;
    const double sd = std::sqrt(n * p * (1 - p));
    CHECK(std::abs(counts[i] - n * p) <= 3 * sd);
  }
  CHECK(collapse_counts(r.entangled, pop('z'), 2024, n) == counts);
}

TEST_CASE("uniform01 uses the top 53 bits") {
  std::mt19937_64 a(5), b(5);
  const double u = uniform01(a);
  CHECK(u == static_cast<double>(b() >> 11) / 9007199254740992.0);
  for (int i = 0; i < 1000; ++i) {
    const double v = uniform01(a);
    CHECK(v >= 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("protective: commuting case is exact at any T") {
  for (double T : {2.0, 50.0, 1000.0}) {
    const RunResult r = run_protective(commuting_config(T));
    CHECK(std::abs(r.pointer_centroid - r.r0 - 1.0) < 1e-6);
    CHECK(r.disturbance < 1e-8);
    CHECK(r.entanglement_entropy < 1e-8);
    CHECK(r.report.method == PropagationMethod::apparatus_blocks);
  }
}

TEST_CASE("protective: tilted qubit at large and small T") {
  MeasurementConfig c = qubit_benchmark_config(M_PI / 3);
  c.tolerance = 1e-9;
  c.T = 2001 * M_PI / 2;
  const RunResult big = run_protective(c);
  CHECK(big.validity < 1e-3 * 4);
  CHECK(std::abs(big.pointer_centroid - big.r0 - 0.5) < 0.005);
  CHECK(big.predicted_shift == doctest::Approx(0.5));

  c.T = 3 * M_PI / 2;
  const RunResult small = run_protective(c);
  CHECK(small.validity_flag);
  CHECK(small.disturbance > 1e-3);
  CHECK(std::abs(small.pointer_centroid - small.r0 - 0.5) > std::abs(big.pointer_centroid - big.r0 - 0.5));
  CHECK(small.disturbance > big.disturbance);
  CHECK(small.disturbance <= 1.0);
  CHECK(small.entanglement_entropy <= std::log(2.0) + 1e-8);
}

TEST_CASE("protective: precondition and mode errors") {
  MeasurementConfig c = commuting_config(10);
  c.h_system = op::Zero{};
  CHECK_THROWS_AS(run_protective(c), PreconditionError);
  c = commuting_config(10);
  c.h_apparatus = op::Diagonal{std::vector<double>(128, 0.0)};
  std::get<op::Diagonal>(c.h_apparatus).values[3] = 1.0;
  CHECK_THROWS_AS(run_protective(c), ModeError);
  c = commuting_config(10);
  c.mode = Mode::generalized;
  CHECK_THROWS_AS(run_protective(c), ModeError);
}

TEST_CASE("strong versus protective pointer marginals") {
  // strong mode on the 0.25/0.75 state: two well separated peaks
  MeasurementConfig s = strong_config({0.5, std::sqrt(0.75)});
  s.packet.sigma = 0.3;
  s.pointer = {512, -10, 10};
  const StrongResult sr = run_strong(s);
  const RVector m = marginal_probabilities(sr.entangled, 1);
  const RVector& r = sr.grid.r_values();
  int peaks = 0;
  for (Eigen::Index j = 1; j + 1 < m.size(); ++j) {
    if (m[j] > m[j - 1] && m[j] >= m[j + 1] && m[j] > 1e-3 * m.maxCoeff()) ++peaks;
  }
  CHECK(peaks == 2);
  (void)r;
  // protective mode on the matching tilted qubit: one peak at the expectation
  MeasurementConfig p = qubit_benchmark_config(2 * std::acos(0.5));
  p.T = 401 * M_PI / 2;
  p.tolerance = 1e-9;
  const RunResult pr = run(p);
  CHECK(pr.predicted_shift == doctest::Approx(-0.5).epsilon(1e-9));
  CHECK(pr.pointer_centroid - pr.r0 == doctest::Approx(-0.5).epsilon(0.02));
  CHECK(pr.pointer_width == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("sequential protective measurements") {
  MeasurementConfig c = qubit_benchmark_config(M_PI / 3);
  c.T = 1001 * M_PI / 2;
  c.tolerance = 1e-9;
  const RunResult first = run_protective(c);
  const StateVector next = first.reduced_system_state.dominant_state();
  MeasurementConfig d = c;
  d.q_system = op::Pauli{'x', 1.0};
  d.initial_system = std::vector<cplx>(next.amplitudes().data(), next.amplitudes().data() + 2);
  const RunResult second = run_protective(d);
  CHECK(first.pointer_centroid - first.r0 == doctest::Approx(std::cos(M_PI / 3)).epsilon(0.02));
  CHECK(second.pointer_centroid - second.r0 == doctest::Approx(std::sin(M_PI / 3)).epsilon(0.02));
}

TEST_CASE("readout") {
  const PointerGrid grid(256, -20, 20);
  const StateVector still = tensor_product(spin_state(0.4), gaussian_packet(grid, 1.5, 1.0));
  const PointerReadout a = readout(still, grid);
  CHECK(a.centroid == doctest::Approx(1.5).epsilon(1e-6));
  CHECK(a.width == doctest::Approx(1.0).epsilon(0.02));

  const StateVector moved = impulsive_propagator(pop('i'), grid, still, 2.5);
  CHECK(readout(moved, grid).centroid == doctest::Approx(4.0).epsilon(1e-6));

  const StateVector edge = tensor_product(spin_state(0.4), gaussian_packet(grid, 17.0, 1.0));
  CHECK_THROWS_AS(readout(edge, grid), WraparoundError);
}

TEST_CASE("readout follows free Gaussian spreading") {
  // |phi|^2 RMS sigma means psi ~ exp(-r^2 / (4 sigma^2)); under p^2/2m the
  // RMS width grows as sqrt(sigma^2 + (T / (2 m sigma))^2).
  MeasurementConfig c;
  c.pointer = {512, -40, 40};
  c.h_system = op::Pauli{'z', -1.0};
  c.q_system = op::Zero{};
  c.h_apparatus = op::FreeParticle{1.0};
  c.profile.shape = ProfileShape::rectangular;
  c.T = 6.0;
  c.tolerance = 1e-9;
  const RunResult r = run_protective(c);
  const double sigma = 1.0, m = 1.0;
  CHECK(r.pointer_width == doctest::Approx(std::sqrt(sigma * sigma + std::pow(c.T / (2 * m * sigma), 2))).epsilon(0.02));
}

TEST_CASE("construct_y_operator") {
  const PointerGrid grid(16, -4, 4);
  const HermitianOperator q = translation_generator(grid);
  const HermitianOperator h = build_operator(op::FreeParticle{1.0}, 16, &grid, "h");
  RVector v = RVector::LinSpaced(16, 0.0, 3.0).array().square();
  const HermitianOperator hd = HermitianOperator::diagonal(v);
  const HermitianOperator qd = HermitianOperator::diagonal(RVector::LinSpaced(16, -1.0, 2.0));
  CHECK(max_abs(construct_y_operator(qd, hd).matrix() - qd.matrix()) < 1e-10);

  CHECK(max_abs(construct_y_operator(pop('z'), pop('x')).matrix()) < 1e-12);

  const HermitianOperator ha(pauli('z') + 0.3 * pauli('x'));
  const HermitianOperator y = construct_y_operator(pop('z'), ha);
  // explicit 2x2 diagonalization: eigenvectors of [[1, .3], [.3, -1]]
  const double e = std::sqrt(1 + 0.09);
  for (double lambda : {-e, e}) {
    CVector a(2);
    a << 0.3, lambda - 1.0;
    a.normalize();
    const double yj = (a.adjoint() * pauli('z') * a)(0).real();
    CHECK(max_abs(y.matrix() * a - yj * a) < 1e-10);
  }
  CHECK(commute(y, ha));
  CHECK_THROWS_AS(construct_y_operator(pop('z'), HermitianOperator::identity(2)), PreconditionError);
  (void)q;
  (void)h;
}

TEST_CASE("generalized mode reduces to protective mode when [Q_A, H_A] = 0") {
  constexpr int n = 32;
  MeasurementConfig c;
  c.mode = Mode::generalized;
  c.apparatus_dim = n;
  c.pointer.n_points = n;
  c.T = 200;
  c.profile.shape = ProfileShape::rectangular;
  c.h_system = op::Pauli{'z', -1.0};
  c.q_system = op::Pauli{'z', 1.0};
  std::vector<double> energies(n), charges(n);
  for (int j = 0; j < n; ++j) {
    energies[j] = 0.3 * j * (1 + 0.05 * j);
    charges[j] = (j - (n - 1) / 2.0) * 2 * M_PI / (n * 0.25);
  }
  c.h_apparatus = op::Diagonal{energies};
  c.q_apparatus = op::Diagonal{charges};
  c.packet = {-0.5, 0.5};
  const HermitianOperator qa = build_operator(c.q_apparatus, n, nullptr, "q");
  const HermitianOperator ha = build_operator(c.h_apparatus, n, nullptr, "h");
  CHECK(max_abs(construct_y_operator(qa, ha).matrix() - qa.matrix()) < 1e-10);
  const RunResult r = run_generalized(c);
  CHECK(r.pointer_centroid - r.initial_centroid == doctest::Approx(1.0).epsilon(0.01));
  CHECK(r.disturbance < 1e-8);
}

TEST_CASE("generalized mode with non-commuting apparatus") {
  const RunResult small = run_generalized(generalized_benchmark_config(10 * M_PI));
  const RunResult big = run_generalized(generalized_benchmark_config(2000 * M_PI));
  CHECK(big.pointer_centroid - big.initial_centroid == doctest::Approx(0.5).epsilon(0.05));
  CHECK(small.validity > big.validity);
  CHECK(small.disturbance > big.disturbance);
  CHECK(small.validity_flag);
}

TEST_CASE("generalized mode errors") {
  MeasurementConfig c = generalized_benchmark_config(100);
  c.q_apparatus = op::Zero{};
  CHECK_THROWS_AS(run_generalized(c), SetupError);
  c = generalized_benchmark_config(100);
  c.apparatus_dim = 128;
  c.pointer.n_points = 128;
  c.h_apparatus = op::Diagonal{std::vector<double>(128, 0.0)};
  CHECK_THROWS(run_generalized(c));
}

TEST_CASE("RunResult invariants") {
  MeasurementConfig c = qubit_benchmark_config(M_PI / 3);
  c.tolerance = 1e-9;
  for (double T : {5 * M_PI / 2, 51 * M_PI / 2}) {
    c.T = T;
    const RunResult r = run(c);
    CHECK(r.disturbance >= 0.0);
    CHECK(r.disturbance <= 1.0);
    CHECK(r.entanglement_entropy >= -1e-12);
    CHECK(r.entanglement_entropy <= std::log(2.0) + 1e-8);
    CHECK(r.report.norm_drift < 1e-8);
    CHECK(r == r);
  }
}
