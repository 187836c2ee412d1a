#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "pmsim/analysis.hpp"
#include "pmsim/dynamics.hpp"
#include "pmsim/errors.hpp"

using namespace pmsim;
using namespace testing;

namespace {

HermitianOperator tilted(double theta, double gap = 2.0) {
  return HermitianOperator(-gap / 2 * (std::sin(theta) * pauli('x') + std::cos(theta) * pauli('z')));
}

CVector exact_exponential(const HermitianOperator& h, const CVector& psi, double t) {
  const Spectrum& s = h.spectrum();
  const CVector phases = (s.values * cplx(0, -t)).array().exp();
  return s.vectors * phases.asDiagonal() * (s.vectors.adjoint() * psi);
}

double simpson(const CouplingProfile& p, int n) {
  const double h = p.total_time() / n;
  double sum = p(0) + p(p.total_time());
  for (int k = 1; k < n; ++k) sum += (k % 2 ? 4.0 : 2.0) * p(k * h);
  return sum * h / 3;
}

}  // namespace

TEST_CASE("sine-squared profile") {
  const double T = 40.0, f = 0.1;
  const CouplingProfile p(T, ProfileShape::sine_squared_ramp, f);
  CHECK(evaluate_profile(p, 0.0) == 0.0);
  CHECK(std::abs(evaluate_profile(p, T)) < 1e-15);
  // ramps of area fT/2 each: h (T - 2fT) + h fT = 1
  CHECK(std::abs(evaluate_profile(p, T / 2) - 1.0 / (T * (1 - f))) < 1e-12);
  CHECK(p.plateau_height() * T == doctest::Approx(1.0 / (1 - f)));
  CHECK(std::abs(simpson(p, 20000) - 1.0) < 1e-8);
  CHECK(std::abs(p.integral(T) - 1.0) < 1e-12);
  for (double t : {0.3, 2.0, 3.9, 4.0, 20.0, 37.0, 39.99}) CHECK(p(t) >= 0.0);
  CHECK_THROWS_AS(evaluate_profile(p, -1e-9), DomainError);
  CHECK_THROWS_AS(evaluate_profile(p, T * (1 + 1e-9)), DomainError);
}

TEST_CASE("profile cell averages integrate to one at the step size") {
  const CouplingProfile p(25.0, ProfileShape::sine_squared_ramp, 0.1);
  for (long n : {16L, 100L, 4096L}) {
    const double dt = p.total_time() / n;
    double sum = 0.0;
    for (long k = 0; k < n; ++k) sum += p.average(k * dt, (k + 1) * dt) * dt;
    CHECK(std::abs(sum - 1.0) < 1e-10);
  }
}

TEST_CASE("rectangular profile") {
  const CouplingProfile p = CouplingProfile::rectangular(8.0);
  for (double t : {0.1, 1.0, 4.0, 7.9}) CHECK(evaluate_profile(p, t) == 1.0 / 8.0);
}

TEST_CASE("profile validation") {
  CHECK_THROWS_AS(CouplingProfile(0.0), DomainError);
  CHECK_THROWS_AS(CouplingProfile(1.0, ProfileShape::sine_squared_ramp, 0.5), DomainError);
}

TEST_CASE("assemble") {
  const CompositeHamiltonian zero(HermitianOperator::zero(2), HermitianOperator::zero(3), HermitianOperator::zero(2),
                                  HermitianOperator::zero(3), CouplingProfile::rectangular(1.0));
  CHECK(max_abs(assemble(zero, 0.5).matrix()) == 0.0);

  const CompositeHamiltonian decoupled(pop('z'), HermitianOperator::zero(4), pop('x'), HermitianOperator(random_hermitian(4, 3)),
                                       CouplingProfile(10.0));
  CHECK(max_abs(assemble(decoupled, 0.0).matrix() - kron(pauli('z'), CMatrix::Identity(4, 4))) == 0.0);

  // 2x4 against a hand-rolled Kronecker construction
  const double T = 5.0;
  const CMatrix hs = random_hermitian(2, 21), ha = random_hermitian(4, 22), qs = random_hermitian(2, 23),
                qa = random_hermitian(4, 24);
  const CompositeHamiltonian h(HermitianOperator(hs), HermitianOperator(ha), HermitianOperator(qs), HermitianOperator(qa),
                               CouplingProfile::rectangular(T));
  const CMatrix got = assemble(h, 2.0).matrix();
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 4; ++l) {
          cplx e = qs(i, k) * qa(j, l) / T;
          if (j == l) e += hs(i, k);
          if (i == k) e += ha(j, l);
          CHECK(std::abs(got(i * 4 + j, k * 4 + l) - e) < 1e-14);
        }
  for (double t : {0.0, 1.3, T}) CHECK(max_abs(assemble(h, t).matrix() - assemble(h, t).matrix().adjoint()) < 1e-12);
}

TEST_CASE("assemble rejects mismatched dimensions") {
  CHECK_THROWS_AS(CompositeHamiltonian(pop('z'), HermitianOperator::zero(3), HermitianOperator::zero(3),
                                       HermitianOperator::zero(3), CouplingProfile(1.0)),
                  ValidationError);
}

TEST_CASE("free eigenstate evolution is a global phase") {
  const PointerGrid grid(64, -8, 8);
  const StateVector phi = gaussian_packet(grid, 0.0, 1.0);
  const StateVector init = tensor_product(StateVector::basis({2}, 0), phi);
  const double T = 7.3;
  // g = 0 via a zero coupling operator
  const CompositeHamiltonian free(pop('z'), HermitianOperator::zero(64), HermitianOperator::zero(2),
                                  HermitianOperator::zero(64), CouplingProfile(T));
  const Propagation out = propagate(free, init, 64);
  CHECK(max_abs(out.state.amplitudes() - std::exp(cplx(0, -T)) * init.amplitudes()) < 1e-10);
  CHECK(std::abs(init.amplitudes().dot(out.state.amplitudes())) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("rectangular profile matches the exact exponential") {
  const PointerGrid grid(32, -4, 4);
  const double T = 3.0;
  const CompositeHamiltonian h(tilted(0.7), HermitianOperator(random_hermitian(32, 9) * 0.1), pop('z'),
                               translation_generator(grid), CouplingProfile::rectangular(T));
  const StateVector init = tensor_product(spin_state(0.3), gaussian_packet(grid, 0.0, 1.0));
  const StateVector sliced = time_ordered_product(h, init, 4096);
  const CVector exact = exact_exponential(assemble_with_coupling(h, 1.0 / T), init.amplitudes(), T);
  CHECK(max_abs(sliced.amplitudes() - exact) < 1e-8);
}

TEST_CASE("dense and apparatus-block paths agree") {
  const PointerGrid grid(64, -8, 8);
  const CompositeHamiltonian h(tilted(1.0), HermitianOperator::zero(64), pop('z'), translation_generator(grid),
                               CouplingProfile(12.0));
  const StateVector init = tensor_product(spin_state(0.2), gaussian_packet(grid, 0.0, 1.5));
  const StateVector a = time_ordered_product(h, init, 256, true);
  const StateVector b = time_ordered_product(h, init, 256, false);
  CHECK(max_abs(a.amplitudes() - b.amplitudes()) < 1e-11);
}

TEST_CASE("second-order convergence on a smooth profile") {
  const PointerGrid grid(64, -8, 8);
  const CompositeHamiltonian h(tilted(M_PI / 3), HermitianOperator::zero(64), pop('z'), translation_generator(grid),
                               CouplingProfile(20.0));
  const StateVector init = tensor_product(StateVector::basis({2}, 0), gaussian_packet(grid, 0.0, 1.5));
  const CVector a = time_ordered_product(h, init, 64).amplitudes();
  const CVector b = time_ordered_product(h, init, 128).amplitudes();
  const CVector c = time_ordered_product(h, init, 256).amplitudes();
  const double order = step_doubling_order(a, b, c);
  CHECK(order > 1.8);
  CHECK(order < 2.2);
  // halving the step reduces the error estimate by about 4
  const CVector d = time_ordered_product(h, init, 512).amplitudes();
  const double ratio = max_abs(b - c) / max_abs(c - d);
  CHECK(ratio == doctest::Approx(4.0).epsilon(0.15));
}

TEST_CASE("propagate reports and refines") {
  const PointerGrid grid(64, -8, 8);
  const CompositeHamiltonian h(tilted(M_PI / 3), HermitianOperator::zero(64), pop('z'), translation_generator(grid),
                               CouplingProfile(20.0));
  const StateVector init = tensor_product(StateVector::basis({2}, 0), gaussian_packet(grid, 0.0, 1.5));
  PropagateOptions o;
  o.tolerance = 1e-9;
  const Propagation p = propagate(h, init, 16, o);
  CHECK(p.report.richardson_error_estimate < 1e-9);
  CHECK(p.report.norm_drift < 1e-10);
  CHECK(p.report.n_steps >= 16);
  CHECK(p.report.step_size == doctest::Approx(20.0 / p.report.n_steps));
  CHECK(p.state.amplitudes().norm() == doctest::Approx(1.0).epsilon(1e-10));

  CHECK_THROWS_AS(propagate(h, init, 8), ValidationError);
  o.max_steps = 64;
  o.tolerance = 1e-14;
  CHECK_THROWS_AS(propagate(h, init, 16, o), ConvergenceError);
  try {
    propagate(h, init, 16, o);
  } catch (const ConvergenceError& e) {
    CHECK(e.last_estimate() > 1e-14);
    CHECK(e.last_steps() == 64);
  }
}

TEST_CASE("split-operator path agrees with the dense propagator") {
  const PointerGrid grid(64, -16, 16);
  RVector v = 0.02 * grid.r_values().array().square();
  const HermitianOperator hs = tilted(0.9);
  const GridHamiltonian g{hs, pop('z'), grid, v, CouplingProfile(15.0)};
  const StateVector init = tensor_product(StateVector::basis({2}, 0), gaussian_packet(grid, 0.5, 2.0));
  const StateVector split = split_product(g, init, 2048);
  const CompositeHamiltonian dense(hs, HermitianOperator::diagonal(v), pop('z'), translation_generator(grid),
                                   CouplingProfile(15.0));
  const StateVector ref = time_ordered_product(dense, init, 2048, true);
  CHECK(max_abs(split.amplitudes() - ref.amplitudes()) < 1e-5);
  const Propagation p = propagate_split(g, init, 64);
  CHECK(p.report.method == PropagationMethod::split_operator);
  CHECK(p.report.norm_drift < 1e-10);
}

TEST_CASE("impulsive propagator: eigenstate input gives one shifted packet") {
  const PointerGrid grid(256, -20, 20);
  const StateVector init = tensor_product(StateVector::basis({2}, 1), gaussian_packet(grid, 2.0, 1.0));
  const StateVector out = impulsive_propagator(pop('z'), grid, init);
  CHECK(std::abs(von_neumann_entropy(partial_trace(out, 0))) < 1e-10);
  const Moments m = moments(grid.r_values(), marginal_probabilities(out, 1));
  CHECK(m.mean == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("impulsive propagator: superposition entropy follows the packet overlap") {
  const PointerGrid grid(1024, -20, 20);
  const double sigma = 0.3;
  const StateVector init = tensor_product(qubit(1.0, 1.0), gaussian_packet(grid, 0.0, sigma));
  const StateVector out = impulsive_propagator(pop('z'), grid, init);
  // reduced state [[1/2, o/2], [o/2, 1/2]] with o = exp(-(ds)^2 / (8 sigma^2)) for |phi|^2 of RMS sigma
  const double o = std::exp(-4.0 / (8 * sigma * sigma));
  const double l1 = (1 + o) / 2, l2 = (1 - o) / 2;
  const double expected = -l1 * std::log(l1) - l2 * std::log(l2);
  CHECK(von_neumann_entropy(partial_trace(out, 0)) == doctest::Approx(expected).epsilon(1e-6));
  CHECK(expected == doctest::Approx(std::log(2.0)).epsilon(1e-3));
}

TEST_CASE("impulsive propagator matches the generic propagator") {
  const PointerGrid grid(64, -16, 16);
  const StateVector init = tensor_product(spin_state(1.1), gaussian_packet(grid, 0.0, 2.5));
  const CompositeHamiltonian h(HermitianOperator::zero(2), HermitianOperator::zero(64), pop('z'), translation_generator(grid),
                               CouplingProfile::rectangular(1.0));
  const StateVector a = impulsive_propagator(pop('z'), grid, init);
  const StateVector b = propagate(h, init, 16).state;
  CHECK(max_abs(a.amplitudes() - b.amplitudes()) < 1e-8);
}

TEST_CASE("impulsive propagator refuses shifts that leave the box") {
  const PointerGrid grid(64, -8, 8);
  const StateVector init = tensor_product(qubit(1.0, 1.0), gaussian_packet(grid, 0.0, 1.0));
  CHECK_THROWS_AS(impulsive_propagator(pop('z'), grid, init, 6.0), SizingError);
}

TEST_CASE("first-order prediction") {
  const PointerGrid grid(32, -8, 8);
  const auto make = [&](const HermitianOperator& hs, const HermitianOperator& qs) {
    return CompositeHamiltonian(hs, HermitianOperator::zero(32), qs, translation_generator(grid), CouplingProfile(100.0));
  };
  CHECK(first_order_prediction(make(HermitianOperator(-pauli('z')), pop('z')), 0).shift == doctest::Approx(1.0));

  const double theta = M_PI / 3;
  const HermitianOperator hs = tilted(theta);
  // 2x2 ground state of -sigma.n: (cos(theta/2), sin(theta/2))
  const StateVector ground = spin_state(theta);
  const auto p = first_order_prediction(make(hs, pop('z')), 0);
  CHECK(p.shift == doctest::Approx(expectation(ground, pop('z'))).epsilon(1e-12));
  CHECK(p.shift == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(p.final_phase == doctest::Approx(-1.0 * 100.0));
  // validity: |<e|sz|g>| qmax / (T gap)
  const double qmax = translation_generator(grid).spectral_radius();
  CHECK(p.validity == doctest::Approx(std::sin(theta) * qmax / (100.0 * 2.0)).epsilon(1e-10));

  const CMatrix q = random_hermitian(2, 77);
  const HermitianOperator qs(q - q.trace() / 2.0 * CMatrix::Identity(2, 2));
  CHECK(first_order_prediction(make(HermitianOperator(-pauli('z')), qs), 0).shift ==
        doctest::Approx(expectation(StateVector::basis({2}, 0), qs)).epsilon(1e-12));

  CHECK_THROWS_AS(first_order_prediction(make(HermitianOperator::identity(2), pop('z')), 0), PreconditionError);
}

TEST_CASE("commuting case: propagated shift equals the prediction at any T") {
  const PointerGrid grid(128, -16, 16);
  for (double T : {1.0, 10.0, 300.0}) {
    const CompositeHamiltonian h(HermitianOperator(-pauli('z')), HermitianOperator::zero(128), pop('z'),
                                 translation_generator(grid), CouplingProfile(T));
    const StateVector init = tensor_product(StateVector::basis({2}, 0), gaussian_packet(grid, 0.0, 1.0));
    const Propagation out = propagate(h, init, 16);
    const double shift = moments(grid.r_values(), marginal_probabilities(out.state, 1)).mean;
    CHECK(std::abs(shift - first_order_prediction(h, 0).shift) < 1e-6);
  }
}

TEST_CASE("commute") {
  CHECK(commute(pop('z'), HermitianOperator(-pauli('z'))));
  CHECK_FALSE(commute(pop('z'), pop('x')));
}
