#pragma once

#include <cmath>
#include <random>

#include "pmsim/hilbert.hpp"

namespace testing {

using pmsim::cplx;
using pmsim::CMatrix;
using pmsim::CVector;
using pmsim::HermitianOperator;
using pmsim::StateVector;

inline CMatrix pauli(char axis) {
  CMatrix m = CMatrix::Zero(2, 2);
  switch (axis) {
    case 'x': m(0, 1) = m(1, 0) = 1.0; break;
    case 'y': m(0, 1) = cplx(0, -1); m(1, 0) = cplx(0, 1); break;
    case 'z': m(0, 0) = 1.0; m(1, 1) = -1.0; break;
    default: m = CMatrix::Identity(2, 2);
  }
  return m;
}

inline HermitianOperator pop(char axis) { return HermitianOperator(pauli(axis)); }

/// cos(theta/2)|0> + sin(theta/2)|1>
inline StateVector spin_state(double theta) {
  CVector v(2);
  v << std::cos(theta / 2), std::sin(theta / 2);
  return StateVector(v);
}

inline StateVector qubit(cplx a, cplx b) {
  CVector v(2);
  v << a, b;
  return StateVector(v);
}

inline CMatrix random_hermitian(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  const auto k = static_cast<Eigen::Index>(n);
  CMatrix a(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) a(i, j) = cplx(d(rng), d(rng));
  return (a + a.adjoint()) / 2.0;
}

template <typename Derived>
double max_abs(const Eigen::MatrixBase<Derived>& m) {
  return m.cwiseAbs().maxCoeff();
}

}  // namespace testing
